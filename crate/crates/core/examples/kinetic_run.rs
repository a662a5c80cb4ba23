//! Deterministic coagulation-fragmentation run: moments, mass drift and the
//! second-moment envelope.

use cf_lab::kinetic::{simulate, stability_limit, SolverConfig};
use cf_lab::model::{make_initial, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};
use cf_lab::verification::second_moment_envelope;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SizeGrid::new(0.125, 256)?;
    let init = make_initial(&InitialProfile::Monodisperse { mass: 1.0, size: 1.0 }, grid)?;
    let spec = KernelSpec::for_grid(0.1, &grid)?;
    let scenario = ScenarioParams::from_distribution(&init)?;
    let dt = 2.5e-4_f64.min(stability_limit(&grid, scenario.mass(), &spec));
    let cfg = SolverConfig::new(dt, 0.6, 200, spec, scenario)?;
    let traj = simulate(&cfg, &init)?;

    println!("T* = {:.3}, dt = {dt:.2e}", scenario.t_star());
    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "t", "m0", "m1", "m2", "envelope");
    for (t, m) in traj.moments.times.iter().zip(&traj.moments.moments) {
        let env = second_moment_envelope(scenario.m2_0(), *t)?;
        println!("{t:>6.3} {:>12.6} {:>12.9} {:>12.6} {:>12.6}", m[0], m[1], m[2], env);
    }
    println!("max mass drift {:.2e}", traj.max_mass_drift());
    println!("max top-bin occupancy {:.2e}", traj.max_top_bin_occupancy());
    Ok(())
}

//! Marcus-Lushnikov ensemble compared with the deterministic solver.

use cf_lab::kinetic::{simulate, SolverConfig};
use cf_lab::model::{make_initial, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};
use cf_lab::stochastic::{default_volume, ensemble_moments};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SizeGrid::new(1.0, 64)?;
    let init = make_initial(&InitialProfile::Monodisperse { mass: 1.0, size: 1.0 }, grid)?;
    let spec = KernelSpec::for_grid(0.1, &grid)?;
    let times = [0.0, 0.1, 0.2, 0.3];

    let ens = ensemble_moments(&init, default_volume(&init), &spec, &times, 100, 42)?;
    let cfg = SolverConfig::new(5e-4, 0.3, 200, spec, ScenarioParams::from_distribution(&init)?)?;
    let traj = simulate(&cfg, &init)?;

    println!("{:>5} {:>10} {:>10} {:>10} {:>10}", "t", "ML m2", "stderr", "ODE m2", "z");
    for (i, t) in times.iter().enumerate() {
        let j = traj.moments.times.iter().position(|s| (s - t).abs() < 1e-9).unwrap();
        let ode = traj.moments.moments[j][2];
        let (mean, se) = (ens.mean[i][2], ens.stderr[i][2]);
        let z = if se > 0.0 { (mean - ode) / se } else { 0.0 };
        println!("{t:>5.2} {mean:>10.5} {se:>10.2e} {ode:>10.5} {z:>10.2}");
    }
    Ok(())
}

//! Closed moment equations against the measured moment rates of a kinetic run.

use cf_lab::kinetic::{simulate, SolverConfig};
use cf_lab::model::{make_initial, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};
use cf_lab::numerics::centered_derivative;
use cf_lab::verification::{fragmentation_coefficient, moment_ode_rhs};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.2;
    println!("c2 = {:.6}, c3 = {:.6}", fragmentation_coefficient(2)?, fragmentation_coefficient(3)?);
    for ds in [0.25, 0.125, 0.0625] {
        let grid = SizeGrid::new(ds, (32.0 / ds) as usize)?;
        let init = make_initial(&InitialProfile::Exponential { mass: 1.0, lambda: 2.0 }, grid)?;
        let spec = KernelSpec::for_grid(eps, &grid)?;
        let cfg = SolverConfig::new(2.5e-4, 0.2, 1, spec, ScenarioParams::from_distribution(&init)?)?;
        let s = simulate(&cfg, &init)?.moments;
        let i = s.len() / 2;
        let mut line = format!("ds = {ds:<7}");
        for k in [2, 3] {
            let rate = centered_derivative(
                [s.times[i - 1], s.times[i], s.times[i + 1]],
                [s.moments[i - 1][k], s.moments[i][k], s.moments[i + 1][k]],
            );
            let predicted = moment_ode_rhs(&s.moments[i], eps, k)?;
            line += &format!(" dm{k}/dt {rate:.6} closed form {predicted:.6} diff {:+.2e}", rate - predicted);
        }
        println!("{line}");
    }
    Ok(())
}

//! A priori bounds evaluated on a kinetic trajectory.

use cf_lab::bernstein::{default_x_grid, BernsteinField};
use cf_lab::kinetic::{simulate, SolverConfig};
use cf_lab::model::{make_initial, InitialProfile, KernelSpec, ScenarioParams, SizeGrid};
use cf_lab::verification::{a_priori_cap, a_priori_cap_check, derivative_bounds_check, envelope_check, holder_bounds_check};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let eps = 0.1;
    let grid = SizeGrid::new(0.25, 128)?;
    let init = make_initial(&InitialProfile::Monodisperse { mass: 1.0, size: 1.0 }, grid)?;
    let scenario = ScenarioParams::from_distribution(&init)?;
    let spec = KernelSpec::for_grid(eps, &grid)?;
    let cfg = SolverConfig::new(5e-4, 0.5, 50, spec, scenario)?;
    let traj = simulate(&cfg, &init)?;
    let (times, moments) = (&traj.moments.times, &traj.moments.moments);
    let m2: Vec<f64> = moments.iter().map(|m| m[2]).collect();

    let field = BernsteinField::from_trajectory(&traj, &default_x_grid(40))?.restrict_times(0.4);
    let mut reports = vec![
        envelope_check(times, &m2, scenario.m2_0())?,
        holder_bounds_check(times, moments),
        a_priori_cap_check(times, moments, scenario.mass(), eps)?,
    ];
    reports.extend(derivative_bounds_check(&field, &scenario, 0.4)?);

    println!("a priori m2 cap = {:.4}", a_priori_cap(scenario.mass(), eps)?);
    for r in reports {
        println!("{:<26} {} worst margin {:.3e} ({} evaluations)", r.name, r.status, r.worst_margin, r.evaluations);
    }
    Ok(())
}

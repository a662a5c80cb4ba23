//! Bernstein transform of a distribution, its derivatives and a complete
//! monotonicity check.

use cf_lab::bernstein::{complete_monotonicity_report, derivative, transform, MonotonicitySource};
use cf_lab::model::{make_initial, InitialProfile, SizeGrid};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = SizeGrid::new(0.25, 128)?;
    let dist = make_initial(&InitialProfile::Exponential { mass: 1.0, lambda: 2.0 }, grid)?;
    let xs = [0.0, 0.1, 0.5, 1.0, 2.0, 5.0, 10.0];
    let field = transform(&dist, &xs, 0.0)?;

    println!("{:>6} {:>12} {:>12} {:>12} {:>12}", "x", "F", "Fx", "Fxx", "d3F");
    for (i, x) in xs.iter().enumerate() {
        println!(
            "{x:>6.2} {:>12.6} {:>12.6} {:>12.6} {:>12.6}",
            field.f[0][i],
            field.fx[0][i],
            field.fxx[0][i],
            derivative(&dist, *x, 3)
        );
    }
    let report = complete_monotonicity_report(MonotonicitySource::Exact(&dist), 6, &xs)?;
    println!(
        "complete monotonicity up to order 6: {} ({} evaluations, {} violations)",
        report.pass,
        report.evaluations,
        report.violations.len()
    );
    Ok(())
}

//! Sup-norm gap between the perturbed kinetic solution and the limiting
//! characteristics solution as `eps` decreases.

use std::time::Instant;

use cf_lab::experiment::{run_convergence, ConvergenceSetup};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let setup = ConvergenceSetup::standard(vec![0.2, 0.1, 0.05]);
    let start = Instant::now();
    let outcome = run_convergence(&setup)?;
    for g in &outcome.gaps {
        println!("eps = {:<5} gap = {:.3e} at x = {:.3}, t = {:.3} (dt = {:.1e})", g.eps, g.gap, g.x, g.t, g.dt);
    }
    println!(
        "strictly decreasing: {} ({:.1} s)",
        outcome.strictly_decreasing(),
        start.elapsed().as_secs_f64()
    );
    Ok(())
}

//! Characteristics of the limiting equation from monodisperse data and the
//! reconstructed solution at a few times.

use cf_lab::characteristics::{fan_starts, integrate_fan, monotone_derivative_checks, Monodisperse};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (m, t_end) = (1.0, 0.6);
    let starts = fan_starts(m, t_end, 5.0, 1000);
    let fan = integrate_fan(&Monodisperse { mass: m }, &starts, t_end, 1e-3, m)?;
    println!("T* = {:.3}, compression = {:.3}", fan.t_star, fan.compression());

    for t in [0.0, 0.2, 0.4, 0.6] {
        let (f1, fx1, fxx1) = fan.reconstruct_full(1.0, t)?;
        let (f3, fx3, _) = fan.reconstruct_full(3.0, t)?;
        println!("t = {t:.1}: F(1) = {f1:.5} Fx(1) = {fx1:.5} Fxx(1) = {fxx1:.5} | F(3) = {f3:.5} Fx(3) = {fx3:.5}");
    }
    for r in monotone_derivative_checks(&fan) {
        println!("{:<20} {} worst margin {:.2e}", r.name, r.status, r.worst_margin);
    }
    Ok(())
}

//! Rotating-wave view of a small optical damping: the optimum-quadrature
//! spectrum, the squeezing angle, and the gain in the absolute minimum.

use std::f64::consts::TAU;

use spinsqz::spectrum::{rwa_global_minimum, rwa_min_approx, rwa_optimum_psd, rwa_phi_min, to_db};
use spinsqz::ModeParams;

fn main() -> spinsqz::Result<()> {
    let gamma = TAU * 52e3;
    for zeta in [0.0, 0.054, 0.1] {
        let mode = ModeParams::with_cooperativity(TAU * 1.4e6, gamma, 15.0, zeta, 0.9)?;
        let (detuning, exact) = rwa_global_minimum(&mode)?;
        println!(
            "zeta = {zeta:5.3}: minimum {:.2} dB at |ΔΩ|/2π = {:.1} kHz (small-zeta estimate {:.2} dB)",
            to_db(exact),
            detuning / TAU / 1e3,
            to_db(rwa_min_approx(&mode)),
        );
    }

    let mode = ModeParams::with_cooperativity(TAU * 1.4e6, gamma, 15.0, 0.054, 0.9)?;
    let grid: Vec<f64> = (-5..=5)
        .map(|k| mode.omega + TAU * 20e3 * k as f64)
        .collect();
    let opt = rwa_optimum_psd(&mode, &grid)?;
    let phi = rwa_phi_min(&mode, &grid)?;
    println!("\nΔΩ/2π [kHz]  φ_min [rad]  S_min [dB]");
    for ((w, p), s) in grid.iter().zip(&phi).zip(&opt.values_sn) {
        println!(
            "{:11.0}  {:11.3}  {:10.2}",
            (w - mode.omega) / TAU / 1e3,
            p,
            to_db(*s)
        );
    }
    Ok(())
}

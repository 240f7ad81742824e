//! Squeezing with a large measurement rate, with the fast-decaying spin modes
//! represented either as Gaussian extraneous P-noise or as a broad oscillator.

use std::f64::consts::TAU;

use spinsqz::spectrum::{dc_p_quadrature_level, fast_mode_as_oscillator, min_over_angle, to_db};
use spinsqz::{EnsembleModel, ExtraneousNoise, ModeParams};

fn main() -> spinsqz::Result<()> {
    let slow = ModeParams::with_cooperativity(TAU * 1.09e6, TAU * 2e6, 8.0, 0.18, 0.9)?;
    let base = EnsembleModel::single(slow, 0.91)?;
    println!(
        "P-quadrature level far below resonance: {:.2} SN",
        dc_p_quadrature_level(slow.gamma_meas, slow.omega, base.eta())
    );

    let grid: Vec<f64> = (1..=200).map(|k| TAU * 20e3 * k as f64).collect();
    let gaussian =
        base.clone()
            .with_extraneous(Some(ExtraneousNoise::new(0.7, TAU * 300e3, slow.omega)?))?;
    let fast = ModeParams::new(TAU * 1.09e6, TAU * 300e3, TAU * 60e3, 0.0, 0.9)?;
    let oscillator = fast_mode_as_oscillator(&base, fast)?;

    for (name, model) in [
        ("no fast modes", &base),
        ("gaussian noise", &gaussian),
        ("broad oscillator", &oscillator),
    ] {
        let (env, _) = min_over_angle(model, &grid, true)?;
        let below = env.values_sn.iter().filter(|v| **v < 1.0).count();
        let (w, s) = env.minimum();
        println!(
            "{name:>17}: best {:.2} dB at {:.0} kHz, squeezed in {below}/{} bins",
            to_db(s),
            w / TAU / 1e3,
            env.len()
        );
    }
    Ok(())
}

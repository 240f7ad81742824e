//! Synthetic round trip: two hybridized modes, fifteen detection angles, one
//! global fit started away from the truth.

use std::f64::consts::{PI, TAU};

use spinsqz::fit::{global_fit, synthesize_dataset, FitProblem};
use spinsqz::{EnsembleModel, ModeParams};

fn main() -> spinsqz::Result<()> {
    let gamma = TAU * 52e3;
    let a = ModeParams::with_cooperativity(TAU * 1.400e6, 0.862 * gamma, 12.0, 0.054, 0.9)?;
    let b = ModeParams::with_cooperativity(TAU * 1.418e6, 0.138 * gamma, 4.0, 0.054, 0.9)?;
    let truth = EnsembleModel::new(vec![a, b], 0.91)?;

    let grid: Vec<f64> = (0..300).map(|k| TAU * (1.25e6 + 1e3 * k as f64)).collect();
    let angles: Vec<f64> = (0..15).map(|k| k as f64 * PI / 15.0).collect();
    let data = synthesize_dataset(&truth, &angles, &grid, 1e3, 2024)?;

    let start_modes = truth
        .modes()
        .iter()
        .zip([1.2, 0.8])
        .map(|(m, f)| ModeParams {
            gamma_meas: m.gamma_meas * f,
            gamma0: m.gamma0 / f,
            zeta: m.zeta * f,
            ..*m
        })
        .collect();
    let start = truth.clone().with_modes(start_modes)?;
    let result = global_fit(&FitProblem::new(data, start)?)?;

    println!(
        "{:?} after {} iterations, cost {:.1} for {} points",
        result.termination, result.iterations, result.cost, result.n_points
    );
    for p in result
        .parameters
        .iter()
        .filter(|p| !p.name.starts_with("phi"))
    {
        println!(
            "{:>14} = {:>14.6e} ± {:.1e}",
            p.name,
            p.value,
            p.standard_error.unwrap_or(f64::NAN)
        );
    }
    let fitted: Vec<f64> = result
        .model
        .modes()
        .iter()
        .map(|m| m.derived().c_q)
        .collect();
    println!(
        "Γ_total/2π = {:.2} kHz, C_q = {:.2} and {:.2}",
        result.model.total_measurement_rate() / TAU / 1e3,
        fitted[0],
        fitted[1]
    );
    Ok(())
}

//! PSD of a single spin oscillator at several detection angles, with the
//! numeric lower envelope and its closed-form estimate.

use std::f64::consts::{PI, TAU};

use spinsqz::spectrum::{min_over_angle, optimum_envelope, to_db};
use spinsqz::{homodyne_psd, EnsembleModel, ModeParams, SpectrumRequest};

fn main() -> spinsqz::Result<()> {
    let mode = ModeParams::with_cooperativity(TAU * 1.0e6, TAU * 13e3, 11.0, 0.0, 0.9)?;
    let model = EnsembleModel::single(mode, 0.91)?;
    let grid: Vec<f64> = (0..401).map(|k| TAU * (0.9e6 + 500.0 * k as f64)).collect();
    let angles: Vec<f64> = (0..17).map(|k| k as f64 * PI / 17.0).collect();

    let traces = homodyne_psd(&model, &SpectrumRequest::new(grid.clone(), angles))?;
    println!("angle [rad]  min PSD [dB]  at [kHz]");
    for t in &traces {
        let (w, v) = t.minimum();
        println!(
            "{:10.3}  {:12.2}  {:8.1}",
            t.angle.unwrap(),
            to_db(v),
            w / TAU / 1e3
        );
    }

    let (numeric, _) = min_over_angle(&model, &grid, true)?;
    let closed = optimum_envelope(&mode, model.eta(), &grid);
    let (w_n, s_n) = numeric.minimum();
    let (w_c, s_c) = closed.minimum();
    println!(
        "numeric envelope minimum:     {:.2} dB at {:.1} kHz",
        to_db(s_n),
        w_n / TAU / 1e3
    );
    println!(
        "closed-form envelope minimum: {:.2} dB at {:.1} kHz",
        to_db(s_c),
        w_c / TAU / 1e3
    );
    Ok(())
}

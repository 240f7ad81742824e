//! Collective modes of a spin-4 ensemble with a thermal-like population
//! distribution, and the spectrum they produce together.

use std::f64::consts::TAU;

use spinsqz::spectrum::{min_over_angle, to_db};
use spinsqz::{build_cesium_ensemble, CesiumLevelSpec};

fn main() -> spinsqz::Result<()> {
    let spec = CesiumLevelSpec {
        f_number: 4,
        populations: CesiumLevelSpec::geometric_populations(4, 19.0 / 9.0, 1.0),
        larmor: TAU * 1.4e6,
        split_qz: TAU * 1.1e3,
        split_ts: TAU * 0.4e3,
        rate_scale: TAU * 20e3,
        zeta_common: 0.054,
        gamma0: TAU * 3e3,
    };
    let model = build_cesium_ensemble(&spec)?.with_eta(0.91)?;
    println!(" Ω/2π [MHz]  Γ/2π [kHz]    ζ      n_th");
    for m in model.modes() {
        println!(
            "{:11.5}  {:10.3}  {:6.4}  {:6.3}",
            m.omega / TAU / 1e6,
            m.gamma_meas / TAU / 1e3,
            m.zeta,
            m.n_th
        );
    }
    println!("total cooperativity {:.2}", model.total_cooperativity());

    let grid: Vec<f64> = (0..301).map(|k| TAU * (1.3e6 + 700.0 * k as f64)).collect();
    let (env, _) = min_over_angle(&model, &grid, false)?;
    let (w, s) = env.minimum();
    println!(
        "deepest squeezing {:.2} dB at {:.1} kHz",
        to_db(s),
        w / TAU / 1e3
    );
    Ok(())
}

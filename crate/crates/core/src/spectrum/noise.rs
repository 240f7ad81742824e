use crate::error::{invalid, Error, Result};
use crate::model::{EnsembleModel, ExtraneousNoise, ModeParams};

/// `A_b exp(−(Ω − Ω_S)² / (2γ_b²))`, shot-noise units.
pub fn extraneous_noise(spec: &ExtraneousNoise, grid: &[f64]) -> Vec<f64> {
    grid.iter()
        .map(|&w| {
            let x = (w - spec.center) / spec.width;
            spec.amplitude * (-0.5 * x * x).exp()
        })
        .collect()
}

/// Appends the fast-decaying spin modes as one broad oscillator.
///
/// `fast.gamma0` plays the role of the transit decay rate. The Gaussian
/// extraneous term models the same noise, so a model carrying one is refused.
pub fn fast_mode_as_oscillator(model: &EnsembleModel, fast: ModeParams) -> Result<EnsembleModel> {
    if model.extraneous().is_some() {
        return Err(Error::Config(
            "model already carries Gaussian extraneous noise; adding the fast mode \
             would count the same noise twice"
                .into(),
        ));
    }
    if model.fast_mode().is_some() {
        return Err(Error::Config(
            "model already has a fast-decaying mode".into(),
        ));
    }
    fast.validate()?;
    let mut modes = model.modes().to_vec();
    modes.push(fast);
    let index = modes.len() - 1;
    model.clone().with_modes(modes)?.with_fast_mode(Some(index))
}

/// Backaction-imprecision product in units of `ħ/2`:
/// `√((1/η)(1 + S_PP,ext/SN)(1 + ζ² + 1/C_q))`.
///
/// `c_q = f64::INFINITY` stands for negligible thermal decoherence.
pub fn backaction_imprecision_product(
    eta: f64,
    s_pp_ext_sn: f64,
    zeta: f64,
    c_q: f64,
) -> Result<f64> {
    if !(eta > 0.0 && eta <= 1.0) {
        return Err(invalid(format!("eta must lie in (0, 1], got {eta}")));
    }
    if !(c_q > 0.0) {
        return Err(invalid(format!(
            "cooperativity must be positive, got {c_q}"
        )));
    }
    if !(s_pp_ext_sn >= 0.0) {
        return Err(invalid(format!(
            "extraneous noise must be >= 0, got {s_pp_ext_sn}"
        )));
    }
    Ok(((1.0 + s_pp_ext_sn) * (1.0 + zeta * zeta + 1.0 / c_q) / eta).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectrum::{homodyne_psd, SpectrumRequest};
    use approx::assert_relative_eq;
    use std::f64::consts::TAU;

    #[test]
    fn gaussian_peak_and_half_maximum() {
        let spec = ExtraneousNoise::new(0.3, 2.0, 50.0).unwrap();
        let half = 2.0 * (2.0 * 2f64.ln()).sqrt();
        let v = extraneous_noise(&spec, &[50.0 - half, 50.0, 50.0 + half]);
        assert_eq!(v[1], 0.3);
        assert_relative_eq!(v[0], 0.15, max_relative = 1e-14);
        assert_relative_eq!(v[2], 0.15, max_relative = 1e-14);
    }

    #[test]
    fn heisenberg_limit() {
        assert_eq!(
            backaction_imprecision_product(1.0, 0.0, 0.0, f64::INFINITY).unwrap(),
            1.0
        );
    }

    #[test]
    fn reported_products() {
        let slow = backaction_imprecision_product(0.91, 2.0, 0.054, 15.0).unwrap();
        assert!((slow - 1.88).abs() < 0.01, "{slow}");
        let fast = backaction_imprecision_product(0.91, 0.0, 0.18, 8.0).unwrap();
        assert!((fast - 1.13).abs() < 0.01 && fast < 1.2, "{fast}");
    }

    #[test]
    fn bip_rejects_bad_inputs() {
        assert!(backaction_imprecision_product(0.0, 0.0, 0.0, 1.0).is_err());
        assert!(backaction_imprecision_product(0.5, 0.0, 0.0, 0.0).is_err());
        assert!(backaction_imprecision_product(0.5, -1.0, 0.0, 1.0).is_err());
    }

    fn slow_model() -> EnsembleModel {
        let m = ModeParams::with_cooperativity(TAU * 1e6, TAU * 13e3, 11.0, 0.0, 0.9).unwrap();
        EnsembleModel::single(m, 0.91).unwrap()
    }

    #[test]
    fn silent_fast_mode_changes_nothing() {
        let model = slow_model();
        let fast = ModeParams::new(TAU * 1e6, TAU * 300e3, 0.0, 0.0, 0.9).unwrap();
        let with = fast_mode_as_oscillator(&model, fast).unwrap();
        assert_eq!(with.fast_mode(), Some(1));
        let grid: Vec<f64> = (0..60).map(|k| TAU * (0.95e6 + 2e3 * k as f64)).collect();
        let req = SpectrumRequest::new(grid, vec![0.0, 0.7, 1.4]);
        let a = homodyne_psd(&model, &req).unwrap();
        let b = homodyne_psd(&with, &req).unwrap();
        for (ta, tb) in a.iter().zip(&b) {
            for (x, y) in ta.values_sn.iter().zip(&tb.values_sn) {
                assert_relative_eq!(*x, *y, max_relative = 1e-12);
            }
        }
    }

    #[test]
    fn fast_mode_and_gaussian_noise_are_exclusive() {
        let ext = ExtraneousNoise::new(0.3, TAU * 300e3, TAU * 1e6).unwrap();
        let model = slow_model().with_extraneous(Some(ext)).unwrap();
        let fast = ModeParams::new(TAU * 1e6, TAU * 300e3, TAU * 1e3, 0.0, 0.9).unwrap();
        assert!(matches!(
            fast_mode_as_oscillator(&model, fast),
            Err(Error::Config(_))
        ));
    }

    #[test]
    fn backaction_dominated_fast_mode_adds_little_thermal_noise() {
        // Γ' ≫ γ_b n_th: on resonance the thermal part of the P spectrum is
        // smaller than the backaction part, following the closed form.
        let gamma_b = TAU * 300e3;
        let fast = ModeParams::new(TAU * 1e6, gamma_b, TAU * 1.5e6, 0.0, 0.9).unwrap();
        let chi2 = 1.0 / (gamma_b * gamma_b);
        let backaction = 4.0 * fast.gamma_meas * fast.gamma_meas * chi2;
        let thermal = 4.0 * fast.gamma_meas * fast.derived().gamma_th * chi2;
        assert!(thermal < backaction);
    }
}

//! Single-oscillator closed forms under pure position measurement.

use super::{quadrature_spectra, susceptibility, PsdTrace, QuadratureSpectra};
use crate::error::{invalid, Result};
use crate::model::{EnsembleModel, ModeParams, SHOT_NOISE};

/// `S_φ/SN = 1 + 2ηΓ Re χ sin 2φ + 4ηΓ(Γ + γ_th)|χ|² cos² φ`.
pub fn analytic_single_mode_psd(
    mode: &ModeParams,
    eta: f64,
    phi: f64,
    grid: &[f64],
) -> Result<PsdTrace> {
    if mode.zeta != 0.0 {
        return Err(invalid(format!(
            "the position-measurement closed form needs zeta = 0, got {}",
            mode.zeta
        )));
    }
    let gamma = mode.gamma_meas;
    let gamma_th = mode.derived().gamma_th;
    let (s2, c) = ((2.0 * phi).sin(), phi.cos());
    let values_sn = grid
        .iter()
        .map(|&w| {
            let chi = susceptibility(mode, w);
            1.0 + 2.0 * eta * gamma * chi.re * s2
                + 4.0 * eta * gamma * (gamma + gamma_th) * chi.norm_sqr() * c * c
        })
        .collect();
    Ok(PsdTrace {
        grid: grid.to_vec(),
        values_sn,
        angle: Some(phi),
    })
}

/// `D(x) = 1 / (1 + √(1 + 4x²))`.
pub fn optimum_factor(x: f64) -> f64 {
    1.0 / (1.0 + (1.0 + 4.0 * x * x).sqrt())
}

/// Optimum-quadrature spectrum of a single effective oscillator with the
/// imaginary part of the response neglected:
/// `S_min/SN = 1 − 2η Γ/(Γ + γ_th) · D(x)`.
///
/// `x = 1/(2(Γ + γ_th) Re χ) = (Ω_S² − Ω²)/(2|Ω_S|(Γ + γ_th))`, which is
/// `(Ω_S − Ω)/(Γ + γ_th)` near resonance and stays accurate at low Q.
pub fn optimum_envelope(mode: &ModeParams, eta: f64, grid: &[f64]) -> PsdTrace {
    let gamma = mode.gamma_meas;
    let width = gamma + mode.derived().gamma_th;
    let omega_s = mode.omega.abs();
    let values_sn = grid
        .iter()
        .map(|&w| {
            if width == 0.0 || omega_s == 0.0 {
                return 1.0;
            }
            let x = (omega_s - w) * (omega_s + w) / (2.0 * omega_s * width);
            1.0 - 2.0 * eta * gamma / width * optimum_factor(x)
        })
        .collect();
    PsdTrace {
        grid: grid.to_vec(),
        values_sn,
        angle: None,
    }
}

/// Low-frequency P-quadrature level `S/SN = 1 + 4η(Γ/Ω_S)²`.
pub fn dc_p_quadrature_level(gamma_meas: f64, omega_s: f64, eta: f64) -> f64 {
    1.0 + 4.0 * eta * (gamma_meas / omega_s).powi(2)
}

impl QuadratureSpectra {
    /// Minimum over the detection angle of the lossless PSD, with the angle
    /// where it is attained in `[0, π)`.
    pub fn min_over_angle(&self) -> (f64, f64) {
        // S_φ = m + h cos 2φ + c sin 2φ
        let m = 0.5 * (self.s_xx + self.s_pp);
        let h = 0.5 * (self.s_pp - self.s_xx);
        let c = self.s_xp.re;
        let r = h.hypot(c);
        let mut angle = 0.5 * (-c).atan2(-h);
        if angle < 0.0 {
            angle += std::f64::consts::PI;
        }
        (m - r, angle)
    }
}

/// Full-engine PSD minimized over the detection angle at every frequency.
pub fn min_over_angle(
    model: &EnsembleModel,
    grid: &[f64],
    include_extraneous: bool,
) -> Result<(PsdTrace, Vec<f64>)> {
    let eta = model.eta();
    let spectra = quadrature_spectra(model, grid, include_extraneous)?;
    let (values_sn, angles) = spectra
        .iter()
        .map(|s| {
            let (value, angle) = s.min_over_angle();
            (1.0 + eta * (value - SHOT_NOISE) / SHOT_NOISE, angle)
        })
        .unzip();
    Ok((
        PsdTrace {
            grid: grid.to_vec(),
            values_sn,
            angle: None,
        },
        angles,
    ))
}

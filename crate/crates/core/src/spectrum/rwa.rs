//! Rotating-wave closed forms for one lossless oscillator with arbitrary
//! dynamical backaction `ζ ∈ [−1, 1]`.
//!
//! The expressions are written for a positive-mass oscillator. A negative
//! `omega` is handled through the mass-flip identity: the spectrum of the
//! negative-mass oscillator at angle `φ` equals that of its positive-mass
//! partner at `−φ`.

use std::f64::consts::{FRAC_PI_2, PI};

use num_complex::Complex64;

use super::PsdTrace;
use crate::error::{invalid, Error, Result};
use crate::model::ModeParams;

fn linewidth(mode: &ModeParams) -> Result<f64> {
    let gamma = mode.derived().gamma_total;
    if !(gamma > 0.0) {
        return Err(Error::Unstable {
            max_real_part: -gamma / 2.0,
        });
    }
    Ok(gamma)
}

/// `χ = −(1/2) / (ΔΩ + iγ/2)` with `ΔΩ = Ω − |Ω_S|` and `γ = γ0 + 2ζΓ`.
pub fn rwa_susceptibility(mode: &ModeParams, omega: f64) -> Result<Complex64> {
    let gamma = linewidth(mode)?;
    Ok(chi(omega - mode.omega.abs(), gamma))
}

fn chi(detuning: f64, gamma: f64) -> Complex64 {
    Complex64::new(-0.5, 0.0) / Complex64::new(detuning, gamma / 2.0)
}

fn value(mode: &ModeParams, gamma: f64, phi: f64, omega: f64) -> f64 {
    let phi = if mode.omega < 0.0 { -phi } else { phi };
    let g = mode.gamma_meas;
    let z = mode.zeta;
    let d = mode.derived();
    let chi = chi(omega - mode.omega.abs(), gamma);
    // 𝒜 = iΓ(1+ζ)·b with b = (1+ζ) + (1−ζ)e^{−2iφ}
    let b = Complex64::new(1.0 + z, 0.0) + (1.0 - z) * Complex64::from_polar(1.0, -2.0 * phi);
    let a = Complex64::new(0.0, g * (1.0 + z)) * b;
    let a_chi = a * chi;
    // |𝒜χ|²(γ_th + γ0)/(Γ(1+ζ)²), written to stay finite at Γ = 0 or ζ = −1.
    // The squared (1+ζ) is what makes this agree with the optimum-quadrature
    // expression below and with the full Langevin solution.
    let thermal = chi.norm_sqr() * g * b.norm_sqr() * (d.gamma_th + mode.gamma0);
    1.0 + 2.0 * a_chi.re + a_chi.norm_sqr() + thermal
}

/// Lossless PSD in shot-noise units at angle `phi`.
pub fn rwa_psd(mode: &ModeParams, phi: f64, grid: &[f64]) -> Result<PsdTrace> {
    check_zeta(mode)?;
    let gamma = linewidth(mode)?;
    Ok(PsdTrace {
        grid: grid.to_vec(),
        values_sn: grid.iter().map(|&w| value(mode, gamma, phi, w)).collect(),
        angle: Some(phi),
    })
}

fn check_zeta(mode: &ModeParams) -> Result<()> {
    if mode.zeta.abs() > 1.0 {
        return Err(invalid(format!("|zeta| must be <= 1, got {}", mode.zeta)));
    }
    Ok(())
}

/// Maximum-squeezing angle per frequency, in `[0, π)`.
///
/// `tan 2φ_min = −2ΔΩ/γ_dec` has two roots per period; the one that
/// minimizes the spectrum is returned.
pub fn rwa_phi_min(mode: &ModeParams, grid: &[f64]) -> Result<Vec<f64>> {
    check_zeta(mode)?;
    let gamma = linewidth(mode)?;
    let gamma_dec = mode.derived().gamma_dec;
    Ok(grid
        .iter()
        .map(|&w| {
            let detuning = w - mode.omega.abs();
            let first = 0.5 * (-2.0 * detuning).atan2(gamma_dec);
            let second = first + FRAC_PI_2;
            let (first, second) = if mode.omega < 0.0 {
                (-first, -second)
            } else {
                (first, second)
            };
            let best = if value(mode, gamma, first, w) <= value(mode, gamma, second, w) {
                first
            } else {
                second
            };
            best.rem_euclid(PI)
        })
        .collect())
}

/// Lossless optimum-quadrature spectrum
/// `1 − (2γ_DBA/γ)/L − (2γ_dec Γ/γ²)/L · ((1−ζ²)√(1+(2ΔΩ/γ_dec)²) − (1+ζ²))`
/// with `L = 1 + (2ΔΩ/γ)²`.
pub fn rwa_optimum_psd(mode: &ModeParams, grid: &[f64]) -> Result<PsdTrace> {
    check_zeta(mode)?;
    let gamma = linewidth(mode)?;
    Ok(PsdTrace {
        grid: grid.to_vec(),
        values_sn: grid
            .iter()
            .map(|&w| optimum_value(mode, gamma, w - mode.omega.abs()))
            .collect(),
        angle: None,
    })
}

fn optimum_value(mode: &ModeParams, gamma: f64, detuning: f64) -> f64 {
    let g = mode.gamma_meas;
    if g == 0.0 {
        return 1.0;
    }
    let z2 = mode.zeta * mode.zeta;
    let d = mode.derived();
    let lorentz = 1.0 + (2.0 * detuning / gamma).powi(2);
    let root = (1.0 + (2.0 * detuning / d.gamma_dec).powi(2)).sqrt();
    1.0 - 2.0 * d.gamma_dba / gamma / lorentz
        - 2.0 * d.gamma_dec * g / (gamma * gamma) / lorentz * ((1.0 - z2) * root - (1.0 + z2))
}

/// Small-ζ estimate of the absolute minimum,
/// `1 − Γ/(γ_dec + γ0) − (γ0 + γ_th)γ_DBA/(γ0 + γ_dec)²`.
pub fn rwa_min_approx(mode: &ModeParams) -> f64 {
    let d = mode.derived();
    let g0 = mode.gamma0;
    1.0 - mode.gamma_meas / (d.gamma_dec + g0)
        - (g0 + d.gamma_th) * d.gamma_dba / (g0 + d.gamma_dec).powi(2)
}

/// Absolute minimum of [`rwa_optimum_psd`] over the Fourier detuning.
///
/// Returns `(|ΔΩ|, S/SN)`. The optimum spectrum is even in `ΔΩ`, so only
/// non-negative detunings are searched.
pub fn rwa_global_minimum(mode: &ModeParams) -> Result<(f64, f64)> {
    check_zeta(mode)?;
    let gamma = linewidth(mode)?;
    let d = mode.derived();
    let span = 20.0 * (gamma + d.gamma_dec + mode.gamma_meas);
    let f = |x: f64| optimum_value(mode, gamma, x);
    let n = 4000;
    let step = span / n as f64;
    let best = (0..=n)
        .map(|k| k as f64 * step)
        .min_by(|a, b| f(*a).total_cmp(&f(*b)))
        .unwrap_or(0.0);
    let x = golden_section(f, (best - step).max(0.0), best + step, 1e-12 * span);
    Ok((x, f(x)))
}

pub(crate) fn golden_section(f: impl Fn(f64) -> f64, mut lo: f64, mut hi: f64, tol: f64) -> f64 {
    let ratio = (5f64.sqrt() - 1.0) / 2.0;
    let mut a = hi - ratio * (hi - lo);
    let mut b = lo + ratio * (hi - lo);
    let (mut fa, mut fb) = (f(a), f(b));
    while hi - lo > tol {
        if fa <= fb {
            hi = b;
            b = a;
            fb = fa;
            a = hi - ratio * (hi - lo);
            fa = f(a);
        } else {
            lo = a;
            a = b;
            fa = fb;
            b = lo + ratio * (hi - lo);
            fb = f(b);
        }
    }
    0.5 * (lo + hi)
}

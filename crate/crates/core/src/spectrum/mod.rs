//! Homodyne power spectral densities of the measured oscillators.
//!
//! The engine solves the linear Langevin system per frequency (see
//! [`drift_and_transfer`]) and projects the symmetrized output spectra on the
//! detected quadrature `Q_φ = sin φ · X_out + cos φ · P_out`. Closed forms for
//! a single oscillator, the rotating-wave expressions and the
//! backaction-imprecision product live alongside.
//!
//! Spectra are two-sided and reported in shot-noise units (vacuum = 1).

mod closed_form;
mod noise;
mod rwa;
mod susceptibility;
mod transfer;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{EnsembleModel, SHOT_NOISE};

pub use closed_form::{
    analytic_single_mode_psd, dc_p_quadrature_level, min_over_angle, optimum_envelope,
    optimum_factor,
};
pub use noise::{backaction_imprecision_product, extraneous_noise, fast_mode_as_oscillator};
pub use rwa::{
    rwa_global_minimum, rwa_min_approx, rwa_optimum_psd, rwa_phi_min, rwa_psd, rwa_susceptibility,
};
pub use susceptibility::{susceptibility, susceptibility_with_linewidth};
pub use transfer::{drift_and_transfer, drift_matrix, TransferMatrices};

/// How a spectrum is evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Full multimode Langevin solution.
    #[default]
    Full,
    /// Rotating-wave closed form of a single mode.
    Rwa,
    /// Closed form of a single mode under pure position measurement.
    AnalyticSingleMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectrumRequest {
    /// Angular frequencies, rad/s, strictly increasing.
    pub grid: Vec<f64>,
    /// Quadrature angles, rad.
    pub angles: Vec<f64>,
    pub method: Method,
    pub include_extraneous: bool,
}

impl SpectrumRequest {
    pub fn new(grid: Vec<f64>, angles: Vec<f64>) -> Self {
        Self {
            grid,
            angles,
            method: Method::Full,
            include_extraneous: true,
        }
    }

    pub fn with_method(mut self, method: Method) -> Self {
        self.method = method;
        self
    }

    pub fn with_extraneous(mut self, include: bool) -> Self {
        self.include_extraneous = include;
        self
    }

    pub fn validate(&self, model: &EnsembleModel) -> Result<()> {
        validate_grid(&self.grid)?;
        if self.angles.iter().any(|a| !a.is_finite()) {
            return Err(invalid("quadrature angles must be finite"));
        }
        if self.method != Method::Full && model.len() != 1 {
            return Err(invalid(format!(
                "method {:?} needs a single-mode model, got {} modes",
                self.method,
                model.len()
            )));
        }
        Ok(())
    }
}

pub fn validate_grid(grid: &[f64]) -> Result<()> {
    if grid.is_empty() {
        return Err(invalid("empty frequency grid"));
    }
    if grid.iter().any(|w| !w.is_finite()) {
        return Err(invalid("frequency grid must be finite"));
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return Err(invalid("frequency grid must be strictly increasing"));
    }
    Ok(())
}

/// A two-sided PSD in shot-noise units.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PsdTrace {
    /// Angular frequencies, rad/s.
    pub grid: Vec<f64>,
    pub values_sn: Vec<f64>,
    /// Detection angle; `None` for per-frequency optimized envelopes.
    pub angle: Option<f64>,
}

impl PsdTrace {
    pub fn len(&self) -> usize {
        self.grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.grid.is_empty()
    }

    pub fn values_db(&self) -> Vec<f64> {
        self.values_sn.iter().map(|v| to_db(*v)).collect()
    }

    /// Smallest value and the frequency where it occurs.
    pub fn minimum(&self) -> (f64, f64) {
        self.grid
            .iter()
            .zip(&self.values_sn)
            .fold((f64::NAN, f64::INFINITY), |(w0, v0), (w, v)| {
                if *v < v0 {
                    (*w, *v)
                } else {
                    (w0, v0)
                }
            })
    }
}

/// `10 log10(S/SN)` for a value already in shot-noise units.
pub fn to_db(value_sn: f64) -> f64 {
    10.0 * value_sn.log10()
}

pub fn from_db(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Symmetrized 2×2 spectral matrix of the output light quadratures at one
/// frequency, before detection loss.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QuadratureSpectra {
    pub s_xx: f64,
    pub s_pp: f64,
    /// `Σ_k T_Xk S_k conj(T_Pk)`.
    pub s_xp: Complex64,
}

impl QuadratureSpectra {
    /// Lossless PSD of `Q_φ`, two-sided, absolute units.
    pub fn project(&self, angle: f64) -> f64 {
        SHOT_NOISE + self.project_excess(angle)
    }

    /// `S_φ − SN`, evaluated from the excesses so that an unperturbed vacuum
    /// projects to exactly zero.
    pub fn project_excess(&self, angle: f64) -> f64 {
        let (s, c) = angle.sin_cos();
        (self.s_xx - SHOT_NOISE) * s * s
            + (self.s_pp - SHOT_NOISE) * c * c
            + 2.0 * s * c * self.s_xp.re
    }

    /// Detected PSD in shot-noise units for efficiency `eta`.
    pub fn detected_sn(&self, angle: f64, eta: f64) -> f64 {
        1.0 + eta * self.project_excess(angle) / SHOT_NOISE
    }

    /// `∂/∂φ` of [`detected_sn`](Self::detected_sn).
    pub fn detected_sn_angle_derivative(&self, angle: f64, eta: f64) -> f64 {
        let (s2, c2) = (2.0 * angle).sin_cos();
        eta * (s2 * (self.s_xx - self.s_pp) + 2.0 * c2 * self.s_xp.re) / SHOT_NOISE
    }

    /// `S_XX S_PP − |S_XP|²`.
    pub fn determinant(&self) -> f64 {
        self.s_xx * self.s_pp - self.s_xp.norm_sqr()
    }
}

/// Output quadrature spectra of the full model on `grid`.
///
/// The Gaussian extraneous noise, when present and requested, is added to
/// `s_pp`.
pub fn quadrature_spectra(
    model: &EnsembleModel,
    grid: &[f64],
    include_extraneous: bool,
) -> Result<Vec<QuadratureSpectra>> {
    let transfer = drift_and_transfer(model, grid)?;
    let mut spectra = transfer.quadrature_spectra();
    if include_extraneous {
        if let Some(ext) = model.extraneous() {
            let added = extraneous_noise(ext, grid);
            for (s, e) in spectra.iter_mut().zip(added) {
                s.s_pp += SHOT_NOISE * e;
            }
        }
    }
    Ok(spectra)
}

/// Detected PSD traces for every requested angle.
pub fn homodyne_psd(model: &EnsembleModel, request: &SpectrumRequest) -> Result<Vec<PsdTrace>> {
    request.validate(model)?;
    let eta = model.eta();
    let grid = &request.grid;
    let extraneous = match (request.include_extraneous, model.extraneous()) {
        (true, Some(ext)) => Some(extraneous_noise(ext, grid)),
        _ => None,
    };
    let add_extraneous = |angle: f64, values: &mut [f64]| {
        if let Some(ext) = &extraneous {
            let c2 = angle.cos().powi(2);
            for (v, e) in values.iter_mut().zip(ext) {
                *v += eta * c2 * e;
            }
        }
    };
    match request.method {
        Method::Full => {
            let spectra = quadrature_spectra(model, grid, request.include_extraneous)?;
            Ok(request
                .angles
                .iter()
                .map(|&angle| PsdTrace {
                    grid: grid.clone(),
                    values_sn: spectra
                        .par_iter()
                        .map(|s| s.detected_sn(angle, eta))
                        .collect(),
                    angle: Some(angle),
                })
                .collect())
        }
        Method::AnalyticSingleMode => {
            let mode = &model.modes()[0];
            request
                .angles
                .iter()
                .map(|&angle| {
                    let mut trace = analytic_single_mode_psd(mode, eta, angle, grid)?;
                    add_extraneous(angle, &mut trace.values_sn);
                    Ok(trace)
                })
                .collect()
        }
        Method::Rwa => {
            let mode = &model.modes()[0];
            request
                .angles
                .iter()
                .map(|&angle| {
                    let mut trace = rwa_psd(mode, angle, grid)?;
                    for v in trace.values_sn.iter_mut() {
                        *v = 1.0 + eta * (*v - 1.0);
                    }
                    add_extraneous(angle, &mut trace.values_sn);
                    Ok(trace)
                })
                .collect()
        }
    }
}

//! Global weighted least-squares fits of multi-quadrature spectra.
//!
//! All traces of a dataset are fitted at once with shared oscillator
//! parameters and one detection angle per trace. Detection efficiency and
//! thermal occupancies are held at their calibrated values.

mod io;
mod lm;
mod params;
mod response;
mod synth;

use serde::Serialize;

use crate::error::{invalid, Result};
use crate::model::EnsembleModel;
use crate::spectrum::validate_grid;

pub use io::{dataset_rows, read_dataset_csv, write_dataset_csv, DatasetRow};
pub use lm::global_fit;
pub use params::{AngleMode, FreeMask, ParamKind, ParamSpec};
pub use response::{apply_response_correction, GainCurve, ResponseCorrection};
pub use synth::{synthesize_dataset, TraceData};

pub const DEFAULT_MAX_ITERATIONS: usize = 500;

/// A dataset, a starting model and the set of parameters to adjust.
#[derive(Debug, Clone)]
pub struct FitProblem {
    dataset: Vec<TraceData>,
    initial_model: EnsembleModel,
    initial_angles: Vec<f64>,
    angle_mode: AngleMode,
    layout: Vec<ParamSpec>,
    free: FreeMask,
    response_correction: Option<ResponseCorrection>,
    max_iterations: usize,
}

impl FitProblem {
    /// All parameters free; starting angles taken from the traces.
    pub fn new(dataset: Vec<TraceData>, initial_model: EnsembleModel) -> Result<Self> {
        let angles = dataset
            .iter()
            .enumerate()
            .map(|(k, d)| {
                d.trace
                    .angle
                    .ok_or_else(|| invalid(format!("trace {k} has no detection angle")))
            })
            .collect::<Result<Vec<_>>>()?;
        Self::with_angles(dataset, initial_model, angles)
    }

    pub fn with_angles(
        dataset: Vec<TraceData>,
        initial_model: EnsembleModel,
        initial_angles: Vec<f64>,
    ) -> Result<Self> {
        if dataset.is_empty() {
            return Err(invalid("empty dataset"));
        }
        if initial_angles.len() != dataset.len() {
            return Err(invalid(format!(
                "{} starting angles for {} traces",
                initial_angles.len(),
                dataset.len()
            )));
        }
        for d in &dataset {
            validate_grid(&d.trace.grid)?;
            synth::check_n_avg(d.n_avg)?;
            if d.trace.values_sn.len() != d.trace.grid.len() {
                return Err(invalid("trace values and grid differ in length"));
            }
            if d.trace.values_sn.iter().any(|v| !v.is_finite()) {
                return Err(invalid("trace values must be finite"));
            }
        }
        initial_model.validate()?;
        let layout = params::layout(&initial_model, dataset.len(), AngleMode::PerTrace);
        let free = FreeMask(vec![true; layout.len()]);
        Ok(Self {
            dataset,
            initial_model,
            initial_angles,
            angle_mode: AngleMode::PerTrace,
            layout,
            free,
            response_correction: None,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        })
    }

    /// Switches the angle parametrization; every parameter becomes free.
    pub fn with_angle_mode(mut self, mode: AngleMode) -> Self {
        self.angle_mode = mode;
        self.layout = params::layout(&self.initial_model, self.dataset.len(), mode);
        self.free = FreeMask(vec![true; self.layout.len()]);
        self
    }

    pub fn with_response_correction(mut self, correction: Option<ResponseCorrection>) -> Self {
        self.response_correction = correction;
        self
    }

    pub fn with_max_iterations(mut self, n: usize) -> Self {
        self.max_iterations = n;
        self
    }

    pub fn with_free_mask(mut self, mask: FreeMask) -> Result<Self> {
        if mask.0.len() != self.layout.len() {
            return Err(invalid(format!(
                "free mask has {} entries, the problem has {} parameters",
                mask.0.len(),
                self.layout.len()
            )));
        }
        self.free = mask;
        Ok(self)
    }

    /// Frees or fixes every parameter of one kind.
    pub fn set_free_kind(&mut self, kind: ParamKind, free: bool) {
        for (spec, f) in self.layout.iter().zip(self.free.0.iter_mut()) {
            if spec.kind == kind {
                *f = free;
            }
        }
    }

    pub fn set_free_named(&mut self, name: &str, free: bool) -> Result<()> {
        let i = self
            .layout
            .iter()
            .position(|s| s.name == name)
            .ok_or_else(|| invalid(format!("no fit parameter named {name}")))?;
        self.free.0[i] = free;
        Ok(())
    }

    pub fn fix_all(&mut self) {
        self.free.0.iter_mut().for_each(|f| *f = false);
    }

    pub fn layout(&self) -> &[ParamSpec] {
        &self.layout
    }

    pub fn free_mask(&self) -> &FreeMask {
        &self.free
    }

    pub fn dataset(&self) -> &[TraceData] {
        &self.dataset
    }

    pub fn initial_model(&self) -> &EnsembleModel {
        &self.initial_model
    }

    pub fn initial_angles(&self) -> &[f64] {
        &self.initial_angles
    }

    pub fn angle_mode(&self) -> AngleMode {
        self.angle_mode
    }

    pub fn max_iterations(&self) -> usize {
        self.max_iterations
    }

    pub fn response_correction(&self) -> Option<&ResponseCorrection> {
        self.response_correction.as_ref()
    }

    pub fn n_points(&self) -> usize {
        self.dataset.iter().map(|d| d.trace.len()).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Termination {
    /// Relative cost decrease of an accepted step fell below 1e−10.
    CostDecrease,
    /// The model reproduces the data to rounding.
    ZeroCost,
    /// No step of non-negligible size lowers the cost.
    StepTolerance,
    /// Nothing to fit.
    NoFreeParameters,
    MaxIterations,
}

impl Termination {
    pub fn is_converged(self) -> bool {
        !matches!(self, Termination::MaxIterations)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FitParameter {
    pub name: String,
    pub kind: ParamKind,
    pub index: Option<usize>,
    pub value: f64,
    /// `None` for fixed parameters or a singular curvature matrix.
    pub standard_error: Option<f64>,
    pub free: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct FitResult {
    pub parameters: Vec<FitParameter>,
    #[serde(skip)]
    pub model: EnsembleModel,
    /// Detection angle of each trace, rad.
    pub angles: Vec<f64>,
    /// `Σ n_avg (S_model − S_data)² / S_model²`.
    pub cost: f64,
    pub initial_cost: f64,
    /// Cost contribution of each trace.
    pub per_trace_residuals: Vec<f64>,
    /// Cost after every accepted step, starting with the initial cost.
    pub cost_history: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
    pub termination: Termination,
    pub n_points: usize,
    pub n_free: usize,
}

impl FitResult {
    pub fn parameter(&self, name: &str) -> Option<&FitParameter> {
        self.parameters.iter().find(|p| p.name == name)
    }
}

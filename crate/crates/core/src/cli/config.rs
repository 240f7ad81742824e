//! JSON configuration documents of the subcommands. Frequencies in Hz,
//! optics lengths in mm.

use std::f64::consts::{PI, TAU};
use std::path::PathBuf;

use serde::Deserialize;

use crate::error::{invalid, Result};
use crate::fit::{AngleMode, GainCurve, ResponseCorrection};
use crate::model::ModelFile;
use crate::spectrum::Method;

/// Frequency grid, either evenly spaced (endpoints included) or explicit.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum GridSpec {
    Linear {
        start_hz: f64,
        stop_hz: f64,
        points: usize,
    },
    Explicit {
        freq_hz: Vec<f64>,
    },
}

impl GridSpec {
    /// Angular frequencies, rad/s.
    pub fn to_grid(&self) -> Result<Vec<f64>> {
        let hz = match self {
            GridSpec::Linear {
                start_hz,
                stop_hz,
                points,
            } => match *points {
                0 => return Err(invalid("grid needs at least one point")),
                1 => vec![*start_hz],
                n => (0..n)
                    .map(|k| start_hz + (stop_hz - start_hz) * k as f64 / (n - 1) as f64)
                    .collect(),
            },
            GridSpec::Explicit { freq_hz } => freq_hz.clone(),
        };
        let grid: Vec<f64> = hz.iter().map(|f| TAU * f).collect();
        crate::spectrum::validate_grid(&grid)?;
        Ok(grid)
    }
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    pub model: ModelFile,
    pub grid: GridSpec,
    pub angles_rad: Vec<f64>,
    #[serde(default)]
    pub method: Method,
    #[serde(default = "yes")]
    pub include_extraneous: bool,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub model: ModelFile,
    pub grid: GridSpec,
    /// Explicit angles; otherwise `n_angles` evenly spaced over `[0, π)`.
    #[serde(default)]
    pub angles_rad: Option<Vec<f64>>,
    #[serde(default)]
    pub n_angles: Option<usize>,
    #[serde(default = "yes")]
    pub include_extraneous: bool,
}

impl SweepConfig {
    pub fn angles(&self) -> Result<Vec<f64>> {
        match (&self.angles_rad, self.n_angles) {
            (Some(_), Some(_)) => Err(invalid("give either angles_rad or n_angles, not both")),
            (Some(a), None) => Ok(a.clone()),
            (None, n) => {
                let n = n.unwrap_or(17);
                if n == 0 {
                    return Err(invalid("n_angles must be positive"));
                }
                Ok((0..n).map(|k| k as f64 * PI / n as f64).collect())
            }
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub model: ModelFile,
    pub grid: GridSpec,
    pub angles_rad: Vec<f64>,
    pub n_avg: f64,
}

/// Which parameter families the fit may move.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FreeSpec {
    #[serde(default = "yes")]
    pub omega: bool,
    #[serde(default = "yes")]
    pub gamma_meas: bool,
    #[serde(default = "yes")]
    pub zeta: bool,
    #[serde(default = "yes")]
    pub gamma0: bool,
    #[serde(default = "yes")]
    pub angles: bool,
    #[serde(default = "yes")]
    pub extraneous: bool,
}

impl Default for FreeSpec {
    fn default() -> Self {
        Self {
            omega: true,
            gamma_meas: true,
            zeta: true,
            gamma0: true,
            angles: true,
            extraneous: true,
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GainFile {
    pub freq_hz: Vec<f64>,
    pub gain: Vec<f64>,
}

impl GainFile {
    fn to_curve(&self) -> Result<GainCurve> {
        GainCurve::new(
            self.freq_hz.iter().map(|f| TAU * f).collect(),
            self.gain.clone(),
        )
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ResponseFile {
    pub signal: GainFile,
    #[serde(default)]
    pub shot_noise: Option<GainFile>,
}

impl ResponseFile {
    pub fn to_correction(&self) -> Result<ResponseCorrection> {
        Ok(ResponseCorrection {
            signal: self.signal.to_curve()?,
            shot_noise: self.shot_noise.as_ref().map(|g| g.to_curve()).transpose()?,
        })
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FitConfig {
    /// Starting model; its `eta` and `n_th` stay fixed.
    pub model: ModelFile,
    /// Dataset CSV, relative to the config file. `--input` takes precedence.
    #[serde(default)]
    pub data: Option<PathBuf>,
    #[serde(default)]
    pub angle_mode: AngleMode,
    #[serde(default)]
    pub free: FreeSpec,
    #[serde(default)]
    pub max_iterations: Option<usize>,
    #[serde(default)]
    pub response_correction: Option<ResponseFile>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BipCase {
    pub eta: f64,
    #[serde(default)]
    pub s_pp_ext_sn: f64,
    #[serde(default)]
    pub zeta: f64,
    /// Quantum cooperativity; omit or `null` for negligible thermal noise.
    #[serde(default)]
    pub c_q: Option<f64>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
pub enum BipConfig {
    One(BipCase),
    Many(Vec<BipCase>),
}

impl BipConfig {
    pub fn cases(&self) -> Vec<BipCase> {
        match self {
            BipConfig::One(c) => vec![c.clone()],
            BipConfig::Many(c) => c.clone(),
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TophatConfig {
    pub w_in_mm: f64,
    pub fan_angle_rad: f64,
    pub f1_mm: f64,
    /// Computed from the collimation condition when absent.
    #[serde(default)]
    pub f2_mm: Option<f64>,
    pub big_f1_mm: f64,
    pub big_f2_mm: f64,
    #[serde(default)]
    pub inverted: bool,
}

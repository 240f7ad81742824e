//! Frequency response of the detection electronics.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::spectrum::{validate_grid, PsdTrace};

/// Power gain sampled on an increasing angular-frequency grid, linearly
/// interpolated in between.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GainCurve {
    pub grid: Vec<f64>,
    pub gain: Vec<f64>,
}

impl GainCurve {
    pub fn new(grid: Vec<f64>, gain: Vec<f64>) -> Result<Self> {
        validate_grid(&grid)?;
        if grid.len() != gain.len() {
            return Err(invalid(format!(
                "gain curve has {} frequencies but {} values",
                grid.len(),
                gain.len()
            )));
        }
        if let Some(g) = gain.iter().find(|g| !(**g > 0.0) || !g.is_finite()) {
            return Err(invalid(format!(
                "gain must be positive and finite, got {g}"
            )));
        }
        Ok(Self { grid, gain })
    }

    /// Samples `f` on `grid`.
    pub fn from_fn(grid: Vec<f64>, f: impl Fn(f64) -> f64) -> Result<Self> {
        let gain = grid.iter().map(|w| f(*w)).collect();
        Self::new(grid, gain)
    }

    pub fn unit(grid: Vec<f64>) -> Result<Self> {
        Self::from_fn(grid, |_| 1.0)
    }

    /// Interpolated gain; frequencies outside the sampled range are an error.
    pub fn at(&self, omega: f64) -> Result<f64> {
        let (first, last) = (self.grid[0], self.grid[self.grid.len() - 1]);
        if !(omega >= first && omega <= last) {
            return Err(invalid(format!(
                "frequency {omega} rad/s outside the gain curve range [{first}, {last}]"
            )));
        }
        let hi = self.grid.partition_point(|w| *w < omega);
        if self.grid[hi] == omega {
            return Ok(self.gain[hi]);
        }
        let lo = hi - 1;
        let t = (omega - self.grid[lo]) / (self.grid[hi] - self.grid[lo]);
        Ok(self.gain[lo] + t * (self.gain[hi] - self.gain[lo]))
    }
}

/// Gains of the signal chain and, if recorded separately, of the chain the
/// shot-noise reference went through.
///
/// Shot-noise normalized data are divided by `signal / shot_noise`; without a
/// separate shot-noise curve the reference is taken as flat and the data are
/// divided by the signal gain alone.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResponseCorrection {
    pub signal: GainCurve,
    pub shot_noise: Option<GainCurve>,
}

impl ResponseCorrection {
    pub fn signal_only(signal: GainCurve) -> Self {
        Self {
            signal,
            shot_noise: None,
        }
    }

    fn ratio(&self, omega: f64) -> Result<f64> {
        let g = self.signal.at(omega)?;
        Ok(match &self.shot_noise {
            Some(sn) => g / sn.at(omega)?,
            None => g,
        })
    }
}

pub fn apply_response_correction(
    trace: &PsdTrace,
    correction: &ResponseCorrection,
) -> Result<PsdTrace> {
    let values_sn = trace
        .grid
        .iter()
        .zip(&trace.values_sn)
        .map(|(w, v)| Ok(v / correction.ratio(*w)?))
        .collect::<Result<Vec<_>>>()?;
    Ok(PsdTrace {
        grid: trace.grid.clone(),
        values_sn,
        angle: trace.angle,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    fn trace() -> PsdTrace {
        let grid: Vec<f64> = (0..50).map(|k| TAU * (0.5e6 + 2e4 * k as f64)).collect();
        let values_sn = grid.iter().map(|w| 0.4 + 1e-7 * w).collect();
        PsdTrace {
            grid,
            values_sn,
            angle: Some(0.3),
        }
    }

    #[test]
    fn unit_gain_is_identity() {
        let t = trace();
        let c = ResponseCorrection::signal_only(GainCurve::unit(t.grid.clone()).unwrap());
        assert_eq!(apply_response_correction(&t, &c).unwrap(), t);
    }

    #[test]
    fn shared_chain_cancels() {
        let t = trace();
        let g = GainCurve::from_fn(t.grid.clone(), |_| 2.0).unwrap();
        let c = ResponseCorrection {
            signal: g.clone(),
            shot_noise: Some(g),
        };
        assert_eq!(apply_response_correction(&t, &c).unwrap(), t);
    }

    #[test]
    fn low_pass_round_trip() {
        let t = trace();
        let cutoff = TAU * 5e6;
        let pole = |w: f64| 1.0 / (1.0 + (w / cutoff).powi(2));
        let distorted = PsdTrace {
            values_sn: t
                .grid
                .iter()
                .zip(&t.values_sn)
                .map(|(w, v)| v * pole(*w))
                .collect(),
            ..t.clone()
        };
        let c = ResponseCorrection::signal_only(GainCurve::from_fn(t.grid.clone(), pole).unwrap());
        let back = apply_response_correction(&distorted, &c).unwrap();
        for (a, b) in back.values_sn.iter().zip(&t.values_sn) {
            assert!((a - b).abs() <= 1e-12 * b);
        }
    }

    #[test]
    fn interpolation_and_range() {
        let g = GainCurve::new(vec![1.0, 3.0], vec![1.0, 2.0]).unwrap();
        assert_eq!(g.at(2.0).unwrap(), 1.5);
        assert_eq!(g.at(3.0).unwrap(), 2.0);
        assert!(g.at(3.5).is_err());
        assert!(GainCurve::new(vec![1.0, 2.0], vec![1.0, 0.0]).is_err());
        assert!(GainCurve::new(vec![1.0, 2.0], vec![1.0, -1.0]).is_err());
    }
}

//! Fit parameter layout and the smooth maps that keep estimates in bounds.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::model::{EnsembleModel, ExtraneousNoise, ModeParams};

/// How the detection angles of the traces are parametrized.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AngleMode {
    /// One free angle per trace.
    #[default]
    PerTrace,
    /// `φ_k = offset + k · step` in trace order (waveplate calibration).
    Affine,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ParamKind {
    Omega,
    GammaMeas,
    Zeta,
    Gamma0,
    Angle,
    AngleOffset,
    AngleStep,
    ExtAmplitude,
    ExtWidth,
}

impl ParamKind {
    /// Whether the value is an angular frequency or rate (rad/s).
    pub fn is_rate(self) -> bool {
        matches!(
            self,
            ParamKind::Omega | ParamKind::GammaMeas | ParamKind::Gamma0 | ParamKind::ExtWidth
        )
    }

    /// Parameters that change the oscillator dynamics and need a new solve.
    pub(crate) fn is_structural(self) -> bool {
        matches!(
            self,
            ParamKind::Omega | ParamKind::GammaMeas | ParamKind::Zeta | ParamKind::Gamma0
        )
    }
}

/// One entry of the parameter vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ParamSpec {
    pub name: String,
    pub kind: ParamKind,
    /// Mode or trace index, where applicable.
    pub index: Option<usize>,
    /// Scale of the internal coordinate of frequencies.
    #[serde(skip)]
    pub(crate) scale: f64,
}

pub(crate) fn layout(
    model: &EnsembleModel,
    n_traces: usize,
    angle_mode: AngleMode,
) -> Vec<ParamSpec> {
    let mut specs = Vec::new();
    let mut push = |kind, index: Option<usize>, name: String, scale: f64| {
        specs.push(ParamSpec {
            name,
            kind,
            index,
            scale,
        })
    };
    for (i, m) in model.modes().iter().enumerate() {
        let scale = if m.omega != 0.0 { m.omega.abs() } else { 1.0 };
        push(ParamKind::Omega, Some(i), format!("omega[{i}]"), scale);
        push(
            ParamKind::GammaMeas,
            Some(i),
            format!("gamma_meas[{i}]"),
            1.0,
        );
        push(ParamKind::Zeta, Some(i), format!("zeta[{i}]"), 1.0);
        push(ParamKind::Gamma0, Some(i), format!("gamma0[{i}]"), 1.0);
    }
    match angle_mode {
        AngleMode::PerTrace => {
            for k in 0..n_traces {
                push(ParamKind::Angle, Some(k), format!("phi[{k}]"), 1.0);
            }
        }
        AngleMode::Affine => {
            push(ParamKind::AngleOffset, None, "phi_offset".into(), 1.0);
            push(ParamKind::AngleStep, None, "phi_step".into(), 1.0);
        }
    }
    if model.extraneous().is_some() {
        push(ParamKind::ExtAmplitude, None, "ext_amplitude".into(), 1.0);
        push(ParamKind::ExtWidth, None, "ext_width".into(), 1.0);
    }
    specs
}

/// Natural parameter values, in layout order.
pub(crate) fn pack(model: &EnsembleModel, angles: &[f64], angle_mode: AngleMode) -> Vec<f64> {
    let mut v = Vec::new();
    for m in model.modes() {
        v.extend([m.omega, m.gamma_meas, m.zeta, m.gamma0]);
    }
    match angle_mode {
        AngleMode::PerTrace => v.extend_from_slice(angles),
        AngleMode::Affine => {
            let offset = angles.first().copied().unwrap_or(0.0);
            let step = if angles.len() > 1 {
                (angles[angles.len() - 1] - offset) / (angles.len() - 1) as f64
            } else {
                0.0
            };
            v.extend([offset, step]);
        }
    }
    if let Some(ext) = model.extraneous() {
        v.extend([ext.amplitude, ext.width]);
    }
    v
}

/// Rebuilds the model and per-trace angles from natural values.
pub(crate) fn unpack(
    base: &EnsembleModel,
    values: &[f64],
    n_traces: usize,
    angle_mode: AngleMode,
) -> Result<(EnsembleModel, Vec<f64>)> {
    let n = base.len();
    let modes = base
        .modes()
        .iter()
        .enumerate()
        .map(|(i, m)| {
            let v = &values[4 * i..4 * i + 4];
            ModeParams::new(v[0], v[3], v[1], v[2], m.n_th)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut at = 4 * n;
    let angles = match angle_mode {
        AngleMode::PerTrace => {
            at += n_traces;
            values[4 * n..at].to_vec()
        }
        AngleMode::Affine => {
            let (offset, step) = (values[at], values[at + 1]);
            at += 2;
            (0..n_traces).map(|k| offset + k as f64 * step).collect()
        }
    };
    let extraneous = match base.extraneous() {
        Some(ext) => Some(ExtraneousNoise::new(
            values[at],
            values[at + 1],
            ext.center,
        )?),
        None => None,
    };
    let model = base
        .clone()
        .with_modes(modes)?
        .with_extraneous(extraneous)?;
    Ok((model, angles))
}

/// Natural value to internal coordinate.
pub(crate) fn to_internal(spec: &ParamSpec, value: f64) -> Result<f64> {
    Ok(match spec.kind {
        ParamKind::Omega => value / spec.scale,
        ParamKind::GammaMeas | ParamKind::ExtAmplitude => value.max(0.0).sqrt(),
        ParamKind::Zeta => value.clamp(-1.0, 1.0).asin(),
        ParamKind::Gamma0 | ParamKind::ExtWidth => {
            if !(value > 0.0) {
                return Err(invalid(format!(
                    "{} must be positive to be fitted, got {value}",
                    spec.name
                )));
            }
            value.ln()
        }
        ParamKind::Angle | ParamKind::AngleOffset | ParamKind::AngleStep => value,
    })
}

pub(crate) fn to_natural(spec: &ParamSpec, u: f64) -> f64 {
    match spec.kind {
        ParamKind::Omega => u * spec.scale,
        ParamKind::GammaMeas | ParamKind::ExtAmplitude => u * u,
        ParamKind::Zeta => u.sin(),
        ParamKind::Gamma0 | ParamKind::ExtWidth => u.exp(),
        ParamKind::Angle | ParamKind::AngleOffset | ParamKind::AngleStep => u,
    }
}

/// `dθ/du`.
pub(crate) fn natural_derivative(spec: &ParamSpec, u: f64) -> f64 {
    match spec.kind {
        ParamKind::Omega => spec.scale,
        ParamKind::GammaMeas | ParamKind::ExtAmplitude => 2.0 * u,
        ParamKind::Zeta => u.cos(),
        ParamKind::Gamma0 | ParamKind::ExtWidth => u.exp(),
        ParamKind::Angle | ParamKind::AngleOffset | ParamKind::AngleStep => 1.0,
    }
}

/// Which parameters the fit may move.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FreeMask(pub Vec<bool>);

impl FreeMask {
    pub fn count(&self) -> usize {
        self.0.iter().filter(|f| **f).count()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transforms_round_trip() {
        let cases = [
            (ParamKind::Omega, 3.2e6, 6.0e6),
            (ParamKind::GammaMeas, 2.5e5, 1.0),
            (ParamKind::Zeta, -0.3, 1.0),
            (ParamKind::Gamma0, 1.7e3, 1.0),
            (ParamKind::Angle, 2.1, 1.0),
        ];
        for (kind, value, scale) in cases {
            let spec = ParamSpec {
                name: "p".into(),
                kind,
                index: None,
                scale,
            };
            let u = to_internal(&spec, value).unwrap();
            let back = to_natural(&spec, u);
            assert!((back - value).abs() <= 1e-12 * value.abs());
            let h = 1e-6 * u.abs().max(1e-3);
            let fd = (to_natural(&spec, u + h) - to_natural(&spec, u - h)) / (2.0 * h);
            let d = natural_derivative(&spec, u);
            assert!((fd - d).abs() <= 1e-6 * d.abs(), "{kind:?}");
        }
    }

    #[test]
    fn pack_unpack_round_trip() {
        let modes = vec![
            ModeParams::new(1.0e6, 100.0, 5e3, 0.05, 0.9).unwrap(),
            ModeParams::new(1.1e6, 200.0, 1e3, -0.02, 0.5).unwrap(),
        ];
        let ext = ExtraneousNoise::new(0.7, 3e5, 1.05e6).unwrap();
        let model = EnsembleModel::new(modes, 0.9)
            .unwrap()
            .with_extraneous(Some(ext))
            .unwrap();
        let angles = [0.1, 0.3, 0.5];
        for mode in [AngleMode::PerTrace, AngleMode::Affine] {
            let v = pack(&model, &angles, mode);
            assert_eq!(v.len(), layout(&model, 3, mode).len());
            let (m2, a2) = unpack(&model, &v, 3, mode).unwrap();
            assert_eq!(m2.modes(), model.modes());
            assert_eq!(m2.extraneous(), model.extraneous());
            for (a, b) in a2.iter().zip(angles) {
                assert!((a - b).abs() < 1e-15);
            }
        }
    }
}

//! Oscillator modes, ensembles and the derived decoherence budget.
//!
//! All rates and frequencies are angular (rad/s). Conversion from ordinary
//! Hz happens only at the file boundary, see [`ModelFile`].

use std::f64::consts::TAU;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// Two-sided vacuum level of a light quadrature.
pub const SHOT_NOISE: f64 = 0.25;

/// One linearly coupled oscillator mode.
///
/// The sign of `omega` encodes the sign of the effective mass.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeParams {
    /// Resonance frequency, rad/s, signed.
    pub omega: f64,
    /// Intrinsic (FWHM) damping rate, rad/s.
    pub gamma0: f64,
    /// Measurement rate, rad/s.
    pub gamma_meas: f64,
    /// Dynamical-backaction coefficient.
    pub zeta: f64,
    /// Thermal bath occupancy.
    pub n_th: f64,
}

impl ModeParams {
    pub fn new(omega: f64, gamma0: f64, gamma_meas: f64, zeta: f64, n_th: f64) -> Result<Self> {
        let mode = Self {
            omega,
            gamma0,
            gamma_meas,
            zeta,
            n_th,
        };
        mode.validate()?;
        Ok(mode)
    }

    /// Mode with a prescribed quantum cooperativity `Γ/γ_th`.
    pub fn with_cooperativity(
        omega: f64,
        gamma_meas: f64,
        cooperativity: f64,
        zeta: f64,
        n_th: f64,
    ) -> Result<Self> {
        if !(cooperativity > 0.0) {
            return Err(invalid(format!(
                "cooperativity must be positive, got {cooperativity}"
            )));
        }
        let gamma_th = gamma_meas / cooperativity;
        Self::new(omega, gamma_th / (2.0 * n_th + 1.0), gamma_meas, zeta, n_th)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [
            self.omega,
            self.gamma0,
            self.gamma_meas,
            self.zeta,
            self.n_th,
        ]
        .iter()
        .all(|v| v.is_finite());
        if !finite {
            return Err(invalid(format!("non-finite mode parameter in {self:?}")));
        }
        if self.gamma0 < 0.0 {
            return Err(invalid(format!("gamma0 must be >= 0, got {}", self.gamma0)));
        }
        if self.gamma_meas < 0.0 {
            return Err(invalid(format!(
                "gamma_meas must be >= 0, got {}",
                self.gamma_meas
            )));
        }
        if self.n_th < 0.0 {
            return Err(invalid(format!("n_th must be >= 0, got {}", self.n_th)));
        }
        if self.zeta.abs() > 1.0 {
            return Err(invalid(format!("|zeta| must be <= 1, got {}", self.zeta)));
        }
        Ok(())
    }

    pub fn derived(&self) -> DerivedRates {
        derived_rates(self)
    }
}

/// Decoherence and damping budget of one mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedRates {
    /// Thermal decoherence rate `(2 n_th + 1) γ0`.
    pub gamma_th: f64,
    /// Optical (dynamical-backaction) damping `2 ζ Γ`, signed.
    pub gamma_dba: f64,
    /// Quantum-backaction decoherence rate `Γ (1 + ζ²)`.
    pub gamma_qba: f64,
    /// Quantum cooperativity `Γ / γ_th`; `f64::INFINITY` when `γ_th = 0 < Γ`.
    pub c_q: f64,
    /// Total linewidth `γ0 + γ_DBA`.
    pub gamma_total: f64,
    /// Total decoherence rate `γ_th + γ_QBA`.
    pub gamma_dec: f64,
}

pub fn derived_rates(mode: &ModeParams) -> DerivedRates {
    let gamma_th = (2.0 * mode.n_th + 1.0) * mode.gamma0;
    let gamma_dba = 2.0 * mode.zeta * mode.gamma_meas;
    let gamma_qba = mode.gamma_meas * (1.0 + mode.zeta * mode.zeta);
    DerivedRates {
        gamma_th,
        gamma_dba,
        gamma_qba,
        c_q: cooperativity(mode.gamma_meas, gamma_th),
        gamma_total: mode.gamma0 + gamma_dba,
        gamma_dec: gamma_th + gamma_qba,
    }
}

fn cooperativity(gamma_meas: f64, gamma_th: f64) -> f64 {
    if gamma_meas == 0.0 {
        0.0
    } else if gamma_th == 0.0 {
        f64::INFINITY
    } else {
        gamma_meas / gamma_th
    }
}

/// Intrinsic damping model of the oscillator modes.
///
/// `Symmetric` damps both quadratures at `γ0/2` and drives each with an
/// independent thermal force of symmetrized strength `γ0 (n_th + 1/2)`.
/// `Viscous` damps only the momentum at `γ0` and drives it with a single force
/// of strength `γ_th`; for a lone mode without dynamical backaction this gives
/// the susceptibility `Ω_S / (Ω_S² − Ω² − iΩγ0)` exactly.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Damping {
    #[default]
    Symmetric,
    Viscous,
}

/// Gaussian excess noise on the P quadrature of the output light.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExtraneousNoise {
    /// Peak height in shot-noise units.
    pub amplitude: f64,
    /// Gaussian standard deviation, rad/s.
    pub width: f64,
    /// Center frequency, rad/s.
    pub center: f64,
}

impl ExtraneousNoise {
    pub fn new(amplitude: f64, width: f64, center: f64) -> Result<Self> {
        let spec = Self {
            amplitude,
            width,
            center,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.amplitude >= 0.0) || !self.amplitude.is_finite() {
            return Err(invalid(format!(
                "extraneous amplitude must be >= 0, got {}",
                self.amplitude
            )));
        }
        if !(self.width > 0.0) || !self.width.is_finite() {
            return Err(invalid(format!(
                "extraneous width must be > 0, got {}",
                self.width
            )));
        }
        if !self.center.is_finite() {
            return Err(invalid("extraneous center must be finite"));
        }
        Ok(())
    }
}

/// The complete input of a spectrum computation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EnsembleModel {
    modes: Vec<ModeParams>,
    eta: f64,
    extraneous: Option<ExtraneousNoise>,
    damping: Damping,
    fast_mode: Option<usize>,
}

impl EnsembleModel {
    pub fn new(modes: Vec<ModeParams>, eta: f64) -> Result<Self> {
        let model = Self {
            modes,
            eta,
            extraneous: None,
            damping: Damping::default(),
            fast_mode: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn single(mode: ModeParams, eta: f64) -> Result<Self> {
        Self::new(vec![mode], eta)
    }

    pub fn with_extraneous(mut self, extraneous: Option<ExtraneousNoise>) -> Result<Self> {
        self.extraneous = extraneous;
        self.validate()?;
        Ok(self)
    }

    pub fn with_damping(mut self, damping: Damping) -> Self {
        self.damping = damping;
        self
    }

    pub fn with_eta(mut self, eta: f64) -> Result<Self> {
        self.eta = eta;
        self.validate()?;
        Ok(self)
    }

    /// Replaces the mode list, keeping every other setting.
    pub fn with_modes(mut self, modes: Vec<ModeParams>) -> Result<Self> {
        self.modes = modes;
        self.validate()?;
        Ok(self)
    }

    pub(crate) fn with_fast_mode(mut self, index: Option<usize>) -> Result<Self> {
        self.fast_mode = index;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        if self.modes.is_empty() {
            return Err(invalid("an ensemble needs at least one mode"));
        }
        for mode in &self.modes {
            mode.validate()?;
        }
        if !(0.0..=1.0).contains(&self.eta) {
            return Err(invalid(format!("eta must lie in [0, 1], got {}", self.eta)));
        }
        if let Some(ext) = &self.extraneous {
            ext.validate()?;
        }
        if let Some(i) = self.fast_mode {
            if i >= self.modes.len() {
                return Err(invalid(format!("fast mode index {i} out of range")));
            }
            if self.extraneous.is_some() {
                return Err(Error::Config(
                    "fast-decaying mode and Gaussian extraneous noise both enabled; \
                     they describe the same noise"
                        .into(),
                ));
            }
        }
        Ok(())
    }

    pub fn modes(&self) -> &[ModeParams] {
        &self.modes
    }

    pub fn eta(&self) -> f64 {
        self.eta
    }

    pub fn extraneous(&self) -> Option<&ExtraneousNoise> {
        self.extraneous.as_ref()
    }

    pub fn damping(&self) -> Damping {
        self.damping
    }

    /// Index of the mode that stands for the fast-decaying spin modes, if any.
    pub fn fast_mode(&self) -> Option<usize> {
        self.fast_mode
    }

    pub fn shot_noise(&self) -> f64 {
        SHOT_NOISE
    }

    pub fn len(&self) -> usize {
        self.modes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.modes.is_empty()
    }

    /// Total measurement rate `Σ Γ_i`.
    pub fn total_measurement_rate(&self) -> f64 {
        self.modes.iter().map(|m| m.gamma_meas).sum()
    }

    /// Measurement-weighted thermal decoherence rate `Σ γ_th,i Γ_i / Γ`.
    ///
    /// With no measurement at all the plain mean is returned.
    pub fn total_thermal_rate(&self) -> f64 {
        let total = self.total_measurement_rate();
        if total == 0.0 {
            let n = self.modes.len() as f64;
            return self.modes.iter().map(|m| m.derived().gamma_th).sum::<f64>() / n;
        }
        self.modes
            .iter()
            .map(|m| m.derived().gamma_th * m.gamma_meas)
            .sum::<f64>()
            / total
    }

    pub fn total_cooperativity(&self) -> f64 {
        cooperativity(self.total_measurement_rate(), self.total_thermal_rate())
    }

    /// The single oscillator that the ensemble looks like far from resonance.
    ///
    /// Frequency and occupancy are measurement-weighted means; `γ0` is chosen
    /// so that the mode reproduces the weighted thermal rate. `ζ` is the
    /// measurement-weighted mean as well.
    pub fn effective_mode(&self) -> ModeParams {
        let total = self.total_measurement_rate();
        let weights: Vec<f64> = if total > 0.0 {
            self.modes.iter().map(|m| m.gamma_meas / total).collect()
        } else {
            vec![1.0 / self.modes.len() as f64; self.modes.len()]
        };
        let mean = |f: &dyn Fn(&ModeParams) -> f64| -> f64 {
            self.modes.iter().zip(&weights).map(|(m, w)| f(m) * w).sum()
        };
        let n_th = mean(&|m| m.n_th);
        ModeParams {
            omega: mean(&|m| m.omega),
            gamma0: self.total_thermal_rate() / (2.0 * n_th + 1.0),
            gamma_meas: total,
            zeta: mean(&|m| m.zeta),
            n_th,
        }
    }

    /// The same ensemble with the effective mass reversed about `larmor`.
    ///
    /// Each `Ω_i` maps to `−(2 larmor − Ω_i)`: the sign flips and so does the
    /// splitting from `larmor`, which reflects the spectrum about `|larmor|`
    /// (exactly for one mode with `φ → −φ`, within the rotating-wave
    /// approximation for several).
    pub fn mass_flipped(&self, larmor: f64) -> Self {
        let mut flipped = self.clone();
        for m in &mut flipped.modes {
            m.omega = -(2.0 * larmor - m.omega);
        }
        flipped
    }
}

/// Steady-state populations and couplings of a spin-F ground state.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CesiumLevelSpec {
    pub f_number: i32,
    /// Populations `N_m` for `m = −F..=F`.
    pub populations: Vec<f64>,
    /// Larmor frequency, rad/s, signed.
    pub larmor: f64,
    /// Quadratic Zeeman splitting per unit of `2m + 1`, rad/s.
    pub split_qz: f64,
    /// Tensor Stark splitting per unit of `2m + 1`, rad/s.
    pub split_ts: f64,
    /// Measurement rate per unit of `C_m² ΔN_m`, rad/s.
    pub rate_scale: f64,
    pub zeta_common: f64,
    /// Common intrinsic damping, rad/s.
    pub gamma0: f64,
}

impl CesiumLevelSpec {
    /// Populations in geometric progression `N_{m+1} = ratio · N_m`, which give
    /// every mode the occupancy `1 / (ratio − 1)`.
    pub fn geometric_populations(f_number: i32, ratio: f64, total: f64) -> Vec<f64> {
        let raw: Vec<f64> = (0..=2 * f_number).map(|k| ratio.powi(k)).collect();
        let sum: f64 = raw.iter().sum();
        raw.into_iter().map(|v| v * total / sum).collect()
    }
}

/// `C_m = √(F(F+1) − m(m+1))` for the `m → m+1` transition.
pub fn clebsch_coefficient(f: i32, m: i32) -> Result<f64> {
    if f < 1 || m < -f || m > f - 1 {
        return Err(invalid(format!("m = {m} outside [-F, F-1] for F = {f}")));
    }
    let (f, m) = (f as f64, m as f64);
    Ok((f * (f + 1.0) - m * (m + 1.0)).sqrt())
}

/// Builds the `2F` collective modes of the `m → m+1` transitions.
///
/// A transition between two empty sublevels carries no mode and is skipped;
/// any other non-positive population difference is an error.
pub fn build_cesium_ensemble(spec: &CesiumLevelSpec) -> Result<EnsembleModel> {
    let f = spec.f_number;
    if f < 1 {
        return Err(invalid(format!("F must be >= 1, got {f}")));
    }
    if spec.populations.len() != (2 * f + 1) as usize {
        return Err(invalid(format!(
            "expected {} populations for F = {f}, got {}",
            2 * f + 1,
            spec.populations.len()
        )));
    }
    if spec
        .populations
        .iter()
        .any(|n| !(*n >= 0.0) || !n.is_finite())
    {
        return Err(invalid("populations must be finite and non-negative"));
    }
    let norm = (2 * f - 1) as f64;
    let mut modes = Vec::with_capacity(2 * f as usize);
    for m in -f..f {
        let n_lo = spec.populations[(m + f) as usize];
        let n_hi = spec.populations[(m + f + 1) as usize];
        if n_lo == 0.0 && n_hi == 0.0 {
            continue;
        }
        let delta_n = n_hi - n_lo;
        if !(delta_n > 0.0) {
            return Err(Error::InvalidPopulation { m, delta_n });
        }
        let c = clebsch_coefficient(f, m)?;
        let k = (2 * m + 1) as f64;
        modes.push(ModeParams::new(
            spec.larmor + (spec.split_qz + spec.split_ts) * k,
            spec.gamma0,
            spec.rate_scale * c * c * delta_n,
            spec.zeta_common * k / norm,
            n_lo / delta_n,
        )?);
    }
    EnsembleModel::new(modes, 1.0)
}

/// File representation of a mode; frequencies and rates in ordinary Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModeFile {
    pub omega_hz: f64,
    pub gamma0_hz: f64,
    pub gamma_meas_hz: f64,
    pub zeta: f64,
    pub n_th: f64,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExtraneousFile {
    pub amplitude_sn: f64,
    pub width_hz: f64,
    pub center_hz: f64,
}

/// JSON model document. Frequencies are ordinary Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ModelFile {
    pub modes: Vec<ModeFile>,
    pub eta: f64,
    #[serde(default)]
    pub extraneous: Option<ExtraneousFile>,
    #[serde(default)]
    pub damping: Damping,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub fast_mode: Option<usize>,
}

impl ModelFile {
    pub fn to_model(&self) -> Result<EnsembleModel> {
        let modes = self
            .modes
            .iter()
            .map(|m| {
                ModeParams::new(
                    m.omega_hz * TAU,
                    m.gamma0_hz * TAU,
                    m.gamma_meas_hz * TAU,
                    m.zeta,
                    m.n_th,
                )
            })
            .collect::<Result<Vec<_>>>()?;
        let extraneous = self
            .extraneous
            .as_ref()
            .map(|e| ExtraneousNoise::new(e.amplitude_sn, e.width_hz * TAU, e.center_hz * TAU))
            .transpose()?;
        EnsembleModel::new(modes, self.eta)?
            .with_damping(self.damping)
            .with_extraneous(extraneous)?
            .with_fast_mode(self.fast_mode)
    }

    pub fn from_model(model: &EnsembleModel) -> Self {
        Self {
            modes: model
                .modes()
                .iter()
                .map(|m| ModeFile {
                    omega_hz: m.omega / TAU,
                    gamma0_hz: m.gamma0 / TAU,
                    gamma_meas_hz: m.gamma_meas / TAU,
                    zeta: m.zeta,
                    n_th: m.n_th,
                })
                .collect(),
            eta: model.eta(),
            extraneous: model.extraneous().map(|e| ExtraneousFile {
                amplitude_sn: e.amplitude,
                width_hz: e.width / TAU,
                center_hz: e.center / TAU,
            }),
            damping: model.damping(),
            fast_mode: model.fast_mode(),
        }
    }
}

/// Level specification file; frequencies and rates in ordinary Hz.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LevelSpecFile {
    #[serde(default = "default_f")]
    pub f_number: i32,
    pub populations: Vec<f64>,
    pub larmor_hz: f64,
    #[serde(default)]
    pub split_qz_hz: f64,
    #[serde(default)]
    pub split_ts_hz: f64,
    pub rate_scale_hz: f64,
    #[serde(default)]
    pub zeta_common: f64,
    pub gamma0_hz: f64,
    #[serde(default = "default_eta")]
    pub eta: f64,
}

fn default_f() -> i32 {
    4
}

fn default_eta() -> f64 {
    1.0
}

impl LevelSpecFile {
    pub fn to_spec(&self) -> CesiumLevelSpec {
        CesiumLevelSpec {
            f_number: self.f_number,
            populations: self.populations.clone(),
            larmor: self.larmor_hz * TAU,
            split_qz: self.split_qz_hz * TAU,
            split_ts: self.split_ts_hz * TAU,
            rate_scale: self.rate_scale_hz * TAU,
            zeta_common: self.zeta_common,
            gamma0: self.gamma0_hz * TAU,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    #[test]
    fn rates_without_measurement() {
        let r = derived_rates(&ModeParams::new(1.0, 1.0, 0.0, 0.0, 0.0).unwrap());
        assert_eq!(r.gamma_th, 1.0);
        assert_eq!(r.gamma_dba, 0.0);
        assert_eq!(r.gamma_qba, 0.0);
        assert_eq!(r.c_q, 0.0);
    }

    #[test]
    fn rates_hand_values() {
        let r = derived_rates(&ModeParams::new(10.0, 0.05, 1.0, 0.1, 0.9).unwrap());
        assert_relative_eq!(r.gamma_th, 0.14, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_dba, 0.2, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_qba, 1.01, max_relative = 1e-14);
        assert_relative_eq!(r.c_q, 1.0 / 0.14, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_total, 0.25, max_relative = 1e-14);
        assert_relative_eq!(r.gamma_dec, 1.15, max_relative = 1e-14);
    }

    #[test]
    fn thermal_rate_at_13_khz_and_cq_11() {
        let gamma = TAU * 13e3;
        let mode = ModeParams::with_cooperativity(TAU * 1e6, gamma, 11.0, 0.0, 0.9).unwrap();
        let r = mode.derived();
        assert_relative_eq!(r.c_q, 11.0, max_relative = 1e-12);
        assert!((r.gamma_th / TAU - 1181.8).abs() < 1.0);
    }

    #[test]
    fn infinite_cooperativity_sentinel() {
        let r = derived_rates(&ModeParams::new(1.0, 0.0, 2.0, 0.0, 0.0).unwrap());
        assert!(r.c_q.is_infinite());
    }

    #[test]
    fn mode_validation() {
        assert!(ModeParams::new(1.0, -0.1, 1.0, 0.0, 0.0).is_err());
        assert!(ModeParams::new(1.0, 0.1, -1.0, 0.0, 0.0).is_err());
        assert!(ModeParams::new(1.0, 0.1, 1.0, 1.5, 0.0).is_err());
        assert!(ModeParams::new(1.0, 0.1, 1.0, 0.0, -0.5).is_err());
        assert!(ModeParams::new(f64::NAN, 0.1, 1.0, 0.0, 0.0).is_err());
        assert!(EnsembleModel::new(vec![], 1.0).is_err());
        let m = ModeParams::new(1.0, 0.1, 1.0, 0.0, 0.0).unwrap();
        assert!(EnsembleModel::single(m, 1.2).is_err());
        assert!(ExtraneousNoise::new(1.0, 0.0, 1.0).is_err());
    }

    #[test]
    fn clebsch_values() {
        assert_relative_eq!(clebsch_coefficient(4, 3).unwrap(), 8f64.sqrt());
        assert_relative_eq!(clebsch_coefficient(4, 0).unwrap(), 20f64.sqrt());
        assert_eq!(
            clebsch_coefficient(4, -4).unwrap(),
            clebsch_coefficient(4, 3).unwrap()
        );
        assert!(clebsch_coefficient(4, 4).is_err());
        assert!(clebsch_coefficient(4, -5).is_err());
    }

    fn spec(populations: Vec<f64>) -> CesiumLevelSpec {
        CesiumLevelSpec {
            f_number: 4,
            populations,
            larmor: 1.0e6,
            split_qz: 0.0,
            split_ts: 0.0,
            rate_scale: 2.0,
            zeta_common: 0.1,
            gamma0: 5.0,
        }
    }

    #[test]
    fn fully_stretched_state_keeps_one_mode() {
        let mut pops = vec![0.0; 9];
        pops[8] = 1000.0;
        let model = build_cesium_ensemble(&spec(pops)).unwrap();
        assert_eq!(model.len(), 1);
        let m = model.modes()[0];
        assert_relative_eq!(m.gamma_meas, 2.0 * 8.0 * 1000.0, max_relative = 1e-14);
        assert_eq!(m.n_th, 0.0);
        assert_relative_eq!(m.zeta, 0.1, max_relative = 1e-15);
    }

    #[test]
    fn uniform_population_steps_follow_clebsch_squares() {
        let pops: Vec<f64> = (0..9).map(|k| 10.0 + 3.0 * k as f64).collect();
        let model = build_cesium_ensemble(&spec(pops)).unwrap();
        assert_eq!(model.len(), 8);
        let expected = [8.0, 14.0, 18.0, 20.0, 20.0, 18.0, 14.0, 8.0];
        for (mode, c2) in model.modes().iter().zip(expected) {
            assert_relative_eq!(mode.gamma_meas / (2.0 * 3.0), c2, max_relative = 1e-14);
            assert_eq!(mode.omega, 1.0e6);
        }
    }

    #[test]
    fn geometric_populations_give_common_occupancy() {
        let pops = CesiumLevelSpec::geometric_populations(4, 19.0 / 9.0, 2e10);
        let model = build_cesium_ensemble(&spec(pops)).unwrap();
        assert_eq!(model.len(), 8);
        for mode in model.modes() {
            assert_relative_eq!(mode.n_th, 0.9, max_relative = 1e-12);
        }
    }

    #[test]
    fn inverted_population_is_rejected() {
        let mut pops: Vec<f64> = (0..9).map(|k| 1.0 + k as f64).collect();
        pops[3] = 100.0;
        match build_cesium_ensemble(&spec(pops)) {
            Err(Error::InvalidPopulation { m, .. }) => assert_eq!(m, -1),
            other => panic!("expected population error, got {other:?}"),
        }
    }

    #[test]
    fn splittings_and_zeta_structure() {
        let pops: Vec<f64> = (0..9).map(|k| 1.0 + k as f64).collect();
        let mut s = spec(pops);
        s.split_qz = 30.0;
        s.split_ts = -10.0;
        let model = build_cesium_ensemble(&s).unwrap();
        for (i, mode) in model.modes().iter().enumerate() {
            let m = i as i32 - 4;
            let k = (2 * m + 1) as f64;
            assert_eq!(mode.omega, 1.0e6 + 20.0 * k);
            assert_relative_eq!(mode.zeta, 0.1 * k / 7.0, max_relative = 1e-15);
        }
        // zeta odd, Gamma even under m -> -m-1 for symmetric steps
        let modes = model.modes();
        for i in 0..4 {
            assert_relative_eq!(modes[i].zeta, -modes[7 - i].zeta, max_relative = 1e-15);
            assert_relative_eq!(
                modes[i].gamma_meas,
                modes[7 - i].gamma_meas,
                max_relative = 1e-15
            );
        }
    }

    #[test]
    fn model_file_round_trip_units() {
        let json = r#"{"modes":[{"omega_hz":1.0e6,"gamma0_hz":100.0,"gamma_meas_hz":13e3,"zeta":0.01,"n_th":0.9}],
                      "eta":0.91,"extraneous":{"amplitude_sn":0.7,"width_hz":3e5,"center_hz":1.0e6}}"#;
        let file: ModelFile = serde_json::from_str(json).unwrap();
        let model = file.to_model().unwrap();
        assert_relative_eq!(model.modes()[0].omega, TAU * 1e6);
        assert_relative_eq!(model.extraneous().unwrap().width, TAU * 3e5);
        assert_eq!(model.damping(), Damping::Symmetric);
        let back = ModelFile::from_model(&model);
        assert_relative_eq!(back.modes[0].gamma_meas_hz, 13e3, max_relative = 1e-15);
    }

    proptest! {
        #[test]
        fn derived_rates_are_homogeneous(
            gamma in 0.0f64..10.0, gamma0 in 0.01f64..5.0, zeta in -1.0f64..1.0,
            n_th in 0.0f64..3.0, s in 0.01f64..100.0,
        ) {
            let a = derived_rates(&ModeParams::new(1.0, gamma0, gamma, zeta, n_th).unwrap());
            let b = derived_rates(&ModeParams::new(1.0, s * gamma0, s * gamma, zeta, n_th).unwrap());
            let close = |x: f64, y: f64| (x - y).abs() <= 1e-12 * x.abs().max(y.abs()).max(1e-300);
            prop_assert!(close(b.gamma_th, s * a.gamma_th));
            prop_assert!(close(b.gamma_dba, s * a.gamma_dba));
            prop_assert!(close(b.gamma_qba, s * a.gamma_qba));
            prop_assert!(close(b.gamma_total, s * a.gamma_total));
            prop_assert!(close(b.gamma_dec, s * a.gamma_dec));
            prop_assert!(close(b.c_q, a.c_q));
        }

        #[test]
        fn ensemble_rate_sum_matches_population_sum(
            steps in proptest::collection::vec(0.1f64..10.0, 8), base in 0.0f64..5.0,
        ) {
            let mut pops = vec![base];
            for d in &steps {
                let last = *pops.last().unwrap();
                pops.push(last + d);
            }
            let model = build_cesium_ensemble(&spec(pops)).unwrap();
            let expected: f64 = (-4..4)
                .zip(&steps)
                .map(|(m, d)| 2.0 * clebsch_coefficient(4, m).unwrap().powi(2) * d)
                .sum();
            let close = (model.total_measurement_rate() - expected).abs() <= 1e-12 * expected;
            prop_assert!(close);
        }

        #[test]
        fn weighted_thermal_rate_with_shared_parameters(
            rates in proptest::collection::vec(0.01f64..10.0, 1..6),
            gamma0 in 0.01f64..2.0, n_th in 0.0f64..3.0,
        ) {
            let modes = rates
                .iter()
                .map(|g| ModeParams::new(1.0, gamma0, *g, 0.0, n_th).unwrap())
                .collect();
            let model = EnsembleModel::new(modes, 1.0).unwrap();
            let single = (2.0 * n_th + 1.0) * gamma0;
            prop_assert!((model.total_thermal_rate() - single).abs() <= 1e-12 * single);
        }
    }
}

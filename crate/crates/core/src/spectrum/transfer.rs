use nalgebra::DMatrix;
use num_complex::Complex64;
use rayon::prelude::*;

use super::QuadratureSpectra;
use crate::error::{Error, Result};
use crate::model::{Damping, EnsembleModel, SHOT_NOISE};

/// Input-to-output response of the light quadratures on a frequency grid.
///
/// Inputs are stacked as `(X_in, P_in, F_1^X, F_1^P, …, F_n^X, F_n^P)`;
/// outputs are `(X_out, P_out)`. The direct feedthrough of the light is
/// included.
#[derive(Debug, Clone)]
pub struct TransferMatrices {
    pub grid: Vec<f64>,
    /// One `2 × (2 + 2n)` matrix per grid point.
    pub matrices: Vec<DMatrix<Complex64>>,
    /// Symmetrized spectral density of each (white, uncorrelated) input.
    pub input_spectra: Vec<f64>,
}

impl TransferMatrices {
    pub fn n_inputs(&self) -> usize {
        self.input_spectra.len()
    }

    /// `T S_w T†` per grid point.
    pub fn quadrature_spectra(&self) -> Vec<QuadratureSpectra> {
        let weights = &self.input_spectra;
        self.matrices
            .par_iter()
            .map(|t| {
                let mut s_xx = 0.0;
                let mut s_pp = 0.0;
                let mut s_xp = Complex64::new(0.0, 0.0);
                for (k, w) in weights.iter().enumerate() {
                    let (tx, tp) = (t[(0, k)], t[(1, k)]);
                    s_xx += tx.norm_sqr() * w;
                    s_pp += tp.norm_sqr() * w;
                    s_xp += tx * tp.conj() * *w;
                }
                QuadratureSpectra { s_xx, s_pp, s_xp }
            })
            .collect()
    }
}

struct StateSpace {
    drift: DMatrix<f64>,
    input: DMatrix<f64>,
    output: DMatrix<f64>,
    feedthrough: DMatrix<f64>,
    input_spectra: Vec<f64>,
}

/// Drift matrix of the oscillator quadratures `(X_1, P_1, …, X_n, P_n)`.
pub fn drift_matrix(model: &EnsembleModel) -> DMatrix<f64> {
    state_space(model).drift
}

fn state_space(model: &EnsembleModel) -> StateSpace {
    let modes = model.modes();
    let n = modes.len();
    let n_in = 2 + 2 * n;
    let mut drift = DMatrix::zeros(2 * n, 2 * n);
    let mut input = DMatrix::zeros(2 * n, n_in);
    let mut output = DMatrix::zeros(2, 2 * n);
    let mut feedthrough = DMatrix::zeros(2, n_in);
    feedthrough[(0, 0)] = 1.0;
    feedthrough[(1, 1)] = 1.0;
    let mut input_spectra = vec![SHOT_NOISE; n_in];

    let root: Vec<f64> = modes.iter().map(|m| m.gamma_meas.sqrt()).collect();
    for (i, mode) in modes.iter().enumerate() {
        let (x, p) = (2 * i, 2 * i + 1);
        let (fx, fp) = (2 + 2 * i, 3 + 2 * i);
        drift[(x, p)] += mode.omega;
        drift[(p, x)] -= mode.omega;
        match model.damping() {
            Damping::Symmetric => {
                drift[(x, x)] -= mode.gamma0 / 2.0;
                drift[(p, p)] -= mode.gamma0 / 2.0;
                input[(x, fx)] = 1.0;
                input[(p, fp)] = 1.0;
            }
            Damping::Viscous => {
                drift[(p, p)] -= mode.gamma0;
                input[(p, fp)] = std::f64::consts::SQRT_2;
            }
        }
        for (j, other) in modes.iter().enumerate() {
            let g = root[i] * root[j];
            drift[(x, 2 * j)] -= mode.zeta * g;
            drift[(p, 2 * j + 1)] -= other.zeta * g;
        }
        input[(x, 1)] = -2.0 * mode.zeta * root[i];
        input[(p, 0)] = 2.0 * root[i];
        output[(0, p)] = -mode.zeta * root[i];
        output[(1, x)] = root[i];
        let thermal = mode.gamma0 * (mode.n_th + 0.5);
        input_spectra[fx] = thermal;
        input_spectra[fp] = thermal;
    }
    StateSpace {
        drift,
        input,
        output,
        feedthrough,
        input_spectra,
    }
}

fn check_stability(drift: &DMatrix<f64>) -> Result<()> {
    let scale = drift.amax().max(f64::MIN_POSITIVE);
    let max_real_part = drift
        .complex_eigenvalues()
        .iter()
        .map(|z| z.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_real_part > 1e-12 * scale {
        return Err(Error::Unstable { max_real_part });
    }
    Ok(())
}

/// Builds the drift, drive and output maps of the model and evaluates
/// `T[Ω] = C (−iΩ I − A)⁻¹ B + D` on every grid point.
///
/// Models with a drift eigenvalue in the right half-plane are refused.
/// Undamped modes are allowed; evaluating exactly on their resonance fails
/// with [`Error::Singular`].
pub fn drift_and_transfer(model: &EnsembleModel, grid: &[f64]) -> Result<TransferMatrices> {
    model.validate()?;
    let ss = state_space(model);
    check_stability(&ss.drift)?;
    let dim = ss.drift.nrows();
    let drift_c = ss.drift.map(|v| Complex64::new(v, 0.0));
    let input_c = ss.input.map(|v| Complex64::new(v, 0.0));
    let output_c = ss.output.map(|v| Complex64::new(v, 0.0));
    let feed_c = ss.feedthrough.map(|v| Complex64::new(v, 0.0));

    let matrices = grid
        .par_iter()
        .map(|&omega| {
            let mut m = -&drift_c;
            for k in 0..dim {
                m[(k, k)] -= Complex64::new(0.0, omega);
            }
            let response = m.lu().solve(&input_c).ok_or(Error::Singular { omega })?;
            if response.iter().any(|z| !z.is_finite()) {
                return Err(Error::Singular { omega });
            }
            Ok(&output_c * response + &feed_c)
        })
        .collect::<Result<Vec<_>>>()?;

    Ok(TransferMatrices {
        grid: grid.to_vec(),
        matrices,
        input_spectra: ss.input_spectra,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::ModeParams;
    use crate::spectrum::susceptibility;
    use approx::assert_relative_eq;

    fn grid() -> Vec<f64> {
        (0..200).map(|k| 0.05 * k as f64).collect()
    }

    #[test]
    fn no_coupling_is_identity_feedthrough() {
        let modes = vec![
            ModeParams::new(3.0, 0.1, 0.0, 0.2, 0.5).unwrap(),
            ModeParams::new(3.1, 0.2, 0.0, -0.1, 0.5).unwrap(),
        ];
        let model = EnsembleModel::new(modes, 1.0).unwrap();
        let t = drift_and_transfer(&model, &grid()).unwrap();
        for m in &t.matrices {
            for r in 0..2 {
                for c in 0..t.n_inputs() {
                    let expected = if r == c { 1.0 } else { 0.0 };
                    assert_eq!(m[(r, c)], Complex64::new(expected, 0.0));
                }
            }
        }
    }

    #[test]
    fn viscous_single_mode_matches_susceptibility() {
        let mode = ModeParams::new(4.0, 0.2, 0.7, 0.0, 0.3).unwrap();
        let model = EnsembleModel::single(mode, 1.0)
            .unwrap()
            .with_damping(Damping::Viscous);
        let t = drift_and_transfer(&model, &grid()).unwrap();
        for (w, m) in t.grid.iter().zip(&t.matrices) {
            let expected = 2.0 * 0.7 * susceptibility(&mode, *w);
            let got = m[(1, 0)];
            assert!((got - expected).norm() <= 1e-12 * expected.norm());
        }
    }

    #[test]
    fn degenerate_modes_add_up() {
        let a = ModeParams::new(4.0, 0.2, 0.3, 0.0, 0.3).unwrap();
        let b = ModeParams::new(4.0, 0.2, 0.5, 0.0, 0.3).unwrap();
        let joint = ModeParams::new(4.0, 0.2, 0.8, 0.0, 0.3).unwrap();
        for damping in [Damping::Symmetric, Damping::Viscous] {
            let two = EnsembleModel::new(vec![a, b], 1.0)
                .unwrap()
                .with_damping(damping);
            let one = EnsembleModel::single(joint, 1.0)
                .unwrap()
                .with_damping(damping);
            let t2 = drift_and_transfer(&two, &grid()).unwrap();
            let t1 = drift_and_transfer(&one, &grid()).unwrap();
            for (m2, m1) in t2.matrices.iter().zip(&t1.matrices) {
                assert_relative_eq!(
                    m2[(1, 0)].re,
                    m1[(1, 0)].re,
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
                assert_relative_eq!(
                    m2[(1, 0)].im,
                    m1[(1, 0)].im,
                    epsilon = 1e-12,
                    max_relative = 1e-10
                );
            }
        }
    }

    #[test]
    fn drift_structure_follows_langevin_equations() {
        let modes = vec![
            ModeParams::new(2.0, 0.2, 0.5, 0.1, 0.0).unwrap(),
            ModeParams::new(2.5, 0.4, 2.0, -0.3, 0.0).unwrap(),
        ];
        let model = EnsembleModel::new(modes, 1.0).unwrap();
        let a = drift_matrix(&model);
        let g = (0.5f64 * 2.0).sqrt();
        assert_relative_eq!(a[(0, 0)], -0.1 - 0.1 * 0.5);
        assert_relative_eq!(a[(0, 1)], 2.0);
        assert_relative_eq!(a[(0, 2)], -0.1 * g);
        assert_relative_eq!(a[(1, 3)], 0.3 * g);
        assert_relative_eq!(a[(2, 0)], 0.3 * g);
        assert_relative_eq!(a[(3, 1)], -0.1 * g);
        assert_relative_eq!(a[(3, 3)], -0.2 + 0.3 * 2.0);
    }

    #[test]
    fn anti_damped_model_is_refused() {
        let mode = ModeParams::new(2.0, 0.01, 1.0, -0.5, 0.0).unwrap();
        let model = EnsembleModel::single(mode, 1.0).unwrap();
        assert!(matches!(
            drift_and_transfer(&model, &[1.0]),
            Err(Error::Unstable { .. })
        ));
    }

    #[test]
    fn undamped_resonance_is_singular() {
        let mode = ModeParams::new(2.0, 0.0, 1.0, 0.0, 0.0).unwrap();
        let model = EnsembleModel::single(mode, 1.0).unwrap();
        assert!(drift_and_transfer(&model, &[1.0, 1.5]).is_ok());
        assert!(matches!(
            drift_and_transfer(&model, &[1.0, 2.0]),
            Err(Error::Singular { omega }) if omega == 2.0
        ));
    }
}

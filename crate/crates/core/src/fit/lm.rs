//! Levenberg-Marquardt iteration over the smooth internal coordinates.

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use super::params::{self, natural_derivative, to_internal, to_natural, ParamKind};
use super::response::apply_response_correction;
use super::{FitParameter, FitProblem, FitResult, Termination, TraceData};
use crate::error::Result;
use crate::model::EnsembleModel;
use crate::spectrum::{extraneous_noise, quadrature_spectra, QuadratureSpectra};

const COST_DECREASE_TOL: f64 = 1e-10;
const STEP_TOL: f64 = 1e-14;

struct Evaluator<'a> {
    problem: &'a FitProblem,
    data: Vec<TraceData>,
    grids: Vec<Vec<f64>>,
    group_of: Vec<usize>,
    theta0: Vec<f64>,
    free_idx: Vec<usize>,
}

/// Model values and residuals at one point of parameter space.
struct State {
    u: Vec<f64>,
    model: EnsembleModel,
    angles: Vec<f64>,
    spectra: Vec<Vec<QuadratureSpectra>>,
    ext: Vec<Option<Vec<f64>>>,
    values: Vec<Vec<f64>>,
    residuals: Vec<f64>,
    cost: f64,
}

impl<'a> Evaluator<'a> {
    fn new(problem: &'a FitProblem) -> Result<Self> {
        let data = match problem.response_correction() {
            Some(c) => problem
                .dataset()
                .iter()
                .map(|d| {
                    Ok(TraceData {
                        trace: apply_response_correction(&d.trace, c)?,
                        n_avg: d.n_avg,
                    })
                })
                .collect::<Result<Vec<_>>>()?,
            None => problem.dataset().to_vec(),
        };
        let mut grids: Vec<Vec<f64>> = Vec::new();
        let mut group_of = Vec::with_capacity(data.len());
        for d in &data {
            let g = &d.trace.grid;
            let k = match grids.iter().position(|x| x == g) {
                Some(k) => k,
                None => {
                    grids.push(g.clone());
                    grids.len() - 1
                }
            };
            group_of.push(k);
        }
        let theta0 = params::pack(
            problem.initial_model(),
            problem.initial_angles(),
            problem.angle_mode(),
        );
        let free_idx = (0..theta0.len())
            .filter(|&i| problem.free_mask().0[i])
            .collect();
        Ok(Self {
            problem,
            data,
            grids,
            group_of,
            theta0,
            free_idx,
        })
    }

    fn initial_u(&self) -> Result<Vec<f64>> {
        self.problem
            .layout()
            .iter()
            .zip(&self.theta0)
            .map(|(s, v)| to_internal(s, *v))
            .collect()
    }

    /// Natural values; fixed parameters keep their exact starting value.
    fn theta(&self, u: &[f64]) -> Vec<f64> {
        let mut theta = self.theta0.clone();
        for &i in &self.free_idx {
            theta[i] = to_natural(&self.problem.layout()[i], u[i]);
        }
        theta
    }

    fn unpack(&self, u: &[f64]) -> Result<(EnsembleModel, Vec<f64>)> {
        params::unpack(
            self.problem.initial_model(),
            &self.theta(u),
            self.data.len(),
            self.problem.angle_mode(),
        )
    }

    fn spectra(&self, model: &EnsembleModel) -> Result<Vec<Vec<QuadratureSpectra>>> {
        self.grids
            .iter()
            .map(|g| quadrature_spectra(model, g, false))
            .collect()
    }

    fn ext(&self, model: &EnsembleModel) -> Vec<Option<Vec<f64>>> {
        self.grids
            .iter()
            .map(|g| model.extraneous().map(|e| extraneous_noise(e, g)))
            .collect()
    }

    fn values(
        &self,
        eta: f64,
        angles: &[f64],
        spectra: &[Vec<QuadratureSpectra>],
        ext: &[Option<Vec<f64>>],
    ) -> Vec<Vec<f64>> {
        angles
            .iter()
            .zip(&self.group_of)
            .map(|(&phi, &g)| {
                let c2 = phi.cos().powi(2);
                spectra[g]
                    .iter()
                    .enumerate()
                    .map(|(j, s)| {
                        let base = s.detected_sn(phi, eta);
                        match &ext[g] {
                            Some(e) => base + eta * c2 * e[j],
                            None => base,
                        }
                    })
                    .collect()
            })
            .collect()
    }

    fn residuals(&self, values: &[Vec<f64>]) -> Vec<f64> {
        self.data
            .iter()
            .zip(values)
            .flat_map(|(d, v)| {
                let w = d.n_avg.sqrt();
                d.trace
                    .values_sn
                    .iter()
                    .zip(v)
                    .map(move |(data, model)| w * (model - data) / model)
            })
            .collect()
    }

    fn evaluate(&self, u: Vec<f64>) -> Result<State> {
        let (model, angles) = self.unpack(&u)?;
        let spectra = self.spectra(&model)?;
        let ext = self.ext(&model);
        let values = self.values(model.eta(), &angles, &spectra, &ext);
        let residuals = self.residuals(&values);
        let cost = residuals.iter().map(|r| r * r).sum();
        Ok(State {
            u,
            model,
            angles,
            spectra,
            ext,
            values,
            residuals,
            cost,
        })
    }

    /// `∂S_model/∂u_i` for every bin, flattened in residual order.
    fn value_derivative(&self, state: &State, i: usize) -> Result<Vec<f64>> {
        let spec = &self.problem.layout()[i];
        let eta = state.model.eta();
        let dtheta = natural_derivative(spec, state.u[i]);
        if spec.kind.is_structural() {
            let h = 1e-6 * state.u[i].abs().max(1e-2);
            let shifted = |delta: f64| -> Result<Vec<Vec<f64>>> {
                let mut u = state.u.clone();
                u[i] += delta;
                let (model, angles) = self.unpack(&u)?;
                let spectra = self.spectra(&model)?;
                Ok(self.values(eta, &angles, &spectra, &state.ext))
            };
            let (plus, minus, width) = match (shifted(h), shifted(-h)) {
                (Ok(p), Ok(m)) => (p, m, 2.0 * h),
                (Ok(p), Err(_)) => (p, state.values.clone(), h),
                (Err(_), Ok(m)) => (state.values.clone(), m, h),
                (Err(e), Err(_)) => return Err(e),
            };
            return Ok(plus
                .iter()
                .flatten()
                .zip(minus.iter().flatten())
                .map(|(p, m)| (p - m) / width)
                .collect());
        }
        let mut out = Vec::with_capacity(state.residuals.len());
        for (k, (&phi, &g)) in state.angles.iter().zip(&self.group_of).enumerate() {
            let ext = state.ext[g].as_deref();
            let (s2, c2) = ((2.0 * phi).sin(), phi.cos().powi(2));
            for (j, s) in state.spectra[g].iter().enumerate() {
                let e = ext.map_or(0.0, |e| e[j]);
                let d_phi = s.detected_sn_angle_derivative(phi, eta) - eta * s2 * e;
                let d = match spec.kind {
                    ParamKind::Angle if spec.index == Some(k) => d_phi,
                    ParamKind::Angle => 0.0,
                    ParamKind::AngleOffset => d_phi,
                    ParamKind::AngleStep => k as f64 * d_phi,
                    ParamKind::ExtAmplitude | ParamKind::ExtWidth => {
                        let Some(x) = state.model.extraneous() else {
                            unreachable!("extraneous parameters exist only with extraneous noise")
                        };
                        let z = (self.grids[g][j] - x.center) / x.width;
                        let shape = (-0.5 * z * z).exp();
                        if spec.kind == ParamKind::ExtAmplitude {
                            eta * c2 * shape
                        } else {
                            eta * c2 * x.amplitude * shape * z * z / x.width
                        }
                    }
                    _ => unreachable!("structural parameters handled above"),
                };
                out.push(d * dtheta);
            }
        }
        Ok(out)
    }

    /// Jacobian of the residuals over the free parameters.
    fn jacobian(&self, state: &State) -> Result<DMatrix<f64>> {
        let columns = self
            .free_idx
            .par_iter()
            .map(|&i| self.value_derivative(state, i))
            .collect::<Result<Vec<_>>>()?;
        let mut scale = Vec::with_capacity(state.residuals.len());
        for (d, v) in self.data.iter().zip(&state.values) {
            let w = d.n_avg.sqrt();
            for (data, model) in d.trace.values_sn.iter().zip(v) {
                scale.push(w * data / (model * model));
            }
        }
        Ok(DMatrix::from_fn(scale.len(), columns.len(), |r, c| {
            scale[r] * columns[c][r]
        }))
    }
}

fn solve_damped(jtj: &DMatrix<f64>, g: &DVector<f64>, lambda: f64) -> Option<DVector<f64>> {
    let max_diag = jtj.diagonal().amax();
    let mut m = jtj.clone();
    for k in 0..m.nrows() {
        m[(k, k)] += lambda * jtj[(k, k)].max(1e-12 * max_diag).max(f64::MIN_POSITIVE);
    }
    let rhs = -g;
    match m.clone().cholesky() {
        Some(ch) => Some(ch.solve(&rhs)),
        None => m.lu().solve(&rhs),
    }
}

/// Fits all traces at once.
///
/// Residuals are `√n_avg (S_model − S_data) / S_model`, so the cost is the
/// gamma-noise weighted sum of squares. Steps that produce an unstable or
/// invalid model are rejected like steps that raise the cost. Errors are
/// returned only when the starting point itself cannot be evaluated.
pub fn global_fit(problem: &FitProblem) -> Result<FitResult> {
    let ev = Evaluator::new(problem)?;
    let n_points = problem.n_points();
    let zero_cost = 1e-20 * n_points as f64;
    let mut state = ev.evaluate(ev.initial_u()?)?;
    let initial_cost = state.cost;
    let mut history = vec![state.cost];
    let mut iterations = 0;

    let termination = 'outer: {
        if ev.free_idx.is_empty() {
            break 'outer Termination::NoFreeParameters;
        }
        if state.cost <= zero_cost {
            break 'outer Termination::ZeroCost;
        }
        let mut jac = ev.jacobian(&state)?;
        let mut lambda = 1e-3;
        let mut nu = 2.0;
        while iterations < problem.max_iterations() {
            iterations += 1;
            let r = DVector::from_column_slice(&state.residuals);
            let jtj = jac.transpose() * &jac;
            let g = jac.transpose() * r;
            loop {
                let Some(step) = solve_damped(&jtj, &g, lambda) else {
                    break 'outer Termination::StepTolerance;
                };
                let u_norm = ev
                    .free_idx
                    .iter()
                    .map(|&i| state.u[i].powi(2))
                    .sum::<f64>()
                    .sqrt();
                if !(step.norm() > STEP_TOL * (u_norm + STEP_TOL)) {
                    break 'outer Termination::StepTolerance;
                }
                let mut u = state.u.clone();
                for (k, &i) in ev.free_idx.iter().enumerate() {
                    u[i] += step[k];
                }
                let trial = ev.evaluate(u).ok().filter(|t| t.cost.is_finite());
                match trial {
                    Some(trial) if trial.cost < state.cost => {
                        let predicted = -2.0 * step.dot(&g) - (&jtj * &step).dot(&step);
                        let rho = (state.cost - trial.cost) / predicted.max(f64::MIN_POSITIVE);
                        lambda *= (1.0 - (2.0 * rho - 1.0).powi(3)).max(1.0 / 3.0);
                        nu = 2.0;
                        let decrease = (state.cost - trial.cost) / state.cost;
                        state = trial;
                        history.push(state.cost);
                        if state.cost <= zero_cost {
                            break 'outer Termination::ZeroCost;
                        }
                        if decrease < COST_DECREASE_TOL {
                            break 'outer Termination::CostDecrease;
                        }
                        jac = ev.jacobian(&state)?;
                        break;
                    }
                    _ => {
                        lambda *= nu;
                        nu *= 2.0;
                        if !lambda.is_finite() {
                            break 'outer Termination::StepTolerance;
                        }
                    }
                }
            }
        }
        Termination::MaxIterations
    };

    let standard_errors = standard_errors(&ev, &state);
    let layout = problem.layout();
    let theta = ev.theta(&state.u);
    let mut parameters: Vec<FitParameter> = layout
        .iter()
        .zip(&theta)
        .zip(&problem.free_mask().0)
        .map(|((spec, value), free)| FitParameter {
            name: spec.name.clone(),
            kind: spec.kind,
            index: spec.index,
            value: *value,
            standard_error: None,
            free: *free,
        })
        .collect();
    if let Some(se) = standard_errors {
        for (k, &i) in ev.free_idx.iter().enumerate() {
            parameters[i].standard_error = Some(se[k]);
        }
    }
    let mut per_trace_residuals = Vec::with_capacity(ev.data.len());
    let mut at = 0;
    for d in &ev.data {
        let n = d.trace.len();
        per_trace_residuals.push(state.residuals[at..at + n].iter().map(|r| r * r).sum());
        at += n;
    }
    let (model, angles) = if ev.free_idx.is_empty() {
        (
            problem.initial_model().clone(),
            problem.initial_angles().to_vec(),
        )
    } else {
        (state.model, state.angles)
    };
    Ok(FitResult {
        parameters,
        model,
        angles,
        cost: state.cost,
        initial_cost,
        per_trace_residuals,
        cost_history: history,
        iterations,
        converged: termination.is_converged(),
        termination,
        n_points,
        n_free: ev.free_idx.len(),
    })
}

/// Natural-unit standard errors from the inverse curvature `(JᵀJ)⁻¹`.
fn standard_errors(ev: &Evaluator, state: &State) -> Option<Vec<f64>> {
    if ev.free_idx.is_empty() {
        return None;
    }
    let jac = ev.jacobian(state).ok()?;
    let cov = (jac.transpose() * &jac).try_inverse()?;
    let layout = ev.problem.layout();
    let se: Vec<f64> = ev
        .free_idx
        .iter()
        .enumerate()
        .map(|(k, &i)| {
            natural_derivative(&layout[i], state.u[i]).abs() * cov[(k, k)].max(0.0).sqrt()
        })
        .collect();
    se.iter().all(|v| v.is_finite()).then_some(se)
}

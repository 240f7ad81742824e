//! First-order ray optics for the collimated tophat probe.
//!
//! The simple setup `M_a = L(f2) S(f1) L(f1)` places a negative lens where the
//! shaped beam reaches its optimum profile. [`solve_equivalent_setup`] finds
//! lens separations for two given lenses `F1`, `F2` that realize the same ray
//! matrix (optionally with a transverse inversion), so that no lens has to sit
//! inside the vapor cell. Lengths are meters.

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};

/// 2×2 ray transfer matrix acting on `(height, slope)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RayMatrix {
    pub a: f64,
    /// meters
    pub b: f64,
    /// 1/meters
    pub c: f64,
    pub d: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Ray {
    pub height: f64,
    pub slope: f64,
}

impl RayMatrix {
    pub const IDENTITY: RayMatrix = RayMatrix {
        a: 1.0,
        b: 0.0,
        c: 0.0,
        d: 1.0,
    };

    pub fn determinant(&self) -> f64 {
        self.a * self.d - self.b * self.c
    }

    /// `self · rhs`: `rhs` acts first.
    pub fn then_after(&self, rhs: &RayMatrix) -> RayMatrix {
        RayMatrix {
            a: self.a * rhs.a + self.b * rhs.c,
            b: self.a * rhs.b + self.b * rhs.d,
            c: self.c * rhs.a + self.d * rhs.c,
            d: self.c * rhs.b + self.d * rhs.d,
        }
    }

    pub fn apply(&self, ray: Ray) -> Ray {
        Ray {
            height: self.a * ray.height + self.b * ray.slope,
            slope: self.c * ray.height + self.d * ray.slope,
        }
    }

    pub fn negate(&self) -> RayMatrix {
        RayMatrix {
            a: -self.a,
            b: -self.b,
            c: -self.c,
            d: -self.d,
        }
    }

    /// Largest entrywise difference.
    pub fn max_abs_diff(&self, other: &RayMatrix) -> f64 {
        (self.a - other.a)
            .abs()
            .max((self.b - other.b).abs())
            .max((self.c - other.c).abs())
            .max((self.d - other.d).abs())
    }
}

/// `S(L) = [[1, L], [0, 1]]`.
pub fn free_space(length: f64) -> RayMatrix {
    RayMatrix {
        a: 1.0,
        b: length,
        c: 0.0,
        d: 1.0,
    }
}

/// `L(f) = [[1, 0], [−1/f, 1]]`. Use [`RayMatrix::IDENTITY`] for `f = ∞`.
pub fn thin_lens(focal_length: f64) -> Result<RayMatrix> {
    if focal_length == 0.0 || !focal_length.is_finite() {
        return Err(invalid(format!(
            "focal length must be finite and nonzero, got {focal_length}"
        )));
    }
    Ok(RayMatrix {
        a: 1.0,
        b: 0.0,
        c: -1.0 / focal_length,
        d: 1.0,
    })
}

/// Product of the elements in the order they are written,
/// `compose(&[M3, M2, M1]) = M3·M2·M1`: the rightmost element is traversed
/// first.
pub fn compose(elements: &[RayMatrix]) -> RayMatrix {
    elements
        .iter()
        .fold(RayMatrix::IDENTITY, |acc, m| acc.then_after(m))
}

/// Focal length of the lens that collimates the shaped beam at the optimum
/// plane, `f2 = (φ_FA/w_in · f1) / (φ_FA/w_in − 1/f1)`.
pub fn collimating_negative_lens(w_in: f64, fan_angle: f64, f1: f64) -> Result<f64> {
    if !(w_in > 0.0) || !fan_angle.is_finite() || f1 == 0.0 || !f1.is_finite() {
        return Err(invalid(format!(
            "need w_in > 0 and finite nonzero f1, got w_in = {w_in}, f1 = {f1}"
        )));
    }
    let k = fan_angle / w_in;
    let denom = k - 1.0 / f1;
    if denom.abs() <= 1e-12 * k.abs().max(1.0 / f1.abs()) {
        return Err(invalid(
            "fan_angle / w_in equals 1 / f1: the beam is already collimated after f1",
        ));
    }
    Ok(k * f1 / denom)
}

/// `M_a = L(f2) S(f1) L(f1)`.
pub fn simple_setup(f1: f64, f2: f64) -> Result<RayMatrix> {
    Ok(compose(&[thin_lens(f2)?, free_space(f1), thin_lens(f1)?]))
}

/// `M_b = S(L3) L(F2) S(L2) L(F1) S(L1)`.
pub fn realistic_setup(big_f1: f64, big_f2: f64, l1: f64, l2: f64, l3: f64) -> Result<RayMatrix> {
    Ok(compose(&[
        free_space(l3),
        thin_lens(big_f2)?,
        free_space(l2),
        thin_lens(big_f1)?,
        free_space(l1),
    ]))
}

/// Separations of the realistic setup.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Separations {
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// `‖M_b − target‖_max`.
    pub residual: f64,
}

const RESIDUAL_TOL: f64 = 1e-9;

/// Finds non-negative `L1, L2, L3` with `M_b = target`.
///
/// Damped Newton iterations on the four matrix entries are started from a
/// grid over `[0, 5 max(|F1|, |F2|)]³`. Among the starts that reach the
/// tolerance the lowest `L1` (then `L2`) wins; otherwise the error reports the
/// best residual seen.
pub fn solve_separations(target: &RayMatrix, big_f1: f64, big_f2: f64) -> Result<Separations> {
    thin_lens(big_f1)?;
    thin_lens(big_f2)?;
    let span = 5.0 * big_f1.abs().max(big_f2.abs());
    let n = 6;
    let mut best: Option<Separations> = None;
    let mut best_residual = f64::INFINITY;
    for i in 0..n {
        for j in 0..n {
            for k in 0..n {
                let start = [
                    span * i as f64 / (n - 1) as f64,
                    span * j as f64 / (n - 1) as f64,
                    span * k as f64 / (n - 1) as f64,
                ];
                let Some(sol) = newton(target, big_f1, big_f2, start) else {
                    continue;
                };
                best_residual = best_residual.min(sol.residual);
                if sol.residual > RESIDUAL_TOL || sol.l1 < 0.0 || sol.l2 < 0.0 || sol.l3 < 0.0 {
                    continue;
                }
                let better = match &best {
                    None => true,
                    Some(b) => (sol.l1, sol.l2) < (b.l1, b.l2),
                };
                if better {
                    best = Some(sol);
                }
            }
        }
    }
    best.ok_or(Error::Infeasible { best_residual })
}

fn residuals(target: &RayMatrix, f1: f64, f2: f64, l: [f64; 3]) -> [f64; 4] {
    let m = compose(&[
        free_space(l[2]),
        lens(f2),
        free_space(l[1]),
        lens(f1),
        free_space(l[0]),
    ]);
    [
        m.a - target.a,
        m.b - target.b,
        m.c - target.c,
        m.d - target.d,
    ]
}

fn lens(f: f64) -> RayMatrix {
    RayMatrix {
        a: 1.0,
        b: 0.0,
        c: -1.0 / f,
        d: 1.0,
    }
}

fn newton(target: &RayMatrix, f1: f64, f2: f64, start: [f64; 3]) -> Option<Separations> {
    let mut l = start;
    let mut r = residuals(target, f1, f2, l);
    let norm = |r: &[f64; 4]| r.iter().map(|v| v * v).sum::<f64>();
    let mut lambda = 1e-9;
    for _ in 0..200 {
        if r.iter().all(|v| v.abs() <= 1e-15 * (1.0 + span_of(target))) {
            break;
        }
        // The entries are affine in each separation, so an exact forward
        // difference with unit step gives the Jacobian column.
        let mut jac = [[0.0; 3]; 4];
        for (col, _) in l.iter().enumerate() {
            let mut lp = l;
            lp[col] += 1.0;
            let rp = residuals(target, f1, f2, lp);
            for row in 0..4 {
                jac[row][col] = rp[row] - r[row];
            }
        }
        let mut jtj = [[0.0; 3]; 3];
        let mut jtr = [0.0; 3];
        for a in 0..3 {
            for b in 0..3 {
                jtj[a][b] = (0..4).map(|row| jac[row][a] * jac[row][b]).sum();
            }
            jtr[a] = (0..4).map(|row| jac[row][a] * r[row]).sum();
        }
        let mut accepted = false;
        for _ in 0..30 {
            let mut m = jtj;
            for a in 0..3 {
                m[a][a] += lambda * (jtj[a][a] + 1e-300);
            }
            let Some(step) = solve3(m, jtr) else {
                lambda *= 10.0;
                continue;
            };
            let trial = [l[0] - step[0], l[1] - step[1], l[2] - step[2]];
            let rt = residuals(target, f1, f2, trial);
            if norm(&rt) < norm(&r) {
                l = trial;
                r = rt;
                lambda = (lambda / 10.0).max(1e-15);
                accepted = true;
                break;
            }
            lambda *= 10.0;
        }
        if !accepted {
            break;
        }
    }
    let residual = r.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    residual.is_finite().then_some(Separations {
        l1: l[0],
        l2: l[1],
        l3: l[2],
        residual,
    })
}

fn span_of(m: &RayMatrix) -> f64 {
    m.a.abs().max(m.b.abs()).max(m.c.abs()).max(m.d.abs())
}

fn solve3(m: [[f64; 3]; 3], rhs: [f64; 3]) -> Option<[f64; 3]> {
    let det = |m: &[[f64; 3]; 3]| {
        m[0][0] * (m[1][1] * m[2][2] - m[1][2] * m[2][1])
            - m[0][1] * (m[1][0] * m[2][2] - m[1][2] * m[2][0])
            + m[0][2] * (m[1][0] * m[2][1] - m[1][1] * m[2][0])
    };
    let d = det(&m);
    if d == 0.0 || !d.is_finite() {
        return None;
    }
    let mut out = [0.0; 3];
    for (col, o) in out.iter_mut().enumerate() {
        let mut mc = m;
        for row in 0..3 {
            mc[row][col] = rhs[row];
        }
        *o = det(&mc) / d;
    }
    Some(out)
}

/// A solved tophat design.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TophatDesign {
    pub w_in: f64,
    pub fan_angle: f64,
    pub f1: f64,
    pub f2: f64,
    pub big_f1: f64,
    pub big_f2: f64,
    pub l1: f64,
    pub l2: f64,
    pub l3: f64,
    /// Whether the realistic setup reproduces `−M_a` (an extra inversion).
    pub inverted: bool,
    pub residual: f64,
}

impl TophatDesign {
    pub fn target(&self) -> Result<RayMatrix> {
        let m = simple_setup(self.f1, self.f2)?;
        Ok(if self.inverted { m.negate() } else { m })
    }

    pub fn realized(&self) -> Result<RayMatrix> {
        realistic_setup(self.big_f1, self.big_f2, self.l1, self.l2, self.l3)
    }

    /// The shaper's marginal ray, height `w_in` and slope `φ_FA`.
    pub fn marginal_ray(&self) -> Ray {
        Ray {
            height: self.w_in,
            slope: self.fan_angle,
        }
    }

    /// Marginal ray after each element of both setups.
    pub fn ray_table(&self) -> Result<Vec<RayTableRow>> {
        let mut rows = Vec::new();
        let mut trace = |setup: &'static str, elements: Vec<(&'static str, RayMatrix, f64)>| {
            let mut ray = self.marginal_ray();
            let mut z = 0.0;
            rows.push(RayTableRow {
                setup,
                element: "input",
                z,
                height: ray.height,
                slope: ray.slope,
            });
            for (name, m, length) in elements {
                ray = m.apply(ray);
                z += length;
                rows.push(RayTableRow {
                    setup,
                    element: name,
                    z,
                    height: ray.height,
                    slope: ray.slope,
                });
            }
        };
        trace(
            "a",
            vec![
                ("lens_f1", thin_lens(self.f1)?, 0.0),
                ("space_f1", free_space(self.f1), self.f1),
                ("lens_f2", thin_lens(self.f2)?, 0.0),
            ],
        );
        trace(
            "b",
            vec![
                ("space_l1", free_space(self.l1), self.l1),
                ("lens_F1", thin_lens(self.big_f1)?, 0.0),
                ("space_l2", free_space(self.l2), self.l2),
                ("lens_F2", thin_lens(self.big_f2)?, 0.0),
                ("space_l3", free_space(self.l3), self.l3),
            ],
        );
        Ok(rows)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayTableRow {
    pub setup: &'static str,
    pub element: &'static str,
    /// Axial position, m.
    pub z: f64,
    pub height: f64,
    pub slope: f64,
}

/// Solves the realistic setup against the simple one built from `f1`, `f2`.
pub fn solve_equivalent_setup(
    w_in: f64,
    fan_angle: f64,
    f1: f64,
    f2: f64,
    big_f1: f64,
    big_f2: f64,
    inverted: bool,
) -> Result<TophatDesign> {
    let simple = simple_setup(f1, f2)?;
    let target = if inverted { simple.negate() } else { simple };
    let sol = solve_separations(&target, big_f1, big_f2)?;
    Ok(TophatDesign {
        w_in,
        fan_angle,
        f1,
        f2,
        big_f1,
        big_f2,
        l1: sol.l1,
        l2: sol.l2,
        l3: sol.l3,
        inverted,
        residual: sol.residual,
    })
}

/// Computes the collimating lens and then the equivalent realistic setup.
pub fn design_tophat(
    w_in: f64,
    fan_angle: f64,
    f1: f64,
    big_f1: f64,
    big_f2: f64,
    inverted: bool,
) -> Result<TophatDesign> {
    let f2 = collimating_negative_lens(w_in, fan_angle, f1)?;
    solve_equivalent_setup(w_in, fan_angle, f1, f2, big_f1, big_f2, inverted)
}

/// Flat-topped intensity profile `exp(−2(x/w_x)^{2n} − 2(y/w_y)^{2n})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SupergaussianProfile {
    pub w_x: f64,
    pub w_y: f64,
    pub order: f64,
}

impl SupergaussianProfile {
    pub fn new(w_x: f64, w_y: f64, order: f64) -> Result<Self> {
        if !(w_x > 0.0 && w_y > 0.0 && order > 0.0) {
            return Err(invalid(format!(
                "widths and order must be positive, got ({w_x}, {w_y}, {order})"
            )));
        }
        Ok(Self { w_x, w_y, order })
    }

    pub fn intensity(&self, x: f64, y: f64) -> f64 {
        supergaussian(self, x, y)
    }
}

pub fn supergaussian(profile: &SupergaussianProfile, x: f64, y: f64) -> f64 {
    let p = 2.0 * profile.order;
    (-2.0 * (x / profile.w_x).abs().powf(p) - 2.0 * (y / profile.w_y).abs().powf(p)).exp()
}

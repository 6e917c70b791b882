//! Discrete orbits of the twist diffeomorphism.
//!
//! Critical points of the action with fixed endpoints satisfy the recurrence
//!
//! ```text
//!   (g_{i+1} - g_i) - (g_i - g_{i-1}) = -V'(g_i),
//! ```
//!
//! which generates the twist map `(g_0, g_1) -> (g_1, g_2)` on pairs of
//! lifted points. All path operations work on lifts in the covering space;
//! reduction mod 1 happens only at grid/measure boundaries.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::model::{DiscreteLagrangian, TwoPointLagrangian};
use crate::Result;

/// Default residual bound certifying that a path is a twist orbit.
pub const TWIST_RESIDUAL_TOL: f64 = 1e-10;

/// Finite sequence of lifted torus points.
#[derive(Debug, Clone, PartialEq)]
pub struct Orbit {
    dim: usize,
    points: Vec<f64>, // flat storage, stride = dim
}

impl Orbit {
    pub fn from_points(dim: usize, points: Vec<Vec<f64>>) -> Result<Self> {
        if points.len() < 2 {
            return Err(CoreError::InvalidArgument(
                "an orbit needs at least two points".into(),
            ));
        }
        let mut flat = Vec::with_capacity(points.len() * dim);
        for p in &points {
            if p.len() != dim {
                return Err(CoreError::InvalidArgument(
                    "orbit point has wrong dimension".into(),
                ));
            }
            flat.extend_from_slice(p);
        }
        Ok(Self { dim, points: flat })
    }

    pub(crate) fn from_flat(dim: usize, points: Vec<f64>) -> Self {
        debug_assert_eq!(points.len() % dim, 0);
        Self { dim, points }
    }

    /// Constant path sitting at `x` with `len` points.
    pub fn constant(x: &[f64], len: usize) -> Self {
        let mut points = Vec::with_capacity(len * x.len());
        for _ in 0..len {
            points.extend_from_slice(x);
        }
        Self {
            dim: x.len(),
            points,
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Number of points (one more than the number of steps).
    pub fn len(&self) -> usize {
        self.points.len() / self.dim
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn point(&self, i: usize) -> &[f64] {
        &self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn point_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.points[i * self.dim..(i + 1) * self.dim]
    }

    pub fn first(&self) -> &[f64] {
        self.point(0)
    }

    pub fn last(&self) -> &[f64] {
        self.point(self.len() - 1)
    }

    /// Sub-path over point indices `[start, end)`.
    pub fn slice(&self, start: usize, end: usize) -> Orbit {
        Orbit {
            dim: self.dim,
            points: self.points[start * self.dim..end * self.dim].to_vec(),
        }
    }

    /// Translate the whole lifted path by an integer vector.
    pub fn translate(&self, n: &[i64]) -> Orbit {
        let mut out = self.clone();
        for i in 0..out.len() {
            for (c, &ni) in out.point_mut(i).iter_mut().zip(n) {
                *c += ni as f64;
            }
        }
        out
    }

    /// Largest Euler–Lagrange residual
    /// `|(g_{i+1} - g_i) - (g_i - g_{i-1}) + V'(g_i)|_inf` over interior points.
    pub fn max_twist_residual(&self, lag: &DiscreteLagrangian) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut grad = vec![0.0; d];
        for i in 1..self.len() - 1 {
            lag.potential().grad_into(self.point(i), &mut grad);
            for k in 0..d {
                let r = self.point(i + 1)[k] - 2.0 * self.point(i)[k] + self.point(i - 1)[k]
                    + grad[k];
                worst = worst.max(r.abs());
            }
        }
        worst
    }

    /// Whether the path satisfies the twist recurrence to `tol`.
    pub fn is_twist_orbit(&self, lag: &DiscreteLagrangian, tol: f64) -> bool {
        self.len() >= 3 && self.max_twist_residual(lag) <= tol
    }

    /// Largest interior Euler–Lagrange residual
    /// `|d2 L(g_{i-1}, g_i) + d1 L(g_i, g_{i+1})|_inf` for a generic
    /// two-point lagrangian.
    pub fn max_el_residual<L: TwoPointLagrangian>(&self, lag: &L) -> f64 {
        let d = self.dim;
        let mut worst = 0.0f64;
        let mut b1 = vec![0.0; d];
        let mut b2 = vec![0.0; d];
        for i in 1..self.len() - 1 {
            lag.d2_into(self.point(i - 1), self.point(i), &mut b1);
            lag.d1_into(self.point(i), self.point(i + 1), &mut b2);
            for k in 0..d {
                worst = worst.max((b1[k] + b2[k]).abs());
            }
        }
        worst
    }
}

/// Phase-space point: position lift and velocity (continuous time), or the
/// pair `(g_0, g_1)` read as position and successor (discrete time).
#[derive(Debug, Clone, PartialEq)]
pub struct PhasePoint {
    pub x: Vec<f64>,
    pub v: Vec<f64>,
}

impl PhasePoint {
    pub fn new(x: Vec<f64>, v: Vec<f64>) -> Self {
        assert_eq!(x.len(), v.len());
        Self { x, v }
    }

    pub fn dim(&self) -> usize {
        self.x.len()
    }
}

/// One application of the twist map: `x2 = 2 x1 - x0 - V'(x1)`.
pub fn twist_step(lag: &DiscreteLagrangian, x0: &[f64], x1: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let d = lag.dim();
    let mut grad = vec![0.0; d];
    lag.potential().grad_into(x1, &mut grad);
    let x2 = (0..d).map(|k| 2.0 * x1[k] - x0[k] - grad[k]).collect();
    (x1.to_vec(), x2)
}

/// Iterate the twist map to an orbit with `steps + 1` points
/// `(x0, x1, ..., x_{steps})`.
pub fn iterate_twist(
    lag: &DiscreteLagrangian,
    x0: &[f64],
    x1: &[f64],
    steps: usize,
) -> Result<Orbit> {
    let d = lag.dim();
    let mut points = Vec::with_capacity((steps + 1) * d);
    points.extend_from_slice(x0);
    points.extend_from_slice(x1);
    let mut prev = x0.to_vec();
    let mut cur = x1.to_vec();
    for step in 2..=steps {
        let (c, next) = twist_step(lag, &prev, &cur);
        prev = c;
        cur = next;
        if !cur.iter().all(|c| c.is_finite()) {
            return Err(CoreError::OrbitEscape { step });
        }
        points.extend_from_slice(&cur);
    }
    Ok(Orbit::from_flat(d, points))
}

/// Derivative of the twist map `(x0, x1) -> (x1, x2)` at `x1`:
/// the `2d x 2d` block matrix `[[0, I], [-I, 2I - V''(x1)]]`.
pub fn twist_jacobian(lag: &DiscreteLagrangian, x1: &[f64]) -> DMatrix<f64> {
    let d = lag.dim();
    let hess = lag.potential().hess(x1);
    let mut j = DMatrix::zeros(2 * d, 2 * d);
    for i in 0..d {
        j[(i, d + i)] = 1.0;
        j[(d + i, i)] = -1.0;
        for l in 0..d {
            j[(d + i, d + l)] = if i == l { 2.0 } else { 0.0 } - hess[(i, l)];
        }
    }
    j
}

/// Action `A(g) = sum_k L(g_k, g_{k+1})` of a path.
pub fn action_of_path<L: TwoPointLagrangian>(lag: &L, orbit: &Orbit) -> f64 {
    (0..orbit.len() - 1)
        .map(|k| lag.value(orbit.point(k), orbit.point(k + 1)))
        .sum()
}

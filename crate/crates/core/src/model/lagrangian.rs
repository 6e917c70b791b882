//! Two-point Lagrangians on lifts of the torus.

use nalgebra::DMatrix;

use crate::grid::GridFunction;
use crate::model::TrigPotential;

/// A two-point (generating) function `L(x, y)` on lifts, with first and
/// second partials. The mechanical form below is the one actually computed;
/// gauge-normalized and reversed wrappers share the interface.
pub trait TwoPointLagrangian: Sync {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64], y: &[f64]) -> f64;

    /// `dL/dx` into `out`.
    fn d1_into(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// `dL/dy` into `out`.
    fn d2_into(&self, x: &[f64], y: &[f64], out: &mut [f64]);

    /// `d^2 L / dx dx`.
    fn d11(&self, x: &[f64], y: &[f64]) -> DMatrix<f64>;

    /// `d^2 L / dy dy`.
    fn d22(&self, x: &[f64], y: &[f64]) -> DMatrix<f64>;

    /// Mixed partial `d^2 L / dx_i dy_j` (row `i`, column `j`).
    fn d12(&self, x: &[f64], y: &[f64]) -> DMatrix<f64>;
}

/// Discrete mechanical Lagrangian
/// `L(x, y) = |y - x|^2 / 2 - V(x) - <omega, y - x>`.
#[derive(Debug, Clone)]
pub struct DiscreteLagrangian {
    potential: TrigPotential,
    omega: Vec<f64>,
}

impl DiscreteLagrangian {
    /// Panics if `omega` does not match the potential dimension.
    pub fn new(potential: TrigPotential, omega: Vec<f64>) -> Self {
        assert_eq!(
            omega.len(),
            potential.dim(),
            "omega must have the potential's dimension"
        );
        Self { potential, omega }
    }

    pub fn potential(&self) -> &TrigPotential {
        &self.potential
    }

    pub fn omega(&self) -> &[f64] {
        &self.omega
    }

    pub fn omega_norm(&self) -> f64 {
        self.omega.iter().map(|w| w * w).sum::<f64>().sqrt()
    }
}

impl TwoPointLagrangian for DiscreteLagrangian {
    fn dim(&self) -> usize {
        self.potential.dim()
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut kin = 0.0;
        let mut drift = 0.0;
        for i in 0..self.dim() {
            let d = y[i] - x[i];
            kin += d * d;
            drift += self.omega[i] * d;
        }
        0.5 * kin - self.potential.value(x) - drift
    }

    fn d1_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.potential.grad_into(x, out);
        for i in 0..self.dim() {
            out[i] = -(y[i] - x[i]) - out[i] + self.omega[i];
        }
    }

    fn d2_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        for i in 0..self.dim() {
            out[i] = (y[i] - x[i]) - self.omega[i];
        }
    }

    fn d11(&self, x: &[f64], _y: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim()) - self.potential.hess(x)
    }

    fn d22(&self, _x: &[f64], _y: &[f64]) -> DMatrix<f64> {
        DMatrix::identity(self.dim(), self.dim())
    }

    fn d12(&self, _x: &[f64], _y: &[f64]) -> DMatrix<f64> {
        -DMatrix::identity(self.dim(), self.dim())
    }
}

/// Gauge change `L(x, y) - u(y) + u(x) + c` for a periodic `u` sampled on a
/// grid (multilinear interpolation between nodes). With a weak-KAM solution
/// `u` and the critical value `c` this makes the Lagrangian nonnegative and
/// zero on calibrated steps; actions shift by the telescoping boundary term
/// only, so interior derivatives are untouched.
pub struct NormalizedLagrangian<'a, L: TwoPointLagrangian> {
    base: &'a L,
    u: &'a GridFunction,
    c: f64,
}

impl<'a, L: TwoPointLagrangian> NormalizedLagrangian<'a, L> {
    pub fn new(base: &'a L, u: &'a GridFunction, c: f64) -> Self {
        assert_eq!(base.dim(), u.grid().dim());
        Self { base, u, c }
    }
}

impl<L: TwoPointLagrangian> TwoPointLagrangian for NormalizedLagrangian<'_, L> {
    fn dim(&self) -> usize {
        self.base.dim()
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.base.value(x, y) - self.u.eval(y) + self.u.eval(x) + self.c
    }

    fn d1_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.base.d1_into(x, y, out);
        let mut g = [0.0; 2];
        self.u.eval_grad(x, &mut g);
        for i in 0..self.dim() {
            out[i] += g[i];
        }
    }

    fn d2_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.base.d2_into(x, y, out);
        let mut g = [0.0; 2];
        self.u.eval_grad(y, &mut g);
        for i in 0..self.dim() {
            out[i] -= g[i];
        }
    }

    // The interpolated u is piecewise multilinear, so its second derivative
    // vanishes inside cells and the curvature blocks are the base ones.
    fn d11(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.base.d11(x, y)
    }

    fn d22(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.base.d22(x, y)
    }

    fn d12(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.base.d12(x, y)
    }
}

/// Time reversal `L~(x, y) = L(y, x)`; the transfer operator of the reversed
/// system is the adjoint of the original one.
pub struct ReversedLagrangian<'a, L: TwoPointLagrangian>(pub &'a L);

impl<L: TwoPointLagrangian> TwoPointLagrangian for ReversedLagrangian<'_, L> {
    fn dim(&self) -> usize {
        self.0.dim()
    }

    fn value(&self, x: &[f64], y: &[f64]) -> f64 {
        self.0.value(y, x)
    }

    fn d1_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.0.d2_into(y, x, out);
    }

    fn d2_into(&self, x: &[f64], y: &[f64], out: &mut [f64]) {
        self.0.d1_into(y, x, out);
    }

    fn d11(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.0.d22(y, x)
    }

    fn d22(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.0.d11(y, x)
    }

    fn d12(&self, x: &[f64], y: &[f64]) -> DMatrix<f64> {
        self.0.d12(y, x).transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::Mode;

    fn lag1(omega: f64) -> DiscreteLagrangian {
        let v = TrigPotential::new(
            1,
            vec![Mode {
                k: vec![1],
                a: 0.05,
                b: 0.0,
            }],
        )
        .unwrap();
        DiscreteLagrangian::new(v, vec![omega])
    }

    #[test]
    fn value_examples() {
        let free = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        assert_eq!(free.value(&[0.25], &[0.25]), 0.0);
        assert_eq!(free.value(&[0.0], &[0.5]), 0.125);
        let drift = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.2]);
        assert!((drift.value(&[0.0], &[0.5]) - 0.025).abs() < 1e-15);
    }

    #[test]
    fn periodicity_in_both_arguments() {
        let l = lag1(0.3);
        let (x, y) = ([0.21], [0.87]);
        for n in [-2.0, 1.0, 5.0] {
            let v = l.value(&[x[0] + n], &[y[0] + n]);
            assert!((v - l.value(&x, &y)).abs() < 1e-12);
        }
    }

    #[test]
    fn partials_match_finite_differences() {
        let l = lag1(0.3);
        let (x, y) = ([0.21], [0.87]);
        let h = 1e-6;
        let mut d = [0.0];
        l.d1_into(&x, &y, &mut d);
        let fd = (l.value(&[x[0] + h], &y) - l.value(&[x[0] - h], &y)) / (2.0 * h);
        assert!((d[0] - fd).abs() < 1e-8);
        l.d2_into(&x, &y, &mut d);
        let fd = (l.value(&x, &[y[0] + h]) - l.value(&x, &[y[0] - h])) / (2.0 * h);
        assert!((d[0] - fd).abs() < 1e-8);
        // mixed partial is exactly -I for the mechanical form
        let fd12 = (l.value(&[x[0] + h], &[y[0] + h]) - l.value(&[x[0] + h], &[y[0] - h])
            - l.value(&[x[0] - h], &[y[0] + h])
            + l.value(&[x[0] - h], &[y[0] - h]))
            / (4.0 * h * h);
        assert!((l.d12(&x, &y)[(0, 0)] - fd12).abs() < 1e-4);
        assert_eq!(l.d12(&x, &y)[(0, 0)], -1.0);
    }

    #[test]
    fn reversal_is_an_involution() {
        let l = lag1(0.3);
        let r = ReversedLagrangian(&l);
        let rr = ReversedLagrangian(&r);
        assert_eq!(r.value(&[0.1], &[0.4]), l.value(&[0.4], &[0.1]));
        assert_eq!(rr.value(&[0.1], &[0.4]), l.value(&[0.1], &[0.4]));
    }
}

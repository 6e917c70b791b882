//! Discretization of the periodized transfer kernel.
//!
//! The kernel entry couples grid nodes through every lattice representative
//! of the target:
//!
//! ```text
//!   K[i][j] = h^d  sum_{|n|_inf <= R}  exp(-beta L(x_i, x_j + n)),
//! ```
//!
//! a rectangle-rule quadrature of the integral operator with kernel
//! `e^{-beta L}` on the torus. The quadratic kinetic term makes the lattice
//! tail Gaussian, so a radius of a few kernel widths already puts the
//! truncation error far below the quadrature error.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::grid::TorusGrid;
use crate::model::{DiscreteLagrangian, TwoPointLagrangian};
use crate::Result;

/// Dense row-major discretization of the periodized kernel.
#[derive(Debug, Clone)]
pub struct PeriodizedKernel {
    grid: TorusGrid,
    beta: f64,
    radius: usize,
    matrix: Vec<f64>,
}

impl PeriodizedKernel {
    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn beta(&self) -> f64 {
        self.beta
    }

    pub fn radius(&self) -> usize {
        self.radius
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.grid.num_nodes() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nn = self.grid.num_nodes();
        &self.matrix[i * nn..(i + 1) * nn]
    }

    pub fn row_sum(&self, i: usize) -> f64 {
        self.row(i).iter().sum()
    }

    /// `K v`, rows in parallel with a fixed per-row summation order.
    pub fn apply(&self, v: &[f64]) -> Vec<f64> {
        let nn = self.grid.num_nodes();
        (0..nn)
            .into_par_iter()
            .map(|i| {
                let row = &self.matrix[i * nn..(i + 1) * nn];
                row.iter().zip(v).map(|(k, x)| k * x).sum()
            })
            .collect()
    }

    /// `K^T v` (the kernel of the time-reversed system).
    pub fn apply_transpose(&self, v: &[f64]) -> Vec<f64> {
        let nn = self.grid.num_nodes();
        (0..nn)
            .into_par_iter()
            .map(|j| {
                let mut acc = 0.0;
                for (i, x) in v.iter().enumerate() {
                    acc += self.matrix[i * nn + j] * x;
                }
                acc
            })
            .collect()
    }

    pub fn min_entry(&self) -> f64 {
        self.matrix.iter().cloned().fold(f64::INFINITY, f64::min)
    }
}

/// Documented default truncation radius for the mechanical Lagrangian:
/// six Gaussian widths plus the drift and force margins,
/// `ceil(1 + 6/sqrt(beta) + |omega| + sup|V'|)`.
pub fn mechanical_radius(lag: &DiscreteLagrangian, beta: f64) -> usize {
    (1.0 + 6.0 / beta.sqrt() + lag.omega_norm() + lag.potential().grad_norm_bound()).ceil()
        as usize
}

/// Assemble the kernel for any two-point Lagrangian with an explicit radius.
pub fn build_kernel<L: TwoPointLagrangian>(
    lag: &L,
    grid: TorusGrid,
    beta: f64,
    radius: usize,
) -> Result<PeriodizedKernel> {
    if !(beta > 0.0) {
        return Err(CoreError::InvalidArgument(format!(
            "beta must be positive, got {beta}"
        )));
    }
    if grid.dim() != lag.dim() {
        return Err(CoreError::InvalidArgument(
            "grid and lagrangian dimensions differ".into(),
        ));
    }
    if radius < 1 {
        return Err(CoreError::TruncationRadius {
            given: radius,
            required: 1,
        });
    }
    let nn = grid.num_nodes();
    let d = grid.dim();
    let r = radius as i64;
    let translates: Vec<[i64; 2]> = if d == 1 {
        (-r..=r).map(|n| [n, 0]).collect()
    } else {
        (-r..=r)
            .flat_map(|n0| (-r..=r).map(move |n1| [n0, n1]))
            .collect()
    };
    let hv = grid.cell_volume();
    let mut matrix = vec![0.0f64; nn * nn];
    matrix
        .par_chunks_mut(nn)
        .enumerate()
        .for_each(|(i, row)| {
            let xi = grid.node(i);
            let mut xj = vec![0.0; d];
            let mut lifted = vec![0.0; d];
            for (j, out) in row.iter_mut().enumerate() {
                grid.node_into(j, &mut xj);
                let mut acc = 0.0;
                for t in &translates {
                    for k in 0..d {
                        lifted[k] = xj[k] + t[k] as f64;
                    }
                    acc += (-beta * lag.value(&xi, &lifted)).exp();
                }
                *out = hv * acc;
            }
        });
    if !matrix.iter().all(|v| v.is_finite() && *v > 0.0) {
        return Err(CoreError::InvalidArgument(
            "kernel entries must be finite and positive (beta too large for f64?)".into(),
        ));
    }
    Ok(PeriodizedKernel {
        grid,
        beta,
        radius,
        matrix,
    })
}

/// Assemble the mechanical kernel, rejecting radii below the documented
/// default so the Gaussian tail bound holds.
pub fn build_mechanical_kernel(
    lag: &DiscreteLagrangian,
    grid: TorusGrid,
    beta: f64,
    radius: Option<usize>,
) -> Result<PeriodizedKernel> {
    let required = mechanical_radius(lag, beta);
    let radius = radius.unwrap_or(required);
    if radius < required {
        return Err(CoreError::TruncationRadius {
            given: radius,
            required,
        });
    }
    build_kernel(lag, grid, beta, radius)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{ReversedLagrangian, TrigPotential};
    use std::f64::consts::TAU;

    #[test]
    fn rejects_bad_parameters() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let grid = TorusGrid::new(1, 16).unwrap();
        assert!(build_kernel(&lag, grid, -1.0, 3).is_err());
        assert!(matches!(
            build_mechanical_kernel(&lag, grid, TAU, Some(2)),
            Err(CoreError::TruncationRadius { required: 4, .. })
        ));
    }

    #[test]
    fn flat_row_sums_are_gaussian_integrals() {
        // V = 0, omega = 0: every row sums to sqrt(2 pi / beta); at
        // beta = 2 pi that is exactly 1
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let grid = TorusGrid::new(1, 256).unwrap();
        let kernel = build_mechanical_kernel(&lag, grid, TAU, Some(4)).unwrap();
        for i in (0..256).step_by(17) {
            assert!((kernel.row_sum(i) - 1.0).abs() < 1e-8);
        }
        // generic beta
        let beta = 40.0;
        let kernel = build_mechanical_kernel(&lag, grid, beta, None).unwrap();
        let expect = (TAU / beta).sqrt();
        assert!((kernel.row_sum(0) - expect).abs() < 1e-10 * expect);
    }

    #[test]
    fn truncation_tail_is_negligible_at_default_radius() {
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.05]), vec![0.2]);
        let grid = TorusGrid::new(1, 64).unwrap();
        let beta = 30.0;
        let r = mechanical_radius(&lag, beta);
        let k0 = build_kernel(&lag, grid, beta, r).unwrap();
        let k1 = build_kernel(&lag, grid, beta, r + 2).unwrap();
        for i in 0..64 {
            let (a, b) = (k0.row_sum(i), k1.row_sum(i));
            assert!((a - b).abs() < 1e-12 * b);
        }
    }

    #[test]
    fn omega_reversal_transposes_the_kernel() {
        // with V = 0, L(x, y; omega) = L(y, x; -omega)
        let grid = TorusGrid::new(1, 32).unwrap();
        let beta = 20.0;
        let lag_p = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.3]);
        let lag_m = DiscreteLagrangian::new(TrigPotential::zero(1), vec![-0.3]);
        let kp = build_mechanical_kernel(&lag_p, grid, beta, None).unwrap();
        let km = build_mechanical_kernel(&lag_m, grid, beta, None).unwrap();
        for i in 0..32 {
            for j in 0..32 {
                assert!((kp.entry(i, j) - km.entry(j, i)).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn reversed_lagrangian_kernel_is_the_transpose() {
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.06]), vec![0.15]);
        let grid = TorusGrid::new(1, 24).unwrap();
        let k = build_kernel(&lag, grid, 25.0, 4).unwrap();
        let rev = ReversedLagrangian(&lag);
        let kr = build_kernel(&rev, grid, 25.0, 4).unwrap();
        for i in 0..24 {
            for j in 0..24 {
                assert!((k.entry(i, j) - kr.entry(j, i)).abs() <= 1e-11 * k.entry(i, j));
            }
        }
    }
}

//! Symmetric block-tridiagonal matrices and the action Hessian.
//!
//! The Hessian of `A(g) = sum_k L(g_k, g_{k+1})` with respect to the interior
//! points of a path is block tridiagonal with
//!
//! ```text
//!   diag_i = d22 L(g_{i-1}, g_i) + d11 L(g_i, g_{i+1}),
//!   off_i  = d12 L(g_i, g_{i+1}),
//! ```
//!
//! which for the mechanical form reduces to `2I - V''(g_i)` on the diagonal
//! and `-I` off it — the same blocks that drive the discrete Jacobi
//! recurrence. Determinants are computed by the forward block elimination
//! `D_1 = B_11`, `D_k = B_kk - C_{k-1}^T D_{k-1}^{-1} C_{k-1}` and carried in
//! sign/log form; raw products overflow doubles already near 300 steps.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::linalg::{sign_log_det_dense, SignLogDet};
use crate::model::{Orbit, TwoPointLagrangian};
use crate::Result;

/// Symmetric block-tridiagonal matrix with `d x d` blocks; the sub-diagonal
/// is the transpose of the stored super-diagonal.
#[derive(Debug, Clone)]
pub struct BlockTridiagonal {
    dim: usize,
    diag: Vec<DMatrix<f64>>,
    off: Vec<DMatrix<f64>>,
}

impl BlockTridiagonal {
    pub fn new(diag: Vec<DMatrix<f64>>, off: Vec<DMatrix<f64>>) -> Result<Self> {
        if diag.is_empty() {
            return Err(CoreError::InvalidArgument(
                "block-tridiagonal matrix needs at least one block".into(),
            ));
        }
        let d = diag[0].nrows();
        if off.len() + 1 != diag.len() {
            return Err(CoreError::InvalidArgument(format!(
                "expected {} off-diagonal blocks, got {}",
                diag.len() - 1,
                off.len()
            )));
        }
        for b in diag.iter().chain(off.iter()) {
            if b.nrows() != d || b.ncols() != d {
                return Err(CoreError::InvalidArgument(
                    "inconsistent block dimensions".into(),
                ));
            }
        }
        for b in &diag {
            for i in 0..d {
                for j in i + 1..d {
                    if (b[(i, j)] - b[(j, i)]).abs() > 1e-14 {
                        return Err(CoreError::InvalidArgument(
                            "diagonal blocks must be symmetric to 1e-14".into(),
                        ));
                    }
                }
            }
        }
        Ok(Self { dim: d, diag, off })
    }

    /// Scalar tridiagonal matrix (`d = 1`) with constant entries.
    pub fn tridiagonal_constant(n: usize, diag: f64, off: f64) -> Self {
        Self {
            dim: 1,
            diag: vec![DMatrix::from_element(1, 1, diag); n],
            off: vec![DMatrix::from_element(1, 1, off); n.saturating_sub(1)],
        }
    }

    /// Scalar tridiagonal matrix (`d = 1`) from entry lists.
    pub fn tridiagonal(diag: &[f64], off: &[f64]) -> Result<Self> {
        Self::new(
            diag.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
            off.iter().map(|&v| DMatrix::from_element(1, 1, v)).collect(),
        )
    }

    pub fn block_dim(&self) -> usize {
        self.dim
    }

    pub fn num_blocks(&self) -> usize {
        self.diag.len()
    }

    pub fn total_dim(&self) -> usize {
        self.dim * self.diag.len()
    }

    pub fn diag_block(&self, i: usize) -> &DMatrix<f64> {
        &self.diag[i]
    }

    pub fn off_block(&self, i: usize) -> &DMatrix<f64> {
        &self.off[i]
    }

    /// Largest absolute entry of any off-diagonal block.
    pub fn max_off_entry(&self) -> f64 {
        self.off
            .iter()
            .flat_map(|b| b.iter())
            .fold(0.0f64, |m, &v| m.max(v.abs()))
    }

    pub fn to_dense(&self) -> DMatrix<f64> {
        let n = self.num_blocks();
        let d = self.dim;
        let mut m = DMatrix::zeros(n * d, n * d);
        for k in 0..n {
            for i in 0..d {
                for j in 0..d {
                    m[(k * d + i, k * d + j)] = self.diag[k][(i, j)];
                }
            }
            if k + 1 < n {
                for i in 0..d {
                    for j in 0..d {
                        m[(k * d + i, (k + 1) * d + j)] = self.off[k][(i, j)];
                        m[((k + 1) * d + j, k * d + i)] = self.off[k][(i, j)];
                    }
                }
            }
        }
        m
    }

    /// Matrix-vector product.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        let n = self.num_blocks();
        let d = self.dim;
        let mut y = vec![0.0; n * d];
        for k in 0..n {
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += self.diag[k][(i, j)] * x[k * d + j];
                    if k + 1 < n {
                        acc += self.off[k][(i, j)] * x[(k + 1) * d + j];
                    }
                    if k > 0 {
                        acc += self.off[k - 1][(j, i)] * x[(k - 1) * d + j];
                    }
                }
                y[k * d + i] += acc;
            }
        }
        y
    }

    /// Forward block elimination, reusable for determinants and solves.
    pub fn factorize(&self) -> Result<BlockFactorization> {
        let n = self.num_blocks();
        let mut pivots = Vec::with_capacity(n);
        let mut pivot_dets = Vec::with_capacity(n);
        let mut current = self.diag[0].clone();
        for k in 0..n {
            let det = sign_log_det_dense(&current);
            if det.is_singular() {
                return Err(CoreError::DegenerateHessian(format!(
                    "singular pivot block at index {k}"
                )));
            }
            let inv = current
                .clone()
                .try_inverse()
                .ok_or_else(|| CoreError::DegenerateHessian(format!("pivot block {k} not invertible")))?;
            pivots.push(inv);
            pivot_dets.push(det);
            if k + 1 < n {
                let c = &self.off[k];
                current = &self.diag[k + 1] - c.transpose() * &pivots[k] * c;
            }
        }
        Ok(BlockFactorization {
            dim: self.dim,
            off: self.off.clone(),
            pivot_inverses: pivots,
            pivot_dets,
        })
    }
}

/// Result of [`block_determinant`].
#[derive(Debug, Clone, Copy)]
pub struct BlockDeterminant {
    pub det: SignLogDet,
    /// Set when the matrix is exactly singular (the path carries a conjugate
    /// point); the determinant is then zero with `log_abs = -inf`.
    pub conjugate_point: bool,
    /// Whether the dense pivoted fallback was used.
    pub dense_fallback: bool,
}

/// Determinant by forward block elimination with a dense pivoted fallback
/// when a pivot block degenerates (near-conjugate point).
///
/// A pivot passing within `1e-4` of singular (smallest singular value
/// relative to the block scale) already injects noticeable rounding into the
/// log-sum through the `1/D_k` amplification, so the fallback fires early;
/// the dense pivoted elimination stays accurate there.
pub fn block_determinant(b: &BlockTridiagonal) -> BlockDeterminant {
    let n = b.num_blocks();
    let mut det = SignLogDet::one();
    let mut current = b.diag_block(0).clone();
    for k in 0..n {
        let scale = b
            .diag_block(k)
            .iter()
            .fold(1.0f64, |m, &v| m.max(v.abs()));
        let dk = sign_log_det_dense(&current);
        // sigma_min estimate: |det| over the largest entry for 2x2 blocks
        let spread = current.iter().fold(1e-300f64, |m, &v| m.max(v.abs()));
        let sigma_min = if b.block_dim() == 1 {
            dk.log_abs.exp()
        } else {
            dk.log_abs.exp() / spread
        };
        if dk.is_singular() || sigma_min < 1e-4 * scale {
            return dense_fallback(b);
        }
        det = det.mul(dk);
        if k + 1 < n {
            let inv = match current.clone().try_inverse() {
                Some(inv) => inv,
                None => return dense_fallback(b),
            };
            let c = b.off_block(k);
            current = b.diag_block(k + 1) - c.transpose() * inv * c;
        }
    }
    BlockDeterminant {
        det,
        conjugate_point: false,
        dense_fallback: false,
    }
}

fn dense_fallback(b: &BlockTridiagonal) -> BlockDeterminant {
    // Guard against pathological sizes: the fallback is only ever needed near
    // conjugate points, which the callers probe at modest n.
    if b.total_dim() > 8192 {
        return BlockDeterminant {
            det: SignLogDet::zero(),
            conjugate_point: true,
            dense_fallback: false,
        };
    }
    let det = sign_log_det_dense(&b.to_dense());
    BlockDeterminant {
        det,
        conjugate_point: det.is_singular(),
        dense_fallback: true,
    }
}

/// Reusable forward elimination of a block-tridiagonal system.
#[derive(Debug, Clone)]
pub struct BlockFactorization {
    dim: usize,
    off: Vec<DMatrix<f64>>,
    pivot_inverses: Vec<DMatrix<f64>>,
    pivot_dets: Vec<SignLogDet>,
}

impl BlockFactorization {
    pub fn determinant(&self) -> SignLogDet {
        self.pivot_dets
            .iter()
            .fold(SignLogDet::one(), |acc, d| acc.mul(*d))
    }

    /// Solve `B x = rhs` using the stored pivots.
    pub fn solve(&self, rhs: &[f64]) -> Vec<f64> {
        let n = self.pivot_inverses.len();
        let d = self.dim;
        assert_eq!(rhs.len(), n * d);
        // forward sweep: y_k = rhs_k - C_{k-1}^T D_{k-1}^{-1} y_{k-1}
        let mut y = rhs.to_vec();
        for k in 1..n {
            let prev = {
                let yk1 = &y[(k - 1) * d..k * d];
                let mut t = vec![0.0; d];
                for i in 0..d {
                    for j in 0..d {
                        t[i] += self.pivot_inverses[k - 1][(i, j)] * yk1[j];
                    }
                }
                t
            };
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += self.off[k - 1][(j, i)] * prev[j];
                }
                y[k * d + i] -= acc;
            }
        }
        // back substitution: x_k = D_k^{-1} (y_k - C_k x_{k+1})
        let mut x = vec![0.0; n * d];
        for k in (0..n).rev() {
            let mut t = y[k * d..(k + 1) * d].to_vec();
            if k + 1 < n {
                for i in 0..d {
                    for j in 0..d {
                        t[i] -= self.off[k][(i, j)] * x[(k + 1) * d + j];
                    }
                }
            }
            for i in 0..d {
                let mut acc = 0.0;
                for j in 0..d {
                    acc += self.pivot_inverses[k][(i, j)] * t[j];
                }
                x[k * d + i] = acc;
            }
        }
        x
    }
}

/// Action Hessian of a path with respect to its interior points.
pub fn assemble_hessian<L: TwoPointLagrangian>(lag: &L, orbit: &Orbit) -> Result<BlockTridiagonal> {
    if orbit.len() < 3 {
        return Err(CoreError::InvalidArgument(
            "Hessian assembly needs an orbit with interior points".into(),
        ));
    }
    let interior = orbit.len() - 2;
    let mut diag = Vec::with_capacity(interior);
    let mut off = Vec::with_capacity(interior.saturating_sub(1));
    for i in 1..orbit.len() - 1 {
        let block = lag.d22(orbit.point(i - 1), orbit.point(i))
            + lag.d11(orbit.point(i), orbit.point(i + 1));
        diag.push(block);
        if i + 1 < orbit.len() - 1 {
            off.push(lag.d12(orbit.point(i), orbit.point(i + 1)));
        }
    }
    BlockTridiagonal::new(diag, off)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::{DiscreteLagrangian, TrigPotential};
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn flat_hessian_is_discrete_laplacian_with_det_n() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let orbit = Orbit::constant(&[0.2], 11); // 9 interior points
        let h = assemble_hessian(&lag, &orbit).unwrap();
        assert_eq!(h.num_blocks(), 9);
        for k in 0..9 {
            assert_eq!(h.diag_block(k)[(0, 0)], 2.0);
        }
        for k in 0..8 {
            assert_eq!(h.off_block(k)[(0, 0)], -1.0);
        }
        // continuant of tridiag(-1, 2, -1) of size n-1 is n
        let d = block_determinant(&h);
        assert!((d.det.value() - 10.0).abs() < 1e-10);
    }

    #[test]
    fn constant_orbit_at_unit_curvature_max_has_diag_3() {
        let a = 1.0 / (4.0 * std::f64::consts::PI.powi(2)); // V''(0) = -1
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[a]), vec![0.0]);
        let orbit = Orbit::constant(&[0.0], 5);
        let h = assemble_hessian(&lag, &orbit).unwrap();
        for k in 0..h.num_blocks() {
            assert!((h.diag_block(k)[(0, 0)] - 3.0).abs() < 1e-14);
        }
    }

    #[test]
    fn hessian_matches_finite_differences_of_action() {
        use crate::model::action_of_path;
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.06, -0.03]), vec![0.2]);
        let pts = vec![vec![0.05], vec![0.31], vec![0.52], vec![0.74], vec![1.02]];
        let orbit = Orbit::from_points(1, pts).unwrap();
        let hess = assemble_hessian(&lag, &orbit).unwrap();
        let fd = 1e-5;
        // second partial wrt interior point 2 (block index 1)
        let perturbed = |d1: f64, d2: f64| {
            let mut o = orbit.clone();
            o.point_mut(2)[0] += d1;
            o.point_mut(3)[0] += d2;
            action_of_path(&lag, &o)
        };
        let d22 = (perturbed(fd, 0.0) - 2.0 * perturbed(0.0, 0.0) + perturbed(-fd, 0.0)) / (fd * fd);
        assert!((hess.diag_block(1)[(0, 0)] - d22).abs() < 1e-4);
        let d23 = (perturbed(fd, fd) - perturbed(fd, -fd) - perturbed(-fd, fd)
            + perturbed(-fd, -fd))
            / (4.0 * fd * fd);
        assert!((hess.off_block(1)[(0, 0)] - d23).abs() < 1e-4);
    }

    #[test]
    fn block_determinant_matches_dense_on_random_spd() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for trial in 0..40 {
            let d = if trial % 2 == 0 { 1 } else { 2 };
            let n = rng.gen_range(2..=8);
            let mut diag = Vec::new();
            let mut off = Vec::new();
            for k in 0..n {
                // diagonally dominant symmetric blocks keep things SPD
                let mut b = DMatrix::zeros(d, d);
                for i in 0..d {
                    for j in i..d {
                        let v = rng.gen_range(-0.4..0.4);
                        b[(i, j)] = v;
                        b[(j, i)] = v;
                    }
                    b[(i, i)] = rng.gen_range(3.0..5.0);
                }
                diag.push(b);
                if k + 1 < n {
                    let mut c = DMatrix::zeros(d, d);
                    for i in 0..d {
                        for j in 0..d {
                            c[(i, j)] = rng.gen_range(-0.8..0.8);
                        }
                    }
                    off.push(c);
                }
            }
            let b = BlockTridiagonal::new(diag, off).unwrap();
            let fast = block_determinant(&b);
            let dense = sign_log_det_dense(&b.to_dense());
            assert!(fast.det.relative_diff(&dense) < 1e-10);
        }
    }

    #[test]
    fn singular_matrix_is_flagged_as_conjugate_point() {
        // tridiag(-1, 1, -1) of size 2 has determinant 0
        let b = BlockTridiagonal::tridiagonal_constant(2, 1.0, -1.0);
        let r = block_determinant(&b);
        assert!(r.conjugate_point);
        assert!(r.det.is_singular());
        assert_eq!(r.det.log_abs, f64::NEG_INFINITY);
    }

    #[test]
    fn factorization_solves_systems() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = {
            let n = 6;
            let d = 2;
            let mut diag = Vec::new();
            let mut off = Vec::new();
            for k in 0..n {
                let mut m = DMatrix::identity(d, d) * 4.0;
                m[(0, 1)] = 0.3;
                m[(1, 0)] = 0.3;
                diag.push(m);
                if k + 1 < n {
                    let mut c = DMatrix::zeros(d, d);
                    for i in 0..d {
                        for j in 0..d {
                            c[(i, j)] = rng.gen_range(-0.5..0.5);
                        }
                    }
                    off.push(c);
                }
            }
            BlockTridiagonal::new(diag, off).unwrap()
        };
        let rhs: Vec<f64> = (0..b.total_dim()).map(|i| (i as f64 * 0.37).sin()).collect();
        let x = b.factorize().unwrap().solve(&rhs);
        let back = b.apply(&x);
        for i in 0..rhs.len() {
            assert!((back[i] - rhs[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gauge_change_leaves_hessian_identical() {
        use crate::grid::{GridFunction, TorusGrid};
        use crate::model::NormalizedLagrangian;
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.05]), vec![0.1]);
        let grid = TorusGrid::new(1, 32).unwrap();
        let u = GridFunction::from_fn(grid, |x| 0.2 * (std::f64::consts::TAU * x[0]).sin());
        let norm = NormalizedLagrangian::new(&lag, &u, 0.42);
        let pts = vec![vec![0.03], vec![0.22], vec![0.58], vec![0.71], vec![0.96]];
        let orbit = Orbit::from_points(1, pts).unwrap();
        let h0 = assemble_hessian(&lag, &orbit).unwrap();
        let h1 = assemble_hessian(&norm, &orbit).unwrap();
        for k in 0..h0.num_blocks() {
            assert!((h0.diag_block(k)[(0, 0)] - h1.diag_block(k)[(0, 0)]).abs() < 1e-12);
        }
        for k in 0..h0.num_blocks() - 1 {
            assert!((h0.off_block(k)[(0, 0)] - h1.off_block(k)[(0, 0)]).abs() < 1e-12);
        }
    }
}

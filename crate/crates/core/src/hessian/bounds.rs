//! Inequality kit for tridiagonal inverses and box-restricted Gaussians.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::hessian::block::{block_determinant, BlockTridiagonal};
use crate::linalg::simpson_weights;
use crate::Result;

/// The dimension-free bound `r(alpha)` on `|A^{-1}|_inf` for a symmetric
/// tridiagonal `A` with unit-bounded off-diagonals and `|A^{-1}|_2 <= alpha`:
///
/// ```text
///   r(alpha)/2 = sum_{k >= 0} alpha^{-1} theta^{k/2},
///   theta = 2 alpha^2 / (1 + sqrt(1 + 4 alpha^4)),
/// ```
///
/// a geometric series with closed form `r = 2 / (alpha (1 - sqrt(theta)))`.
pub fn inverse_norm_bound(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0) {
        return Err(CoreError::InvalidArgument(
            "alpha must be positive".into(),
        ));
    }
    let theta = 2.0 * alpha * alpha / (1.0 + (1.0 + 4.0 * alpha.powi(4)).sqrt());
    if theta >= 1.0 {
        // cannot happen for alpha > 0; guarded anyway
        return Err(CoreError::InvalidArgument(format!(
            "series ratio {theta} >= 1"
        )));
    }
    Ok(2.0 / (alpha * (1.0 - theta.sqrt())))
}

/// Outcome of [`tridiag_inverse_bound_check`].
#[derive(Debug, Clone, Copy)]
pub struct TridiagBoundCheck {
    /// Computed `|A^{-1}|_2`.
    pub alpha: f64,
    /// Computed `|A^{-1}|_inf`.
    pub inf_norm: f64,
    /// The bound `r(alpha)`.
    pub bound: f64,
    pub holds: bool,
}

/// Verify `|A^{-1}|_inf <= r(|A^{-1}|_2)` on a symmetric tridiagonal matrix
/// with `|off-diagonal| <= 1`, computing both norms densely.
pub fn tridiag_inverse_bound_check(diag: &[f64], off: &[f64]) -> Result<TridiagBoundCheck> {
    let n = diag.len();
    if off.len() + 1 != n || n < 1 {
        return Err(CoreError::InvalidArgument(
            "need n diagonal and n-1 off-diagonal entries".into(),
        ));
    }
    if off.iter().any(|o| o.abs() > 1.0 + 1e-15) {
        return Err(CoreError::InvalidArgument(
            "off-diagonal entries must satisfy |A_{i,i+1}| <= 1".into(),
        ));
    }
    let mut a = DMatrix::zeros(n, n);
    for i in 0..n {
        a[(i, i)] = diag[i];
        if i + 1 < n {
            a[(i, i + 1)] = off[i];
            a[(i + 1, i)] = off[i];
        }
    }
    let eig = a.clone().symmetric_eigen();
    let min_abs = eig
        .eigenvalues
        .iter()
        .map(|v| v.abs())
        .fold(f64::INFINITY, f64::min);
    if min_abs < 1e-12 {
        return Err(CoreError::DegenerateHessian(
            "tridiagonal matrix numerically singular".into(),
        ));
    }
    let alpha = 1.0 / min_abs;
    let inv = a
        .try_inverse()
        .ok_or_else(|| CoreError::DegenerateHessian("inverse failed".into()))?;
    let inf_norm = (0..n)
        .map(|i| (0..n).map(|j| inv[(i, j)].abs()).sum::<f64>())
        .fold(0.0f64, f64::max);
    let bound = inverse_norm_bound(alpha)?;
    Ok(TridiagBoundCheck {
        alpha,
        inf_norm,
        bound,
        holds: inf_norm <= bound * (1.0 + 1e-12),
    })
}

/// Outcome of [`box_gaussian_lower_bound_check`].
#[derive(Debug, Clone, Copy)]
pub struct BoxGaussianCheck {
    /// `integral over the box / integral over all of R^D`, both of
    /// `exp(-beta (Ax, x)/2)`; equals the Gaussian mass of the box.
    pub ratio: f64,
    /// Largest `rho` for which `(1 - e^{-beta rho})^n <= ratio`, from this
    /// single case; calibrate over a family with [`calibrate_box_rho`].
    pub rho_estimate: f64,
    /// Number of blocks `n` used as the exponent.
    pub blocks: usize,
    /// Whether Monte Carlo (instead of tensor quadrature) was used.
    pub monte_carlo: bool,
}

impl BoxGaussianCheck {
    /// Whether the lower bound holds with a given `rho`.
    pub fn holds_with(&self, beta: f64, rho: f64) -> bool {
        self.ratio + 1e-12 >= (1.0 - (-beta * rho).exp()).powi(self.blocks as i32)
    }
}

/// Evaluate the box-restricted Gaussian mass
/// `(beta/2pi)^{D/2} int_{|x|_inf <= eps} e^{-beta (Ax,x)/2} dx * [A]^{1/2}`
/// for a block-tridiagonal SPD `A` with `A >= eps_min I` and off-blocks
/// bounded by `m_bound`, and report the implied per-block rate `rho`.
///
/// Tensor Simpson quadrature up to total dimension 4, seeded Monte Carlo up
/// to 8; the Monte Carlo path flags itself inconclusive when the confidence
/// interval is too wide.
pub fn box_gaussian_lower_bound_check(
    a: &BlockTridiagonal,
    eps: f64,
    m_bound: f64,
    beta: f64,
    seed: u64,
) -> Result<BoxGaussianCheck> {
    let dim = a.total_dim();
    let n_blocks = a.num_blocks();
    if !(eps > 0.0 && beta > 0.0) {
        return Err(CoreError::InvalidArgument(
            "eps and beta must be positive".into(),
        ));
    }
    if a.max_off_entry() > m_bound + 1e-15 {
        return Err(CoreError::InvalidArgument(format!(
            "off-diagonal blocks exceed the bound {m_bound}"
        )));
    }
    let dense = a.to_dense();
    let eig = dense.clone().symmetric_eigen();
    let lam_min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
    if lam_min < eps * (1.0 - 1e-12) {
        return Err(CoreError::InvalidArgument(format!(
            "matrix must satisfy A >= eps I (lambda_min {lam_min:.3e} < eps {eps:.3e})"
        )));
    }
    let ratio = if dim <= 4 {
        // full integral is analytic; quadrature only over the box
        let sigma_max = 1.0 / (beta * lam_min).sqrt();
        let w = eps.min(12.0 * sigma_max);
        let nodes = match dim {
            1 | 2 => 256,
            3 => 128,
            _ => 64,
        };
        let weights = simpson_weights(nodes, 2.0 * w / nodes as f64);
        let mut boxed = 0.0f64;
        let mut idx = vec![0usize; dim];
        let mut x = vec![0.0f64; dim];
        loop {
            let mut wt = 1.0;
            for k in 0..dim {
                wt *= weights[idx[k]];
                x[k] = -w + 2.0 * w * idx[k] as f64 / nodes as f64;
            }
            let mut q = 0.0;
            for i in 0..dim {
                for j in 0..dim {
                    q += x[i] * dense[(i, j)] * x[j];
                }
            }
            boxed += wt * (-0.5 * beta * q).exp();
            // odometer over the tensor grid
            let mut k = 0;
            loop {
                idx[k] += 1;
                if idx[k] <= nodes {
                    break;
                }
                idx[k] = 0;
                k += 1;
                if k == dim {
                    break;
                }
            }
            if k == dim {
                break;
            }
        }
        let det = block_determinant(a).det;
        let full = (2.0 * std::f64::consts::PI / beta).powf(dim as f64 / 2.0)
            * (-0.5 * det.log_abs).exp();
        boxed / full
    } else if dim <= 8 {
        // sample from N(0, (beta A)^{-1}) and count box hits
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let n_samples = 400_000usize;
        let mut hits = 0usize;
        let half = {
            // A^{-1/2} / sqrt(beta)
            let mut h = DMatrix::<f64>::zeros(dim, dim);
            for k in 0..dim {
                let lk = eig.eigenvalues[k].max(1e-300);
                let s = 1.0 / (beta * lk).sqrt();
                for i in 0..dim {
                    for j in 0..dim {
                        h[(i, j)] +=
                            eig.eigenvectors[(i, k)] * s * eig.eigenvectors[(j, k)];
                    }
                }
            }
            h
        };
        let mut z = vec![0.0f64; dim];
        for _ in 0..n_samples {
            for zi in z.iter_mut() {
                // Box-Muller
                let u1: f64 = rng.gen_range(1e-12..1.0);
                let u2: f64 = rng.gen_range(0.0..std::f64::consts::TAU);
                *zi = (-2.0 * u1.ln()).sqrt() * u2.cos();
            }
            let mut inside = true;
            for i in 0..dim {
                let mut xi = 0.0f64;
                for j in 0..dim {
                    xi += half[(i, j)] * z[j];
                }
                if xi.abs() > eps {
                    inside = false;
                    break;
                }
            }
            if inside {
                hits += 1;
            }
        }
        let p = hits as f64 / n_samples as f64;
        let ci = 3.0 * (p * (1.0 - p) / n_samples as f64).sqrt();
        if p > 0.0 && ci / p > 0.05 && p < 0.999 {
            return Err(CoreError::QuadratureInconclusive(format!(
                "Monte Carlo box mass {p:.4} +- {ci:.4} too noisy"
            )));
        }
        p
    } else {
        return Err(CoreError::InvalidArgument(format!(
            "total dimension {dim} beyond quadrature feasibility"
        )));
    };
    let ratio = ratio.min(1.0);
    let rho_estimate = if ratio >= 1.0 - 1e-15 {
        f64::INFINITY
    } else {
        -(1.0 - ratio.powf(1.0 / n_blocks as f64)).ln() / beta
    };
    Ok(BoxGaussianCheck {
        ratio,
        rho_estimate,
        blocks: n_blocks,
        monte_carlo: dim > 4,
    })
}

/// The calibrated `rho(eps, M)` for a family of cases: the largest rate that
/// makes the lower bound hold simultaneously for every case.
pub fn calibrate_box_rho(cases: &[BoxGaussianCheck]) -> f64 {
    cases
        .iter()
        .map(|c| c.rho_estimate)
        .fold(f64::INFINITY, f64::min)
}

//! Growth rate of action-Hessian determinants along orbits and the
//! subadditivity property that controls it.
//!
//! For a minimizing orbit the limit of `log det / n` exists and equals the
//! sum of the nonnegative Lyapunov exponents of the orbit; at desk scale the
//! two sides are compared directly.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::hessian::block::{assemble_hessian, block_determinant};
use crate::linalg::{sign_log_det_dense, SignLogDet};
use crate::model::{Orbit, TwoPointLagrangian};
use crate::Result;

/// Result of [`thouless_limit`].
#[derive(Debug, Clone, Copy)]
pub struct ThoulessResult {
    /// `log |det| / blocks`, the finite-n growth rate.
    pub value: f64,
    pub det: SignLogDet,
    /// Number of interior blocks the Hessian was assembled over.
    pub blocks: usize,
    pub conjugate_point: bool,
}

/// `(1/n) log |det Hessian|` over the interior of the orbit. A conjugate
/// point propagates as `-inf`.
pub fn thouless_limit<L: TwoPointLagrangian>(lag: &L, orbit: &Orbit) -> Result<ThoulessResult> {
    let hess = assemble_hessian(lag, orbit)?;
    let blocks = hess.num_blocks();
    let det = block_determinant(&hess);
    Ok(ThoulessResult {
        value: det.det.log_abs / blocks as f64,
        det: det.det,
        blocks,
        conjugate_point: det.conjugate_point,
    })
}

/// Running averages `(k, log|det_k| / k)` over leading principal block
/// submatrices, from one forward elimination pass. `stride` controls how
/// often a sample is recorded.
pub fn thouless_running<L: TwoPointLagrangian>(
    lag: &L,
    orbit: &Orbit,
    stride: usize,
) -> Result<Vec<(usize, f64)>> {
    let hess = assemble_hessian(lag, orbit)?;
    let n = hess.num_blocks();
    let stride = stride.max(1);
    let mut out = Vec::new();
    let mut log_abs = 0.0f64;
    let mut current = hess.diag_block(0).clone();
    for k in 0..n {
        let dk = sign_log_det_dense(&current);
        if dk.is_singular() {
            return Err(CoreError::DegenerateHessian(format!(
                "conjugate point at leading block {k}"
            )));
        }
        log_abs += dk.log_abs;
        if (k + 1) % stride == 0 || k + 1 == n {
            out.push((k + 1, log_abs / (k + 1) as f64));
        }
        if k + 1 < n {
            let inv = current.clone().try_inverse().ok_or_else(|| {
                CoreError::DegenerateHessian(format!("pivot block {k} not invertible"))
            })?;
            let c = hess.off_block(k);
            current = hess.diag_block(k + 1) - c.transpose() * inv * c;
        }
    }
    Ok(out)
}

/// Slack in the determinant subadditivity
/// `log det(full) <= log det(leading m) + log det(trailing n-m)`
/// across a split of the orbit after `m` steps.
#[derive(Debug, Clone, Copy)]
pub struct SubadditivitySlack {
    pub log_full: f64,
    pub log_leading: f64,
    pub log_trailing: f64,
    /// `log_leading + log_trailing - log_full`; nonnegative (to rounding)
    /// when the path is an action minimizer.
    pub slack: f64,
}

/// Compare the Hessian determinant of the whole path against the product of
/// the two sub-path Hessians obtained by splitting after `m` steps.
pub fn subadditivity_check<L: TwoPointLagrangian>(
    lag: &L,
    orbit: &Orbit,
    m: usize,
) -> Result<SubadditivitySlack> {
    let p = orbit.len();
    if !(1 <= m && m + 1 < p - 1) {
        return Err(CoreError::InvalidArgument(format!(
            "split index {m} out of range for a {p}-point path"
        )));
    }
    let full = block_determinant(&assemble_hessian(lag, orbit)?).det;
    let leading = block_determinant(&assemble_hessian(lag, &orbit.slice(0, m + 2))?).det;
    let trailing = block_determinant(&assemble_hessian(lag, &orbit.slice(m, p))?).det;
    Ok(SubadditivitySlack {
        log_full: full.log_abs,
        log_leading: leading.log_abs,
        log_trailing: trailing.log_abs,
        slack: leading.log_abs + trailing.log_abs - full.log_abs,
    })
}

/// Schur-complement determinant split of a symmetric matrix: returns
/// `([A], [B - C A^{-1} C^T], [M])` for the leading `k x k` block `A`.
pub fn schur_determinant_split(m: &DMatrix<f64>, k: usize) -> (f64, f64, f64) {
    let n = m.nrows();
    let a = m.view((0, 0), (k, k)).into_owned();
    let b = m.view((k, k), (n - k, n - k)).into_owned();
    let c = m.view((k, 0), (n - k, k)).into_owned();
    let a_inv = a.clone().try_inverse().expect("leading block invertible");
    let comp = b - &c * a_inv * c.transpose();
    (
        a.determinant(),
        comp.determinant(),
        m.clone().determinant(),
    )
}

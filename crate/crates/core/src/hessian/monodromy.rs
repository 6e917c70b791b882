//! Discrete Jacobi fields and the monodromy determinant.
//!
//! Along a path `(g_0, ..., g_N)` the equation of variations is
//!
//! ```text
//!   (Y_{i+1} - Y_i) - (Y_i - Y_{i-1}) + V''(g_i) Y_i = 0 .
//! ```
//!
//! With `Y_0 = 0` the linear map `Y_1 -> Y_N` has the same determinant as
//! the interior action Hessian of the path: eliminating the Hessian block
//! rows reproduces exactly the three-term recurrence, and the `-I` mixed
//! blocks of the mechanical Lagrangian make the elimination prefactor one.
//!
//! The determinant is accumulated through a QR-propagated frame of the pair
//! `(Y_k, Y_{k-1})`. Evaluating `det Y_N` entrywise would cancel
//! catastrophically once the Lyapunov exponents split (entries grow like
//! `e^{l_1 n}` while the determinant only like `e^{(l_1 + l_2) n}`); with
//! the QR form all growth sits in triangular factors and the determinant is
//! the stable product of their diagonals times an order-one corner factor.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::linalg::{sign_log_det_dense, SignLogDet};
use crate::model::{DiscreteLagrangian, Orbit, TwoPointLagrangian};
use crate::Result;

/// The linear map `Y_1 -> Y_N` along a path.
#[derive(Debug, Clone)]
pub struct Monodromy {
    /// Rescaled matrix of the map; the true map is `matrix * exp(log_scale)`.
    /// Useful for inspecting the map's shape at moderate lengths.
    pub matrix: DMatrix<f64>,
    pub log_scale: f64,
    det: SignLogDet,
}

impl Monodromy {
    /// Stable sign/log determinant of the map.
    pub fn det(&self) -> SignLogDet {
        self.det
    }
}

/// Thin MGS QR of a tall matrix held in a fixed scratch (rows x cols up to
/// 4 x 2); returns the log of each positive diagonal of `R` and leaves the
/// orthonormal `Q` in place.
fn thin_qr(a: &mut [[f64; 2]; 4], rows: usize, cols: usize, log_r: &mut [f64; 2]) {
    for j in 0..cols {
        let mut nrm = 0.0;
        for row in a.iter().take(rows) {
            nrm += row[j] * row[j];
        }
        let nrm = nrm.sqrt();
        log_r[j] = nrm.max(f64::MIN_POSITIVE).ln();
        let inv = if nrm > 0.0 { 1.0 / nrm } else { 0.0 };
        for row in a.iter_mut().take(rows) {
            row[j] *= inv;
        }
        for l in j + 1..cols {
            let mut dot = 0.0;
            for row in a.iter().take(rows) {
                dot += row[j] * row[l];
            }
            for row in a.iter_mut().take(rows) {
                row[l] -= dot * row[j];
            }
        }
    }
}

/// Propagate `d` independent Jacobi fields (`Y_0 = 0`, `Y_1 = e_i`) through
/// the variation equation along the orbit and return the map `Y_1 -> Y_N`.
pub fn monodromy_map(lag: &DiscreteLagrangian, orbit: &Orbit) -> Result<Monodromy> {
    if orbit.len() < 3 {
        return Err(CoreError::InvalidArgument(
            "monodromy needs an orbit with at least three points".into(),
        ));
    }
    let d = lag.dim();
    // plain pair recursion with rescaling, for the map's entries
    let mut prev = DMatrix::<f64>::zeros(d, d);
    let mut cur = DMatrix::<f64>::identity(d, d);
    let mut log_scale = 0.0f64;
    // QR frame of the stacked pair (Y_k, Y_{k-1}) for the determinant
    let mut q = [[0.0f64; 2]; 4];
    for (i, row) in q.iter_mut().enumerate().take(d) {
        row[i] = 1.0;
    }
    let mut log_det = 0.0f64;
    let mut scratch = [[0.0f64; 2]; 4];
    let mut log_r = [0.0f64; 2];
    for i in 1..orbit.len() - 1 {
        let hess = lag.potential().hess(orbit.point(i));
        let mut step = DMatrix::identity(d, d) * 2.0 - hess;
        // frame update: (Y, Y_prev) -> (step Y - Y_prev, Y)
        for col in 0..d {
            for r in 0..d {
                let mut acc = -q[d + r][col];
                for l in 0..d {
                    acc += step[(r, l)] * q[l][col];
                }
                scratch[r][col] = acc;
            }
            for r in 0..d {
                scratch[d + r][col] = q[r][col];
            }
        }
        thin_qr(&mut scratch, 2 * d, d, &mut log_r);
        q = scratch;
        for lr in log_r.iter().take(d) {
            log_det += lr;
        }
        // plain recursion
        step = step * &cur;
        let next = step - &prev;
        prev = cur;
        cur = next;
        if !cur.iter().all(|v| v.is_finite()) {
            return Err(CoreError::OrbitEscape { step: i });
        }
        let scale = cur.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        if scale > 1e120 {
            cur /= scale;
            prev /= scale;
            log_scale += scale.ln();
        }
    }
    // det(Y_N) = det(top d x d block of Q) * prod(diag R)
    let mut top = DMatrix::<f64>::zeros(d, d);
    for i in 0..d {
        for j in 0..d {
            top[(i, j)] = q[i][j];
        }
    }
    let corner = sign_log_det_dense(&top);
    let det = if corner.is_singular() {
        SignLogDet::zero()
    } else {
        SignLogDet {
            sign: corner.sign,
            log_abs: corner.log_abs + log_det,
        }
    };
    Ok(Monodromy {
        matrix: cur,
        log_scale,
        det,
    })
}

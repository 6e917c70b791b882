//! Small dense/structured linear-algebra helpers shared across modules:
//! sign/log determinants, cyclic tridiagonal solves, Lanczos and CG.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::Result;

/// A determinant carried as sign and log-magnitude, so products over 10^4
/// factors neither overflow nor underflow.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SignLogDet {
    /// `-1.0`, `0.0` or `+1.0`.
    pub sign: f64,
    /// `log |det|`; `-inf` when singular.
    pub log_abs: f64,
}

impl SignLogDet {
    pub fn one() -> Self {
        Self {
            sign: 1.0,
            log_abs: 0.0,
        }
    }

    pub fn zero() -> Self {
        Self {
            sign: 0.0,
            log_abs: f64::NEG_INFINITY,
        }
    }

    pub fn from_value(v: f64) -> Self {
        if v == 0.0 {
            Self::zero()
        } else {
            Self {
                sign: v.signum(),
                log_abs: v.abs().ln(),
            }
        }
    }

    pub fn value(&self) -> f64 {
        self.sign * self.log_abs.exp()
    }

    pub fn is_singular(&self) -> bool {
        self.sign == 0.0
    }

    pub fn mul(self, other: SignLogDet) -> SignLogDet {
        if self.is_singular() || other.is_singular() {
            return SignLogDet::zero();
        }
        SignLogDet {
            sign: self.sign * other.sign,
            log_abs: self.log_abs + other.log_abs,
        }
    }

    /// Relative difference `|a - b| / max(1, |b|)` computed in log scale,
    /// safe when both magnitudes are astronomically large.
    pub fn relative_diff(&self, other: &SignLogDet) -> f64 {
        if self.is_singular() && other.is_singular() {
            return 0.0;
        }
        if self.is_singular() || other.is_singular() {
            return f64::INFINITY;
        }
        if other.log_abs <= 0.0 {
            // reference magnitude <= 1: compare absolute values directly
            return (self.value() - other.value()).abs() / 1.0_f64.max(other.value().abs());
        }
        if self.sign != other.sign {
            return f64::INFINITY;
        }
        ((self.log_abs - other.log_abs).exp() - 1.0).abs()
    }
}

/// Sign/log determinant of a dense matrix by LU with partial pivoting.
pub fn sign_log_det_dense(a: &DMatrix<f64>) -> SignLogDet {
    let n = a.nrows();
    assert_eq!(n, a.ncols(), "determinant needs a square matrix");
    let mut m = a.clone();
    let mut sign = 1.0f64;
    let mut log_abs = 0.0f64;
    for k in 0..n {
        let mut p = k;
        let mut best = m[(k, k)].abs();
        for r in k + 1..n {
            if m[(r, k)].abs() > best {
                best = m[(r, k)].abs();
                p = r;
            }
        }
        if best == 0.0 {
            return SignLogDet::zero();
        }
        if p != k {
            m.swap_rows(p, k);
            sign = -sign;
        }
        let pivot = m[(k, k)];
        sign *= pivot.signum();
        log_abs += pivot.abs().ln();
        for r in k + 1..n {
            let f = m[(r, k)] / pivot;
            if f != 0.0 {
                for c in k + 1..n {
                    m[(r, c)] -= f * m[(k, c)];
                }
            }
        }
    }
    SignLogDet { sign, log_abs }
}

/// Solve a cyclic tridiagonal system
/// `diag[i] x[i] + off[i-1] x[i-1] + off[i] x[i+1] = b[i]` (indices mod n,
/// `off[n-1]` is the wrap-around coupling) by the Thomas algorithm plus a
/// rank-one Sherman–Morrison correction.
pub fn cyclic_tridiag_solve(diag: &[f64], off: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    assert!(n >= 3 && off.len() == n && b.len() == n);
    let gamma = -diag[0];
    let mut d = diag.to_vec();
    d[0] -= gamma;
    d[n - 1] -= off[n - 1] * off[n - 1] / gamma;
    let y = thomas_solve(&d, &off[..n - 1], b)?;
    let mut u = vec![0.0; n];
    u[0] = gamma;
    u[n - 1] = off[n - 1];
    let z = thomas_solve(&d, &off[..n - 1], &u)?;
    let vy = y[0] + off[n - 1] / gamma * y[n - 1];
    let vz = z[0] + off[n - 1] / gamma * z[n - 1];
    let denom = 1.0 + vz;
    if denom.abs() < 1e-300 {
        return Err(CoreError::DegenerateHessian(
            "cyclic tridiagonal correction singular".into(),
        ));
    }
    let f = vy / denom;
    Ok((0..n).map(|i| y[i] - f * z[i]).collect())
}

/// Plain Thomas solve of a symmetric tridiagonal system (no pivoting; callers
/// perturb the shift and retry when a pivot collapses).
fn thomas_solve(diag: &[f64], off: &[f64], b: &[f64]) -> Result<Vec<f64>> {
    let n = diag.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut denom = diag[0];
    if denom == 0.0 {
        return Err(CoreError::DegenerateHessian("zero pivot in Thomas solve".into()));
    }
    c[0] = off[0] / denom;
    d[0] = b[0] / denom;
    for i in 1..n {
        denom = diag[i] - off[i - 1] * c[i - 1];
        if denom == 0.0 {
            return Err(CoreError::DegenerateHessian("zero pivot in Thomas solve".into()));
        }
        if i < n - 1 {
            c[i] = off[i] / denom;
        }
        d[i] = (b[i] - off[i - 1] * d[i - 1]) / denom;
    }
    let mut x = d;
    for i in (0..n - 1).rev() {
        let xi = x[i] - c[i] * x[i + 1];
        x[i] = xi;
    }
    Ok(x)
}

/// Lanczos with full reorthogonalization for the smallest eigenpair of a
/// symmetric operator given by its matvec. Returns `(eigenvalue, vector)`;
/// the vector is 2-normalized. Deterministic for a fixed start.
pub fn lanczos_smallest(
    n: usize,
    mut matvec: impl FnMut(&[f64], &mut [f64]),
    max_basis: usize,
) -> (f64, Vec<f64>) {
    let k_max = max_basis.min(n);
    let mut basis: Vec<Vec<f64>> = Vec::with_capacity(k_max);
    let mut alphas = Vec::with_capacity(k_max);
    let mut betas: Vec<f64> = Vec::with_capacity(k_max);
    // deterministic start: uniform plus a mild ramp so symmetric degeneracies
    // do not hide components
    let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 1e-3 * ((i * 2654435761) % 97) as f64).collect();
    normalize(&mut v);
    let mut w = vec![0.0; n];
    for k in 0..k_max {
        basis.push(v.clone());
        matvec(&v, &mut w);
        let alpha = dot(&v, &w);
        alphas.push(alpha);
        for (wi, vi) in w.iter_mut().zip(&v) {
            *wi -= alpha * vi;
        }
        if k > 0 {
            let beta_prev = betas[k - 1];
            for (wi, ui) in w.iter_mut().zip(&basis[k - 1]) {
                *wi -= beta_prev * ui;
            }
        }
        // full reorthogonalization
        for u in &basis {
            let c = dot(&w, u);
            for (wi, ui) in w.iter_mut().zip(u) {
                *wi -= c * ui;
            }
        }
        let beta = norm(&w);
        if beta < 1e-14 {
            break;
        }
        betas.push(beta);
        v = w.iter().map(|x| x / beta).collect();
    }
    // smallest eigenpair of the tridiagonal Rayleigh matrix
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    let eig = t.symmetric_eigen();
    let mut best = 0;
    for i in 1..k {
        if eig.eigenvalues[i] < eig.eigenvalues[best] {
            best = i;
        }
    }
    let mut x = vec![0.0; n];
    for (j, u) in basis.iter().enumerate() {
        let c = eig.eigenvectors[(j, best)];
        for (xi, ui) in x.iter_mut().zip(u) {
            *xi += c * ui;
        }
    }
    normalize(&mut x);
    (eig.eigenvalues[best], x)
}

/// Conjugate gradient for a symmetric positive definite operator.
pub fn cg_solve(
    n: usize,
    mut matvec: impl FnMut(&[f64], &mut [f64]),
    b: &[f64],
    tol: f64,
    max_iter: usize,
) -> Vec<f64> {
    let mut x = vec![0.0; n];
    let mut r = b.to_vec();
    let mut p = r.clone();
    let mut ap = vec![0.0; n];
    let mut rs = dot(&r, &r);
    let b_norm = norm(b).max(1e-300);
    for _ in 0..max_iter {
        if rs.sqrt() <= tol * b_norm {
            break;
        }
        matvec(&p, &mut ap);
        let alpha = rs / dot(&p, &ap);
        for i in 0..n {
            x[i] += alpha * p[i];
            r[i] -= alpha * ap[i];
        }
        let rs_new = dot(&r, &r);
        let beta = rs_new / rs;
        rs = rs_new;
        for i in 0..n {
            p[i] = r[i] + beta * p[i];
        }
    }
    x
}

/// Composite Simpson weights for `n + 1` samples (`n` even) with step `h`.
pub fn simpson_weights(n: usize, h: f64) -> Vec<f64> {
    assert!(n >= 2 && n % 2 == 0, "Simpson needs an even interval count");
    let mut w = vec![0.0; n + 1];
    w[0] = 1.0;
    w[n] = 1.0;
    for (i, wi) in w.iter_mut().enumerate().take(n).skip(1) {
        *wi = if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    for wi in &mut w {
        *wi *= h / 3.0;
    }
    w
}

pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

pub fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub fn normalize(a: &mut [f64]) {
    let n = norm(a);
    if n > 0.0 {
        for x in a.iter_mut() {
            *x /= n;
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sign_log_det_matches_direct() {
        let a = DMatrix::from_row_slice(3, 3, &[2.0, 1.0, 0.0, 1.0, 3.0, 1.0, 0.0, 1.0, 2.0]);
        let sld = sign_log_det_dense(&a);
        assert!((sld.value() - a.determinant()).abs() < 1e-12);
        // a singular matrix
        let s = DMatrix::from_row_slice(2, 2, &[1.0, 2.0, 2.0, 4.0]);
        assert!(sign_log_det_dense(&s).is_singular());
        // a negative-determinant matrix keeps its sign
        let n = DMatrix::from_row_slice(2, 2, &[0.0, 1.0, 1.0, 0.0]);
        let sld = sign_log_det_dense(&n);
        assert_eq!(sld.sign, -1.0);
        assert!(sld.log_abs.abs() < 1e-14);
    }

    #[test]
    fn cyclic_solve_matches_dense() {
        let n = 12;
        let diag: Vec<f64> = (0..n).map(|i| 3.0 + 0.1 * i as f64).collect();
        let off: Vec<f64> = (0..n).map(|i| -1.0 + 0.02 * i as f64).collect();
        let b: Vec<f64> = (0..n).map(|i| (i as f64 * 0.7).sin()).collect();
        let x = cyclic_tridiag_solve(&diag, &off, &b).unwrap();
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = diag[i];
            a[(i, (i + 1) % n)] = off[i];
            a[((i + 1) % n, i)] = off[i];
        }
        let xd = a
            .lu()
            .solve(&nalgebra::DVector::from_column_slice(&b))
            .unwrap();
        for i in 0..n {
            assert!((x[i] - xd[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn lanczos_finds_smallest_eigenvalue() {
        // 1-d discrete Laplacian plus diagonal well
        let n = 64;
        let pot: Vec<f64> = (0..n)
            .map(|i| {
                let x = i as f64 / n as f64 - 0.5;
                10.0 * x * x
            })
            .collect();
        let matvec = |v: &[f64], out: &mut [f64]| {
            for i in 0..n {
                let left = v[(i + n - 1) % n];
                let right = v[(i + 1) % n];
                out[i] = (2.0 * v[i] - left - right) + pot[i] * v[i];
            }
        };
        let (lam, vec) = lanczos_smallest(n, matvec, 64);
        // dense check
        let mut a = DMatrix::zeros(n, n);
        for i in 0..n {
            a[(i, i)] = 2.0 + pot[i];
            a[(i, (i + 1) % n)] = -1.0;
            a[((i + 1) % n, i)] = -1.0;
        }
        let eig = a.symmetric_eigen();
        let min = eig.eigenvalues.iter().cloned().fold(f64::INFINITY, f64::min);
        assert!((lam - min).abs() < 1e-9, "{lam} vs {min}");
        assert!((norm(&vec) - 1.0).abs() < 1e-12);
    }

    #[test]
    fn simpson_integrates_cubics_exactly() {
        let n = 8;
        let h = 1.0 / n as f64;
        let w = simpson_weights(n, h);
        let integral: f64 = (0..=n)
            .map(|i| {
                let x = i as f64 * h;
                w[i] * (x * x * x - 2.0 * x + 1.0)
            })
            .sum();
        assert!((integral - (0.25 - 1.0 + 1.0)).abs() < 1e-14);
    }
}

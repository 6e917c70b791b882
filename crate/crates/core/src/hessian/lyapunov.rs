//! Lyapunov exponents of the twist map by QR-reorthogonalized products.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::model::{twist_jacobian, twist_step, DiscreteLagrangian, PhasePoint, TwoPointLagrangian};
use crate::Result;

/// Lyapunov exponents of an orbit of the twist diffeomorphism.
#[derive(Debug, Clone)]
pub struct LyapunovSpectrum {
    pub steps: usize,
    /// The `d` leading (nonnegative half) exponents, sorted decreasing.
    pub exponents: Vec<f64>,
    /// All `2d` exponents, sorted decreasing; they pair as `(l, -l)` and sum
    /// to zero for the volume-preserving twist map.
    pub full: Vec<f64>,
    /// Running estimates `(step, exponents)` recorded along the way.
    pub history: Vec<(usize, Vec<f64>)>,
}

impl LyapunovSpectrum {
    /// Sum of the nonnegative half.
    pub fn positive_sum(&self) -> f64 {
        self.exponents.iter().sum()
    }

    /// Sum over the full spectrum (zero up to numerics).
    pub fn full_sum(&self) -> f64 {
        self.full.iter().sum()
    }
}

/// Modified Gram-Schmidt on the columns of `a` (2d x 2d, stored row-major in
/// a fixed scratch); returns the log of each column norm in elimination order.
fn mgs_columns(a: &mut [[f64; 4]; 4], n: usize, log_r: &mut [f64; 4]) {
    for j in 0..n {
        let mut nrm = 0.0;
        for row in a.iter().take(n) {
            nrm += row[j] * row[j];
        }
        let nrm = nrm.sqrt();
        log_r[j] = nrm.max(f64::MIN_POSITIVE).ln();
        let inv = if nrm > 0.0 { 1.0 / nrm } else { 0.0 };
        for row in a.iter_mut().take(n) {
            row[j] *= inv;
        }
        for l in j + 1..n {
            let mut dot = 0.0;
            for row in a.iter().take(n) {
                dot += row[j] * row[l];
            }
            for row in a.iter_mut().take(n) {
                row[l] -= dot * row[j];
            }
        }
    }
}

/// QR-reorthogonalized Lyapunov exponents along the twist orbit started at
/// `(x, v) = (g_0, g_1)`. The optional seed rotates the initial frame; the
/// exponents do not depend on it beyond convergence noise.
pub fn lyapunov_exponents(
    lag: &DiscreteLagrangian,
    start: &PhasePoint,
    n: usize,
    seed: Option<u64>,
) -> Result<LyapunovSpectrum> {
    if n < 100 {
        return Err(CoreError::InvalidArgument(
            "Lyapunov estimation needs at least 100 steps".into(),
        ));
    }
    let d = lag.dim();
    let w = 2 * d;
    // orthonormal frame, optionally randomly rotated
    let mut q = [[0.0f64; 4]; 4];
    for (i, row) in q.iter_mut().enumerate().take(w) {
        row[i] = 1.0;
    }
    if let Some(s) = seed {
        let mut rng = ChaCha8Rng::seed_from_u64(s);
        for row in q.iter_mut().take(w) {
            for e in row.iter_mut().take(w) {
                *e += rng.gen_range(-0.1..0.1);
            }
        }
        let mut lr = [0.0f64; 4];
        mgs_columns(&mut q, w, &mut lr);
    }
    let mut sums = [0.0f64; 4];
    let mut prev = start.x.clone();
    let mut cur = start.v.clone();
    let mut history = Vec::new();
    let snapshot_every = (n / 20).max(1);
    let mut scratch = [[0.0f64; 4]; 4];
    let mut log_r = [0.0f64; 4];
    for step in 0..n {
        let jac = twist_jacobian(lag, &cur);
        // scratch = jac * q
        for i in 0..w {
            for j in 0..w {
                let mut acc = 0.0;
                for (k, qrow) in q.iter().enumerate().take(w) {
                    acc += jac[(i, k)] * qrow[j];
                }
                scratch[i][j] = acc;
            }
        }
        mgs_columns(&mut scratch, w, &mut log_r);
        q = scratch;
        for j in 0..w {
            sums[j] += log_r[j];
        }
        let (p, c) = twist_step(lag, &prev, &cur);
        prev = p;
        cur = c;
        if !cur.iter().all(|x| x.is_finite()) {
            return Err(CoreError::OrbitEscape { step });
        }
        if (step + 1) % snapshot_every == 0 {
            let t = (step + 1) as f64;
            history.push((step + 1, (0..w).map(|j| sums[j] / t).collect()));
        }
    }
    let mut full: Vec<f64> = (0..w).map(|j| sums[j] / n as f64).collect();
    full.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let exponents = full[..d].to_vec();
    Ok(LyapunovSpectrum {
        steps: n,
        exponents,
        full,
        history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigPotential;

    #[test]
    fn flat_exponents_vanish() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let start = PhasePoint::new(vec![0.0], vec![0.05]);
        let spec = lyapunov_exponents(&lag, &start, 2_000_000, None).unwrap();
        // parabolic shear: exponents decay like log(n)/n
        assert!(spec.exponents[0].abs() < 1e-5);
        assert!(spec.full_sum().abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_fixed_point_curvature_one() {
        // V''(0) = -1: transfer matrix [[0,1],[-1,3]], top eigenvalue (3+sqrt 5)/2
        let a = 1.0 / (4.0 * std::f64::consts::PI.powi(2));
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[a]), vec![0.0]);
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let spec = lyapunov_exponents(&lag, &start, 2_000_000, None).unwrap();
        let expected = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();
        assert!((spec.exponents[0] - expected).abs() < 1e-6);
        assert!(spec.full_sum().abs() < 1e-9);
    }

    #[test]
    fn hyperbolic_fixed_point_curvature_four() {
        // V''(0) = -4: trace 6, top eigenvalue 3 + 2 sqrt 2
        let a = 4.0 / (4.0 * std::f64::consts::PI.powi(2));
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[a]), vec![0.0]);
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let spec = lyapunov_exponents(&lag, &start, 2_000_000, Some(3)).unwrap();
        let expected = (3.0 + 2.0 * 2.0f64.sqrt()).ln();
        assert!((spec.exponents[0] - expected).abs() < 1e-6);
    }

    #[test]
    fn rejects_short_runs() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let start = PhasePoint::new(vec![0.0], vec![0.1]);
        assert!(lyapunov_exponents(&lag, &start, 50, None).is_err());
    }
}

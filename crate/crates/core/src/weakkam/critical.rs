//! Critical value by min-plus (tropical) power iteration.
//!
//! Iterating the backward Lax–Oleinik sweep without the critical constant
//! drifts by `-c` per step; the critical value is recovered from the
//! stabilized difference of successive minima. Grid artifacts can make the
//! shift sequence settle into a short cycle, in which case the cycle average
//! is returned.

use crate::error::CoreError;
use crate::weakkam::CostMatrix;
use crate::Result;

/// Converged critical value and diagnostics.
#[derive(Debug, Clone)]
pub struct CriticalValue {
    pub c: f64,
    pub iterations: usize,
    /// Last difference between successive shift estimates.
    pub residual: f64,
    /// Cycle length the fallback averaged over (1 = plain convergence).
    pub cycle: usize,
}

/// Extract `c` from the value iteration `u <- T u`:
/// `c = -lim_k [min(T^k u) - min(T^{k-1} u)]`.
pub fn critical_value(cost: &CostMatrix) -> Result<CriticalValue> {
    let tol = 1e-9;
    let max_iters = 20_000;
    let mut u = vec![0.0; cost.num_nodes()];
    let mut shifts: Vec<f64> = Vec::new();
    for it in 1..=max_iters {
        let tu = cost.lax_backward(&u);
        let m = tu.iter().cloned().fold(f64::INFINITY, f64::min);
        shifts.push(m);
        // renormalize so values stay bounded
        u = tu.into_iter().map(|v| v - m).collect();
        if shifts.len() >= 2 {
            let k = shifts.len();
            let last = shifts[k - 1];
            let prev = shifts[k - 2];
            if (last - prev).abs() < tol {
                return Ok(CriticalValue {
                    c: -last,
                    iterations: it,
                    residual: (last - prev).abs(),
                    cycle: 1,
                });
            }
            // cycle detection: same shift recurs with period p while
            // consecutive shifts still oscillate
            if k >= 40 {
                for p in 2..=8usize {
                    if (last - shifts[k - 1 - p]).abs() < 1e-12 {
                        let avg = shifts[k - p..].iter().sum::<f64>() / p as f64;
                        return Ok(CriticalValue {
                            c: -avg,
                            iterations: it,
                            residual: (last - prev).abs(),
                            cycle: p,
                        });
                    }
                }
            }
        }
    }
    Err(CoreError::NonConvergence {
        what: "tropical value iteration",
        iterations: max_iters,
        residual: shifts
            .last()
            .zip(shifts.get(shifts.len().wrapping_sub(2)))
            .map(|(a, b)| (a - b).abs())
            .unwrap_or(f64::NAN),
    })
}

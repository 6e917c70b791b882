//! Continuous-time monodromy determinant and its one-step discretization.
//!
//! The path-space Hessian determinant over `[0, t]` with fixed endpoints
//! equals the determinant of the map `Y'(0) -> Y(t)/t` for Jacobi fields
//! with `Y(0) = 0`. Discretizing the orbit and variation equations with step
//! `t/N` gives the determinant of `Y_1 -> Y_N` divided by `N^d`, which
//! converges to the continuous value as `N` grows.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::model::{propagate_jacobi_columns, ForceSign, PhasePoint, TrigPotential};
use crate::Result;

/// Determinant of `Y'(0) -> Y(t)/t` along the mechanical flow started at
/// `start`, by velocity-Verlet integration of the flow and its Jacobi
/// columns with step `dt`.
pub fn continuous_monodromy_det(
    potential: &TrigPotential,
    start: &PhasePoint,
    t: f64,
    dt: f64,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CoreError::InvalidArgument("time must be positive".into()));
    }
    let d = start.dim();
    let y0 = DMatrix::zeros(d, d);
    let yp0 = DMatrix::identity(d, d);
    let (y, _) =
        propagate_jacobi_columns(potential, ForceSign::Mechanical, start, &y0, &yp0, t, dt)?;
    Ok((y / t).determinant())
}

/// Determinant of the discretized fixed-endpoint Hessian over `[0, t]` with
/// `n` subdivisions (a power of two, at least 8): propagate the one-step
/// orbit and variation recurrences
///
/// ```text
///   G_{k+1} = 2 G_k - G_{k-1} - dt^2 V'(G_k),
///   Y_{k+1} = (2I - dt^2 V''(G_k)) Y_k - Y_{k-1},
/// ```
///
/// and return `det(Y_1 -> Y_n) / n^d`.
pub fn discretized_hessian_det(
    potential: &TrigPotential,
    start: &PhasePoint,
    t: f64,
    n: usize,
) -> Result<f64> {
    if !(t > 0.0) {
        return Err(CoreError::InvalidArgument("time must be positive".into()));
    }
    if n < 8 || !n.is_power_of_two() {
        return Err(CoreError::InvalidArgument(format!(
            "subdivision count must be a power of two >= 8, got {n}"
        )));
    }
    let d = start.dim();
    let dt = t / n as f64;
    // second-order consistent start, matching the integrator grid
    let mut g_prev = start.x.clone();
    let grad0 = potential.grad(&g_prev);
    let mut g_cur: Vec<f64> = (0..d)
        .map(|i| start.x[i] + start.v[i] * dt - 0.5 * dt * dt * grad0[i])
        .collect();
    let mut y_prev = DMatrix::<f64>::zeros(d, d);
    let mut y_cur = DMatrix::<f64>::identity(d, d);
    for k in 1..n {
        let hess = potential.hess(&g_cur);
        let step = DMatrix::identity(d, d) * 2.0 - hess * (dt * dt);
        let y_next = step * &y_cur - &y_prev;
        y_prev = y_cur;
        y_cur = y_next;
        let grad = potential.grad(&g_cur);
        let g_next: Vec<f64> = (0..d)
            .map(|i| 2.0 * g_cur[i] - g_prev[i] - dt * dt * grad[i])
            .collect();
        g_prev = g_cur;
        g_cur = g_next;
        if !(g_cur.iter().all(|v| v.is_finite()) && y_cur.iter().all(|v| v.is_finite())) {
            return Err(CoreError::OrbitEscape { step: k });
        }
    }
    Ok(y_cur.determinant() / (n as f64).powi(d as i32))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigPotential;
    use std::f64::consts::{PI, TAU};

    fn constant_curvature(q: f64) -> TrigPotential {
        // V(x) = a cos(2 pi x) with V''(0) = q needs a = -q / (2 pi)^2;
        // x = 0 is then a critical point with constant curvature along the
        // trivial orbit.
        TrigPotential::cosine_series(&[-q / (TAU * TAU)])
    }

    #[test]
    fn free_motion_determinants_are_one() {
        let v = TrigPotential::zero(1);
        let start = PhasePoint::new(vec![0.3], vec![0.0]);
        assert!((continuous_monodromy_det(&v, &start, 1.0, 1e-3).unwrap() - 1.0).abs() < 1e-12);
        for n in [8usize, 32, 256] {
            assert_eq!(discretized_hessian_det(&v, &start, 1.0, n).unwrap(), 1.0);
        }
    }

    #[test]
    fn constant_curvature_closed_form() {
        let q = 2.0;
        let v = constant_curvature(q);
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let t = 1.0;
        let exact = (q.sqrt() * t).sin() / (q.sqrt() * t);
        let det = continuous_monodromy_det(&v, &start, t, 1e-4).unwrap();
        assert!((det - exact).abs() < 1e-7, "{det} vs {exact}");
        // negative curvature gives the hyperbolic form
        let q = -1.5;
        let v = constant_curvature(q);
        let exact = ((-q).sqrt() * t).sinh() / ((-q).sqrt() * t);
        let det = continuous_monodromy_det(&v, &start, t, 1e-4).unwrap();
        assert!((det - exact).abs() < 1e-7);
    }

    #[test]
    fn vanishes_at_the_first_conjugate_time() {
        let q = 9.0; // conjugate time pi/3
        let v = constant_curvature(q);
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let t_star = PI / 3.0;
        let before = continuous_monodromy_det(&v, &start, t_star - 0.05, 1e-4).unwrap();
        let at = continuous_monodromy_det(&v, &start, t_star, 1e-4).unwrap();
        let after = continuous_monodromy_det(&v, &start, t_star + 0.05, 1e-4).unwrap();
        assert!(before > 0.0 && after < 0.0);
        assert!(at.abs() < 1e-6);
    }

    #[test]
    fn discretization_converges_at_second_order_for_constant_curvature() {
        let q = 2.0;
        let v = constant_curvature(q);
        let start = PhasePoint::new(vec![0.0], vec![0.0]);
        let t = 1.0;
        let exact = (q.sqrt() * t).sin() / (q.sqrt() * t);
        let mut prev_err = f64::INFINITY;
        for n in [64usize, 128, 256] {
            let err = (discretized_hessian_det(&v, &start, t, n).unwrap() - exact).abs();
            assert!(
                err < 0.55 * prev_err || err < 1e-12,
                "error did not at least halve: {err} after {prev_err}"
            );
            prev_err = err;
        }
    }

    #[test]
    fn generic_orbit_self_convergence() {
        // oscillation in a well: V'' varies along the orbit
        let v = TrigPotential::cosine_series(&[-2.0 / (TAU * TAU)]);
        let start = PhasePoint::new(vec![0.07], vec![0.0]);
        let t = 1.5;
        let reference = continuous_monodromy_det(&v, &start, t, 2e-5).unwrap();
        let e256 = (discretized_hessian_det(&v, &start, t, 256).unwrap() - reference).abs();
        let e1024 = (discretized_hessian_det(&v, &start, t, 1024).unwrap() - reference).abs();
        assert!(
            e256 <= 2.0 * (e1024 * (256f64 / 1024.0).powi(-2)) && e1024 < e256,
            "no convergence trend: {e256} vs {e1024}"
        );
    }

    #[test]
    fn rejects_non_dyadic_subdivisions() {
        let v = TrigPotential::zero(1);
        let start = PhasePoint::new(vec![0.0], vec![0.1]);
        assert!(discretized_hessian_det(&v, &start, 1.0, 24).is_err());
        assert!(discretized_hessian_det(&v, &start, 1.0, 4).is_err());
    }
}

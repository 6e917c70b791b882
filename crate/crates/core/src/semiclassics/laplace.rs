//! Desk-scale validation of the Laplace method for short path sums:
//!
//! ```text
//!   (beta/2pi)^{(N-1)d/2} int e^{-beta sum L}  =  e^{-beta h_N} / det(Hess)^{1/2} (1 + o(1)),
//! ```
//!
//! the integral running over the interior points of an `N`-step path with
//! fixed lifted endpoints. The left side is evaluated by tensor Simpson
//! quadrature around the Newton-refined minimizer, the right side from the
//! refined action and the block determinant; the relative error must shrink
//! along a `beta` sweep.

use crate::error::CoreError;
use crate::hessian::{assemble_hessian, block_determinant};
use crate::linalg::simpson_weights;
use crate::model::{action_of_path, DiscreteLagrangian, Orbit, TwoPointLagrangian};
use crate::weakkam::newton_refine;
use crate::Result;

/// One row of the validation table.
#[derive(Debug, Clone, Copy)]
pub struct LaplaceRow {
    pub beta: f64,
    /// `(beta/2pi)^{(N-1)d/2} int e^{-beta sum L}`, exponent-normalized.
    pub lhs: f64,
    /// `e^{-beta h_N} [Hess]^{-1/2}`, same normalization.
    pub rhs: f64,
    pub rel_err: f64,
}

/// Evaluate both sides of the Laplace asymptotics for the `n_steps`-step
/// action between fixed lifts `x` and `y`, across `beta_list`.
///
/// Quadrature feasibility limits the interior dimension `(n_steps - 1) d`
/// to at most 2 (so `N in {2, 3}` at `d = 1`, `N = 2` at `d = 2`).
pub fn laplace_validate(
    lag: &DiscreteLagrangian,
    x: &[f64],
    y: &[f64],
    n_steps: usize,
    beta_list: &[f64],
) -> Result<Vec<LaplaceRow>> {
    let d = lag.dim();
    if !(2..=3).contains(&n_steps) {
        return Err(CoreError::InvalidArgument(
            "the number of steps must be 2 or 3".into(),
        ));
    }
    let interior_dim = (n_steps - 1) * d;
    if interior_dim > 2 {
        return Err(CoreError::InvalidArgument(format!(
            "interior dimension {interior_dim} beyond tensor-quadrature feasibility"
        )));
    }
    if beta_list.is_empty() || beta_list.iter().any(|b| *b <= 0.0) {
        return Err(CoreError::InvalidArgument(
            "beta list must be nonempty and positive".into(),
        ));
    }

    // straight initial path, Newton-refined to the interior minimizer
    let pts: Vec<Vec<f64>> = (0..=n_steps)
        .map(|k| {
            let t = k as f64 / n_steps as f64;
            (0..d).map(|i| x[i] + t * (y[i] - x[i])).collect()
        })
        .collect();
    let straight = Orbit::from_points(d, pts)?;
    let minimizer = newton_refine(lag, &straight, 1e-12, 80)?;
    let h_n = action_of_path(lag, &minimizer);
    let hess = assemble_hessian(lag, &minimizer)?;
    // nondegenerate minimum: every elimination pivot must stay positive
    let det = block_determinant(&hess);
    if det.conjugate_point || det.det.sign <= 0.0 {
        return Err(CoreError::DegenerateHessian(
            "refined critical path is not a nondegenerate minimum".into(),
        ));
    }

    let mut rows = Vec::with_capacity(beta_list.len());
    for &beta in beta_list {
        let lhs = quadrature_lhs(lag, &minimizer, h_n, beta, interior_dim)?;
        let rhs = (-0.5 * det.det.log_abs).exp();
        let rel_err = (lhs / rhs - 1.0).abs();
        rows.push(LaplaceRow {
            beta,
            lhs,
            rhs,
            rel_err,
        });
    }
    Ok(rows)
}

/// `(beta/2pi)^{D/2} int e^{-beta (sum L - h_N)}` over the interior points,
/// centered at the minimizer. Factoring `h_N` out keeps the integrand order
/// one; the RHS is normalized the same way.
fn quadrature_lhs(
    lag: &DiscreteLagrangian,
    minimizer: &Orbit,
    h_n: f64,
    beta: f64,
    interior_dim: usize,
) -> Result<f64> {
    let d = lag.dim();
    let (window, nodes) = if interior_dim == 1 {
        (1.5 + 10.0 / beta.sqrt(), 6400)
    } else {
        (1.0 + 8.0 / beta.sqrt(), 512)
    };
    let weights = simpson_weights(nodes, 2.0 * window / nodes as f64);
    let mut path = minimizer.clone();
    let centers: Vec<f64> = (1..minimizer.len() - 1)
        .flat_map(|i| minimizer.point(i).to_vec())
        .collect();
    let eval = |path: &Orbit| (-beta * (action_of_path(lag, path) - h_n)).exp();
    let integral = match interior_dim {
        1 => {
            let mut acc = 0.0;
            for (iw, w) in weights.iter().enumerate() {
                let u = -window + 2.0 * window * iw as f64 / nodes as f64;
                path.point_mut(1)[0] = centers[0] + u;
                acc += w * eval(&path);
            }
            acc
        }
        _ => {
            // two interior coordinates: either two 1-d interior points or one
            // 2-d interior point; the flat index layout covers both
            let mut acc = 0.0;
            for (iw, wi) in weights.iter().enumerate() {
                let u = -window + 2.0 * window * iw as f64 / nodes as f64;
                for (jw, wj) in weights.iter().enumerate() {
                    let v = -window + 2.0 * window * jw as f64 / nodes as f64;
                    if d == 1 {
                        path.point_mut(1)[0] = centers[0] + u;
                        path.point_mut(2)[0] = centers[1] + v;
                    } else {
                        path.point_mut(1)[0] = centers[0] + u;
                        path.point_mut(1)[1] = centers[1] + v;
                    }
                    acc += wi * wj * eval(&path);
                }
            }
            acc
        }
    };
    if !integral.is_finite() || integral <= 0.0 {
        return Err(CoreError::QuadratureInconclusive(format!(
            "interior integral came out {integral}"
        )));
    }
    Ok((beta / std::f64::consts::TAU).powf(interior_dim as f64 / 2.0) * integral)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::TrigPotential;

    #[test]
    fn flat_two_step_case_is_exactly_gaussian() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let rows = laplace_validate(&lag, &[0.2], &[0.2], 2, &[25.0, 100.0, 400.0]).unwrap();
        for r in &rows {
            // both sides equal 1/sqrt(2): the integrand is purely quadratic
            assert!((r.rhs - 0.5f64.sqrt()).abs() < 1e-12);
            assert!(r.rel_err < 1e-8, "beta {}: rel err {}", r.beta, r.rel_err);
        }
    }

    #[test]
    fn small_potential_error_shrinks_with_beta() {
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.01]), vec![0.0]);
        let rows = laplace_validate(&lag, &[0.15], &[0.4], 2, &[100.0, 200.0, 400.0]).unwrap();
        assert!(rows[0].rel_err <= 0.05, "5% budget failed: {:?}", rows[0]);
        assert!(rows[1].rel_err < rows[0].rel_err);
        assert!(rows[2].rel_err < rows[1].rel_err);
    }

    #[test]
    fn three_step_case_matches_through_the_sweep() {
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.01]), vec![0.0]);
        let rows = laplace_validate(&lag, &[0.1], &[0.55], 3, &[100.0, 400.0]).unwrap();
        assert!(rows[0].rel_err <= 0.05);
        assert!(rows[1].rel_err < rows[0].rel_err);
    }

    #[test]
    fn rejects_infeasible_dimensions() {
        let v2 = TrigPotential::new(
            2,
            vec![crate::model::Mode {
                k: vec![1, 1],
                a: 0.01,
                b: 0.0,
            }],
        )
        .unwrap();
        let lag2 = DiscreteLagrangian::new(v2, vec![0.0, 0.0]);
        // N = 3 at d = 2 would need 4-d quadrature
        assert!(laplace_validate(&lag2, &[0.1, 0.1], &[0.3, 0.3], 3, &[50.0]).is_err());
        // N = 2 at d = 2 is feasible
        assert!(laplace_validate(&lag2, &[0.1, 0.1], &[0.3, 0.3], 2, &[50.0]).is_ok());
    }
}

//! Perron eigenpairs of the periodized kernel by power iteration.

use crate::error::CoreError;
use crate::grid::GridFunction;
use crate::transfer::PeriodizedKernel;
use crate::Result;

/// Perron data of a transfer kernel.
///
/// `rho` is the common largest eigenvalue of `K` and of its transpose (the
/// kernel of the time-reversed system); `lambda = log rho` is the pressure
/// normalization under which `lambda / beta` tends to the critical value and
/// the Doob transition densities `psi(y) K(x, y) / (e^lambda psi(x))` are
/// exactly stochastic.
#[derive(Debug, Clone)]
pub struct TransferSpectrum {
    pub beta: f64,
    /// Perron eigenvalue of the discretized kernel.
    pub rho: f64,
    /// `log rho`.
    pub lambda: f64,
    /// Right Perron eigenvector of `K`, sup-normalized, strictly positive.
    pub psi: GridFunction,
    /// Right Perron eigenvector of `K^T`, sup-normalized, strictly positive.
    pub psi_star: GridFunction,
    /// Relative sup-norm residuals `|K psi - rho psi| / (rho |psi|)`.
    pub residual: f64,
    pub residual_star: f64,
    pub iterations: usize,
}

const EIG_INCREMENT_TOL: f64 = 1e-12;
const RESIDUAL_TOL: f64 = 1e-10;
const MAX_ITERS: usize = 100_000;

fn power_iteration(
    kernel: &PeriodizedKernel,
    transpose: bool,
) -> Result<(f64, Vec<f64>, f64, usize)> {
    let nn = kernel.grid().num_nodes();
    let mut v = vec![1.0f64; nn];
    let mut rho_prev = f64::NAN;
    let mut last_residual = f64::INFINITY;
    let mut prev_residual = f64::INFINITY;
    for it in 1..=MAX_ITERS {
        let w = if transpose {
            kernel.apply_transpose(&v)
        } else {
            kernel.apply(&v)
        };
        let rho = w.iter().cloned().fold(0.0f64, f64::max);
        if !(rho > 0.0 && rho.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "kernel iteration left the positive cone".into(),
            ));
        }
        let residual = w
            .iter()
            .zip(&v)
            .map(|(wi, vi)| (wi - rho * vi).abs())
            .fold(0.0f64, f64::max)
            / rho;
        for (vi, wi) in v.iter_mut().zip(&w) {
            *vi = wi / rho;
        }
        let increment_ok = (rho - rho_prev).abs() <= EIG_INCREMENT_TOL * rho;
        if increment_ok && residual <= RESIDUAL_TOL {
            return Ok((rho, v, residual, it));
        }
        rho_prev = rho;
        prev_residual = last_residual;
        last_residual = residual;
    }
    // residual contraction ratio estimates the spectral gap
    let gap_estimate = if prev_residual.is_finite() && prev_residual > 0.0 {
        1.0 - (last_residual / prev_residual).min(1.0)
    } else {
        0.0
    };
    Err(CoreError::SpectralGap {
        iterations: MAX_ITERS,
        gap_estimate,
    })
}

/// Power iteration for the Perron pair of `K`, with the left eigenvector
/// obtained as the Perron vector of the transposed (time-reversed) kernel.
/// The two eigenvalue estimates must agree to 1e-9 relative.
pub fn principal_eigenpair(kernel: &PeriodizedKernel) -> Result<TransferSpectrum> {
    if kernel.min_entry() <= 0.0 {
        return Err(CoreError::InvalidArgument(
            "transfer kernel must be entrywise positive".into(),
        ));
    }
    let (rho, psi, residual, it1) = power_iteration(kernel, false)?;
    let (rho_star, psi_star, residual_star, it2) = power_iteration(kernel, true)?;
    if (rho - rho_star).abs() > 1e-9 * rho {
        return Err(CoreError::NonConvergence {
            what: "forward/reversed Perron eigenvalues disagree",
            iterations: it1 + it2,
            residual: (rho - rho_star).abs() / rho,
        });
    }
    if !(psi.iter().all(|&v| v > 0.0) && psi_star.iter().all(|&v| v > 0.0)) {
        return Err(CoreError::InvalidArgument(
            "Perron vectors must be strictly positive".into(),
        ));
    }
    Ok(TransferSpectrum {
        beta: kernel.beta(),
        rho,
        lambda: rho.ln(),
        psi: GridFunction::new(kernel.grid(), psi)?,
        psi_star: GridFunction::new(kernel.grid(), psi_star)?,
        residual,
        residual_star,
        iterations: it1 + it2,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::model::{DiscreteLagrangian, TrigPotential};
    use crate::transfer::build_mechanical_kernel;
    use std::f64::consts::TAU;

    #[test]
    fn flat_kernel_has_constant_eigenfunction() {
        let lag = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);
        let grid = TorusGrid::new(1, 128).unwrap();
        let beta = 30.0;
        let kernel = build_mechanical_kernel(&lag, grid, beta, None).unwrap();
        let spec = principal_eigenpair(&kernel).unwrap();
        let expect = (TAU / beta).sqrt();
        assert!((spec.rho - expect).abs() < 1e-8 * expect);
        let psi = spec.psi.values();
        for &v in psi {
            assert!((v - 1.0).abs() < 1e-9);
        }
        assert!(spec.residual <= 1e-10 && spec.residual_star <= 1e-10);
    }

    #[test]
    fn even_potential_gives_even_eigenfunction() {
        let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[0.05]), vec![0.0]);
        let grid = TorusGrid::new(1, 64).unwrap();
        let kernel = build_mechanical_kernel(&lag, grid, 50.0, None).unwrap();
        let spec = principal_eigenpair(&kernel).unwrap();
        let psi = spec.psi.values();
        for i in 1..32 {
            assert!(
                (psi[i] - psi[64 - i]).abs() < 1e-8,
                "asymmetry at node {i}"
            );
        }
        // the reversed eigenvector relates by the potential weight:
        // psi* is proportional to e^{-beta V} psi for omega = 0
        let grid = kernel.grid();
        let weight = |i: usize| {
            (-50.0 * lag.potential().value(&grid.node(i))).exp() * psi[i]
        };
        let scale = spec.psi_star.values()[0] / weight(0);
        for i in 0..64 {
            let expect = weight(i) * scale;
            assert!(
                (spec.psi_star.values()[i] - expect).abs() < 1e-8,
                "node {i}"
            );
        }
    }

    #[test]
    fn matches_dense_eigensolver_at_m_64() {
        let lag = DiscreteLagrangian::new(
            TrigPotential::cosine_series(&[0.07, -0.02]),
            vec![0.2],
        );
        let grid = TorusGrid::new(1, 64).unwrap();
        let kernel = build_mechanical_kernel(&lag, grid, 40.0, None).unwrap();
        let spec = principal_eigenpair(&kernel).unwrap();
        let mut dense = nalgebra::DMatrix::zeros(64, 64);
        for i in 0..64 {
            for j in 0..64 {
                dense[(i, j)] = kernel.entry(i, j);
            }
        }
        let eigs = dense.complex_eigenvalues();
        let rho_dense = eigs.iter().map(|z| z.norm()).fold(0.0f64, f64::max);
        assert!(
            (spec.rho - rho_dense).abs() <= 1e-9 * rho_dense,
            "{} vs {}",
            spec.rho,
            rho_dense
        );
    }
}

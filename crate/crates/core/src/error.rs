//! Error type shared by all modules of the crate.

use thiserror::Error;

/// Errors raised by constructors, solvers and diagnostics.
#[derive(Debug, Error)]
pub enum CoreError {
    /// A parameter failed validation (dimension, sign, emptiness, ...).
    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    /// Lattice truncation radius too small for the requested tail accuracy.
    #[error("truncation radius {given} too small, need at least {required}")]
    TruncationRadius { given: usize, required: usize },

    /// An iterative solver ran out of iterations.
    #[error("{what} did not converge after {iterations} iterations (residual {residual:.3e})")]
    NonConvergence {
        what: &'static str,
        iterations: usize,
        residual: f64,
    },

    /// Power iteration stalled; the spectral gap estimate is reported.
    #[error("power iteration stalled after {iterations} iterations, gap estimate {gap_estimate:.3e}")]
    SpectralGap {
        iterations: usize,
        gap_estimate: f64,
    },

    /// An orbit left the representable range (non-finite coordinates).
    #[error("orbit escaped to non-finite values at step {step}")]
    OrbitEscape { step: usize },

    /// A set expected to be nonempty came back empty.
    #[error("{0} is empty; tolerance too small or solver failure")]
    EmptySet(&'static str),

    /// Newton refinement failed to reach the requested residual.
    #[error("Newton refinement diverged (residual {residual:.3e} after {iterations} iterations)")]
    NewtonDivergence { iterations: usize, residual: f64 },

    /// A Hessian that must be nondegenerate came out singular.
    #[error("degenerate Hessian detected: {0}")]
    DegenerateHessian(String),

    /// Quadrature failed to reach the requested accuracy.
    #[error("quadrature inconclusive: {0}")]
    QuadratureInconclusive(String),

    /// JSON (de)serialization failure for external formats.
    #[error("serialization: {0}")]
    Serialization(#[from] serde_json::Error),
}

//! Numerical machinery for discrete Aubry–Mather theory at positive and zero
//! temperature: periodized transfer operators and their Perron eigenfunctions,
//! discrete weak-KAM (Lax–Oleinik) solvers, block-tridiagonal action Hessians
//! with their monodromy identities, Lyapunov exponents, and semiclassical
//! Schrödinger ground states.
//!
//! The configuration space is the torus `T^d` (`d` = 1 or 2) with mechanical
//! Lagrangians
//!
//! ```text
//!   L(x, y) = |y - x|^2 / 2 - V(x) - <omega, y - x>
//! ```
//!
//! for a trigonometric-polynomial potential `V` and a cohomology class
//! `omega`. Everything downstream (Gibbs marginals, critical values,
//! determinant identities, concentration experiments) is built from this one
//! two-point function and its continuous-time counterpart.

pub mod error;
pub mod grid;
pub mod hessian;
pub mod linalg;
pub mod model;
pub mod semiclassics;
pub mod transfer;
pub mod weakkam;

pub use error::CoreError;
pub use grid::{GridFunction, TorusGrid};
pub use hessian::{BlockTridiagonal, LyapunovSpectrum, SignLogDet};
pub use model::{
    DiscreteLagrangian, ForceSign, NormalizedLagrangian, Orbit, PhasePoint, TrigPotential,
    TwoPointLagrangian,
};
pub use transfer::{PeriodizedKernel, TransferSpectrum};
pub use weakkam::{ValueTable, WeakKamPair};

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, CoreError>;

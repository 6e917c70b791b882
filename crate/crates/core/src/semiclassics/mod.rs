//! Semiclassical block: Laplace-method validation at small path lengths,
//! continuous-time monodromy determinants and their discretizations, the
//! Fredholm determinant of the path-space Hessian, and torus Schrödinger
//! ground states with the well-selection experiment.

mod detconv;
mod fredholm;
mod laplace;
mod schrodinger;

pub use detconv::{continuous_monodromy_det, discretized_hessian_det};
pub use fredholm::{fredholm_det, fredholm_operator, FredholmDet, FredholmOperator};
pub use laplace::{laplace_validate, LaplaceRow};
pub use schrodinger::{
    concentration_experiment, schrodinger_ground, suggested_grid_nodes, SchrodingerResult, Well,
    WellMassRow,
};

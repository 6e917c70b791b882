//! Block-tridiagonal action Hessians along discrete orbits, their
//! determinants by forward block elimination, the Jacobi/monodromy
//! determinant identity, Lyapunov exponents, and the tridiagonal /
//! box-Gaussian inequality kit.

mod block;
mod bounds;
mod lyapunov;
mod monodromy;
mod thouless;

pub use crate::linalg::SignLogDet;
pub use block::{assemble_hessian, block_determinant, BlockDeterminant, BlockFactorization, BlockTridiagonal};
pub use bounds::{
    box_gaussian_lower_bound_check, calibrate_box_rho, inverse_norm_bound, tridiag_inverse_bound_check,
    BoxGaussianCheck, TridiagBoundCheck,
};
pub use lyapunov::{lyapunov_exponents, LyapunovSpectrum};
pub use monodromy::{monodromy_map, Monodromy};
pub use thouless::{schur_determinant_split, subadditivity_check, thouless_limit, thouless_running, SubadditivitySlack, ThoulessResult};

//! Mechanical model: periodic potentials, the discrete and continuous
//! Lagrangians, the Euler–Lagrange twist recurrence and its linearization,
//! and the continuous-time flow/Jacobi integrators.

mod flow;
mod lagrangian;
mod orbit;
mod potential;

pub use flow::{flow_step, integrate_flow, jacobi_step, propagate_jacobi_columns, total_energy, ForceSign, Trajectory};
pub use lagrangian::{DiscreteLagrangian, NormalizedLagrangian, ReversedLagrangian, TwoPointLagrangian};
pub use orbit::{action_of_path, iterate_twist, twist_jacobian, twist_step, Orbit, PhasePoint, TWIST_RESIDUAL_TOL};
pub use potential::{Mode, TrigPotential};

//! Continuous-time Euler–Lagrange flow and Jacobi fields.
//!
//! The mechanical flow is `x'' = -V'(x)`; the semiclassical concentration
//! statement uses the reversed-force flow `x'' = +V'(x)`. The sign is an
//! explicit parameter rather than a hidden convention. Integration is
//! velocity-Verlet (Störmer–Verlet), second order and symplectic, and the
//! Jacobi propagation below is the exact linearization of the same step, so
//! Wronskians of Jacobi pairs are conserved to rounding.

use nalgebra::DMatrix;

use crate::error::CoreError;
use crate::model::{PhasePoint, TrigPotential};
use crate::Result;

/// Which second-order equation the flow integrates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ForceSign {
    /// `x'' = -V'(x)` (the Euler–Lagrange flow of `|v|^2/2 - V`).
    Mechanical,
    /// `x'' = +V'(x)` (inverted potential).
    Inverted,
}

impl ForceSign {
    /// Multiplier `s` in `x'' = s V'(x)`.
    pub fn factor(self) -> f64 {
        match self {
            ForceSign::Mechanical => -1.0,
            ForceSign::Inverted => 1.0,
        }
    }
}

fn acceleration(potential: &TrigPotential, sign: ForceSign, x: &[f64], out: &mut [f64]) {
    potential.grad_into(x, out);
    let s = sign.factor();
    for a in out.iter_mut() {
        *a *= s;
    }
}

/// One velocity-Verlet step of `x'' = s V'(x)`.
pub fn flow_step(
    potential: &TrigPotential,
    sign: ForceSign,
    state: &PhasePoint,
    dt: f64,
) -> PhasePoint {
    assert!(dt > 0.0, "time step must be positive");
    let d = state.dim();
    let mut a0 = vec![0.0; d];
    acceleration(potential, sign, &state.x, &mut a0);
    let x1: Vec<f64> = (0..d)
        .map(|i| state.x[i] + state.v[i] * dt + 0.5 * a0[i] * dt * dt)
        .collect();
    let mut a1 = vec![0.0; d];
    acceleration(potential, sign, &x1, &mut a1);
    let v1 = (0..d)
        .map(|i| state.v[i] + 0.5 * (a0[i] + a1[i]) * dt)
        .collect();
    PhasePoint::new(x1, v1)
}

/// Conserved energy `|v|^2/2 - s V(x)` of the flow `x'' = s V'(x)`.
pub fn total_energy(potential: &TrigPotential, sign: ForceSign, state: &PhasePoint) -> f64 {
    let kin: f64 = state.v.iter().map(|v| v * v).sum::<f64>() / 2.0;
    kin - sign.factor() * potential.value(&state.x)
}

/// Advance the base point and a Jacobi field `(Y, Y')` one step together.
///
/// The Jacobi update is the derivative of the velocity-Verlet map, with
/// `Y'' = s V''(x) Y` evaluated on the same grid as the base trajectory.
pub fn jacobi_step(
    potential: &TrigPotential,
    sign: ForceSign,
    base: &PhasePoint,
    field: (&[f64], &[f64]),
    dt: f64,
) -> (PhasePoint, (Vec<f64>, Vec<f64>)) {
    let d = base.dim();
    let s = sign.factor();
    let (y, yp) = field;
    let j0 = potential.hess(&base.x) * s;
    let next = flow_step(potential, sign, base, dt);
    let j1 = potential.hess(&next.x) * s;
    let mut y1 = vec![0.0; d];
    for i in 0..d {
        let mut acc = 0.0;
        for l in 0..d {
            acc += j0[(i, l)] * y[l];
        }
        y1[i] = y[i] + yp[i] * dt + 0.5 * acc * dt * dt;
    }
    let mut yp1 = vec![0.0; d];
    for i in 0..d {
        let mut acc = 0.0;
        for l in 0..d {
            acc += j0[(i, l)] * y[l] + j1[(i, l)] * y1[l];
        }
        yp1[i] = yp[i] + 0.5 * acc * dt;
    }
    (next, (y1, yp1))
}

/// A stored continuous-time trajectory on a uniform step grid.
#[derive(Debug, Clone)]
pub struct Trajectory {
    dim: usize,
    dt: f64,
    positions: Vec<f64>, // flat, stride = dim; length (steps+1) * dim
    pub end: PhasePoint,
}

impl Trajectory {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored samples (steps + 1).
    pub fn num_samples(&self) -> usize {
        self.positions.len() / self.dim
    }

    pub fn position(&self, i: usize) -> &[f64] {
        &self.positions[i * self.dim..(i + 1) * self.dim]
    }
}

/// Integrate the flow over `[0, t]` with a fixed step, storing positions.
///
/// The step actually used divides `t` exactly: `n = ceil(t / dt)` steps of
/// size `t / n`.
pub fn integrate_flow(
    potential: &TrigPotential,
    sign: ForceSign,
    start: &PhasePoint,
    t: f64,
    dt: f64,
) -> Result<Trajectory> {
    if !(t > 0.0 && dt > 0.0) {
        return Err(CoreError::InvalidArgument(
            "integration time and step must be positive".into(),
        ));
    }
    let n = (t / dt).ceil() as usize;
    let step = t / n as f64;
    let d = start.dim();
    let mut positions = Vec::with_capacity((n + 1) * d);
    positions.extend_from_slice(&start.x);
    let mut state = start.clone();
    for k in 0..n {
        state = flow_step(potential, sign, &state, step);
        if !state.x.iter().all(|c| c.is_finite()) {
            return Err(CoreError::OrbitEscape { step: k });
        }
        positions.extend_from_slice(&state.x);
    }
    Ok(Trajectory {
        dim: d,
        dt: step,
        positions,
        end: state,
    })
}

/// Propagate `d` Jacobi fields (columns) along a flow, returning the matrix
/// pair `(Y(t), Y'(t))` for initial data `Y(0) = y0`, `Y'(0) = yp0`.
pub fn propagate_jacobi_columns(
    potential: &TrigPotential,
    sign: ForceSign,
    start: &PhasePoint,
    y0: &DMatrix<f64>,
    yp0: &DMatrix<f64>,
    t: f64,
    dt: f64,
) -> Result<(DMatrix<f64>, DMatrix<f64>)> {
    let d = start.dim();
    let n = (t / dt).ceil() as usize;
    let step = t / n as f64;
    let mut base = start.clone();
    let mut y = y0.clone();
    let mut yp = yp0.clone();
    for k in 0..n {
        let mut next_base = base.clone();
        for col in 0..d {
            let yc: Vec<f64> = (0..d).map(|i| y[(i, col)]).collect();
            let ypc: Vec<f64> = (0..d).map(|i| yp[(i, col)]).collect();
            let (nb, (y1, yp1)) = jacobi_step(potential, sign, &base, (&yc, &ypc), step);
            next_base = nb;
            for i in 0..d {
                y[(i, col)] = y1[i];
                yp[(i, col)] = yp1[i];
            }
        }
        base = next_base;
        if !base.x.iter().all(|c| c.is_finite()) {
            return Err(CoreError::OrbitEscape { step: k });
        }
    }
    Ok((y, yp))
}

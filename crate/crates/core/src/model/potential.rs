//! Trigonometric-polynomial potentials on the torus.
//!
//! A potential is a finite Fourier series
//!
//! ```text
//!   V(x) = sum_k  a_k cos(2 pi <k, x>) + b_k sin(2 pi <k, x>)
//! ```
//!
//! with integer frequency vectors `k`. Periodicity is exact by construction
//! and derivatives up to third order come out of the series analytically,
//! which is what the `C^3` machinery downstream needs.

use nalgebra::DMatrix;
use serde::{Deserialize, Serialize};
use std::f64::consts::TAU;

use crate::error::CoreError;
use crate::Result;

/// One Fourier mode: frequency vector and cosine/sine amplitudes.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Mode {
    pub k: Vec<i64>,
    #[serde(default)]
    pub a: f64,
    #[serde(default)]
    pub b: f64,
}

/// Finite trigonometric series `V` with exact derivatives up to order 3.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TrigPotential {
    d: usize,
    modes: Vec<Mode>,
}

impl TrigPotential {
    pub fn new(d: usize, modes: Vec<Mode>) -> Result<Self> {
        if d == 0 || d > 2 {
            return Err(CoreError::InvalidArgument(format!(
                "potential dimension must be 1 or 2, got {d}"
            )));
        }
        for m in &modes {
            if m.k.len() != d {
                return Err(CoreError::InvalidArgument(format!(
                    "mode frequency has length {}, expected {d}",
                    m.k.len()
                )));
            }
            if !(m.a.is_finite() && m.b.is_finite()) {
                return Err(CoreError::InvalidArgument(
                    "mode amplitudes must be finite".into(),
                ));
            }
        }
        Ok(Self { d, modes })
    }

    /// The zero potential (free motion).
    pub fn zero(d: usize) -> Self {
        Self::new(d, Vec::new()).expect("dimension checked by caller")
    }

    /// One-dimensional cosine series `sum_j a_j cos(2 pi j x)`, `j = 1, 2, ...`.
    pub fn cosine_series(coeffs: &[f64]) -> Self {
        let modes = coeffs
            .iter()
            .enumerate()
            .map(|(j, &a)| Mode {
                k: vec![(j + 1) as i64],
                a,
                b: 0.0,
            })
            .collect();
        Self::new(1, modes).expect("valid by construction")
    }

    /// One-dimensional potential with exactly two local maxima, at `x = 0`
    /// and `x = 1/2`, of equal height and curvatures `V'' = -w0` and `-w1`.
    ///
    /// Three cosine modes suffice: equal heights force `a_3 = -a_1`, and the
    /// two curvature conditions then fix
    /// `a_1 = (w1 - w0)/(64 pi^2)`, `a_2 = (w0 + w1)/(32 pi^2)`.
    pub fn two_maxima_equal_height(w0: f64, w1: f64) -> Self {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let a1 = (w1 - w0) / (64.0 * pi2);
        let a2 = (w0 + w1) / (32.0 * pi2);
        Self::cosine_series(&[a1, a2, -a1])
    }

    /// Equal-depth double well with minima at `x = 0` and `x = 1/2` of
    /// curvatures `V'' = +w0` and `+w1` (the negation of
    /// [`Self::two_maxima_equal_height`]).
    pub fn double_well_equal_depth(w0: f64, w1: f64) -> Self {
        let pi2 = std::f64::consts::PI * std::f64::consts::PI;
        let a1 = -(w1 - w0) / (64.0 * pi2);
        let a2 = -(w0 + w1) / (32.0 * pi2);
        Self::cosine_series(&[a1, a2, -a1])
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn modes(&self) -> &[Mode] {
        &self.modes
    }

    fn phase(&self, mode: &Mode, x: &[f64]) -> f64 {
        let mut t = 0.0;
        for (ki, xi) in mode.k.iter().zip(x) {
            t += *ki as f64 * xi;
        }
        TAU * t
    }

    /// `V(x)`.
    pub fn value(&self, x: &[f64]) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let th = self.phase(m, x);
                m.a * th.cos() + m.b * th.sin()
            })
            .sum()
    }

    /// Gradient `V'(x)` written into `out`.
    pub fn grad_into(&self, x: &[f64], out: &mut [f64]) {
        out[..self.d].fill(0.0);
        for m in &self.modes {
            let th = self.phase(m, x);
            let g = TAU * (-m.a * th.sin() + m.b * th.cos());
            for (o, &ki) in out.iter_mut().zip(&m.k) {
                *o += g * ki as f64;
            }
        }
    }

    pub fn grad(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        self.grad_into(x, &mut out);
        out
    }

    /// Hessian `V''(x)` as a dense `d x d` matrix.
    pub fn hess(&self, x: &[f64]) -> DMatrix<f64> {
        let mut h = DMatrix::zeros(self.d, self.d);
        for m in &self.modes {
            let th = self.phase(m, x);
            let g = TAU * TAU * (-m.a * th.cos() - m.b * th.sin());
            for i in 0..self.d {
                for j in 0..self.d {
                    h[(i, j)] += g * m.k[i] as f64 * m.k[j] as f64;
                }
            }
        }
        h
    }

    /// Third derivative contracted twice: `V'''(x)[u, u]` as a vector, i.e.
    /// the tensor `V'''_{ijl} u_j u_l` in index `i`.
    pub fn third_contract(&self, x: &[f64], u: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.d];
        for m in &self.modes {
            let th = self.phase(m, x);
            let g = TAU.powi(3) * (m.a * th.sin() - m.b * th.cos());
            let ku: f64 = m.k.iter().zip(u).map(|(&ki, &ui)| ki as f64 * ui).sum();
            for (o, &ki) in out.iter_mut().zip(&m.k) {
                *o += g * ki as f64 * ku * ku;
            }
        }
        out
    }

    /// Upper bound on `|V'(x)|_2` over the torus.
    pub fn grad_norm_bound(&self) -> f64 {
        self.modes
            .iter()
            .map(|m| {
                let kn = m.k.iter().map(|&ki| (ki * ki) as f64).sum::<f64>().sqrt();
                TAU * kn * (m.a.abs() + m.b.abs())
            })
            .sum()
    }

    /// Parse the external JSON form `{"d": .., "modes": [{"k": [..], "a": .., "b": ..}]}`.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: TrigPotential = serde_json::from_str(text)?;
        Self::new(raw.d, raw.modes)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("potential serializes")
    }
}

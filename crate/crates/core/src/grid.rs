//! Uniform periodic grids on the torus `T^d` and real functions on them.

use crate::error::CoreError;
use crate::Result;

/// Uniform grid on `[0,1)^d` with `m` nodes per dimension, spacing `h = 1/m`.
///
/// Node `i` of a 2-d grid has coordinates `((i / m) h, (i % m) h)`, so indices
/// enumerate nodes in row-major order; each point of the torus is covered by
/// exactly one node.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct TorusGrid {
    dim: usize,
    m: usize,
}

impl TorusGrid {
    pub fn new(dim: usize, m: usize) -> Result<Self> {
        if dim == 0 || dim > 2 {
            return Err(CoreError::InvalidArgument(format!(
                "grid dimension must be 1 or 2, got {dim}"
            )));
        }
        if m < 4 {
            return Err(CoreError::InvalidArgument(format!(
                "grid needs at least 4 nodes per dimension, got {m}"
            )));
        }
        Ok(Self { dim, m })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// Nodes per dimension.
    pub fn nodes_per_dim(&self) -> usize {
        self.m
    }

    /// Grid spacing `h = 1/m`.
    pub fn spacing(&self) -> f64 {
        1.0 / self.m as f64
    }

    /// Total number of nodes `m^d`.
    pub fn num_nodes(&self) -> usize {
        self.m.pow(self.dim as u32)
    }

    /// Cell volume `h^d`.
    pub fn cell_volume(&self) -> f64 {
        self.spacing().powi(self.dim as i32)
    }

    /// Coordinates of node `idx`, written into `out` (length `dim`).
    pub fn node_into(&self, idx: usize, out: &mut [f64]) {
        let h = self.spacing();
        match self.dim {
            1 => out[0] = idx as f64 * h,
            _ => {
                out[0] = (idx / self.m) as f64 * h;
                out[1] = (idx % self.m) as f64 * h;
            }
        }
    }

    /// Coordinates of node `idx` as a fresh vector.
    pub fn node(&self, idx: usize) -> Vec<f64> {
        let mut out = vec![0.0; self.dim];
        self.node_into(idx, &mut out);
        out
    }

    /// Index of the node nearest to `x` (coordinates reduced mod 1).
    pub fn nearest_node(&self, x: &[f64]) -> usize {
        let m = self.m as i64;
        let mut idx = 0usize;
        for &c in x.iter().take(self.dim) {
            let i = (c * self.m as f64).round() as i64;
            idx = idx * self.m + i.rem_euclid(m) as usize;
        }
        idx
    }

    /// Torus distance between two points (lifted coordinates accepted).
    pub fn torus_distance(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for k in 0..self.dim {
            let mut d = (x[k] - y[k]).rem_euclid(1.0);
            if d > 0.5 {
                d = 1.0 - d;
            }
            s += d * d;
        }
        s.sqrt()
    }
}

/// Real-valued function sampled at the nodes of a [`TorusGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    grid: TorusGrid,
    values: Vec<f64>,
}

impl GridFunction {
    pub fn new(grid: TorusGrid, values: Vec<f64>) -> Result<Self> {
        if values.len() != grid.num_nodes() {
            return Err(CoreError::InvalidArgument(format!(
                "grid function needs {} values, got {}",
                grid.num_nodes(),
                values.len()
            )));
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(CoreError::InvalidArgument(
                "grid function values must be finite".into(),
            ));
        }
        Ok(Self { grid, values })
    }

    pub fn zeros(grid: TorusGrid) -> Self {
        Self {
            grid,
            values: vec![0.0; grid.num_nodes()],
        }
    }

    /// Sample `f` at every node.
    pub fn from_fn(grid: TorusGrid, mut f: impl FnMut(&[f64]) -> f64) -> Self {
        let mut buf = vec![0.0; grid.dim()];
        let values = (0..grid.num_nodes())
            .map(|i| {
                grid.node_into(i, &mut buf);
                f(&buf)
            })
            .collect();
        Self { grid, values }
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn values_mut(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn min(&self) -> f64 {
        self.values.iter().copied().fold(f64::INFINITY, f64::min)
    }

    pub fn max(&self) -> f64 {
        self.values
            .iter()
            .copied()
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Shift so that the minimum value is exactly zero.
    pub fn normalize_min_zero(&mut self) {
        let m = self.min();
        for v in &mut self.values {
            *v -= m;
        }
    }

    /// Sup-norm distance to another function on the same grid.
    pub fn sup_distance(&self, other: &GridFunction) -> f64 {
        self.values
            .iter()
            .zip(&other.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }

    /// Multilinear periodic interpolation at an arbitrary point
    /// (lifted coordinates accepted; reduction mod 1 happens here).
    pub fn eval(&self, x: &[f64]) -> f64 {
        let m = self.grid.m;
        let mf = m as f64;
        match self.grid.dim {
            1 => {
                let t = (x[0].rem_euclid(1.0)) * mf;
                let i0 = t.floor() as usize % m;
                let i1 = (i0 + 1) % m;
                let w = t - t.floor();
                self.values[i0] * (1.0 - w) + self.values[i1] * w
            }
            _ => {
                let t0 = (x[0].rem_euclid(1.0)) * mf;
                let t1 = (x[1].rem_euclid(1.0)) * mf;
                let i0 = t0.floor() as usize % m;
                let j0 = t1.floor() as usize % m;
                let i1 = (i0 + 1) % m;
                let j1 = (j0 + 1) % m;
                let (u, v) = (t0 - t0.floor(), t1 - t1.floor());
                let at = |i: usize, j: usize| self.values[i * m + j];
                at(i0, j0) * (1.0 - u) * (1.0 - v)
                    + at(i1, j0) * u * (1.0 - v)
                    + at(i0, j1) * (1.0 - u) * v
                    + at(i1, j1) * u * v
            }
        }
    }

    /// Gradient of the multilinear interpolant at `x` (piecewise constant,
    /// one-sided at cell boundaries), written into `out`.
    pub fn eval_grad(&self, x: &[f64], out: &mut [f64]) {
        let m = self.grid.m;
        let mf = m as f64;
        match self.grid.dim {
            1 => {
                let t = (x[0].rem_euclid(1.0)) * mf;
                let i0 = t.floor() as usize % m;
                let i1 = (i0 + 1) % m;
                out[0] = (self.values[i1] - self.values[i0]) * mf;
            }
            _ => {
                let t0 = (x[0].rem_euclid(1.0)) * mf;
                let t1 = (x[1].rem_euclid(1.0)) * mf;
                let i0 = t0.floor() as usize % m;
                let j0 = t1.floor() as usize % m;
                let i1 = (i0 + 1) % m;
                let j1 = (j0 + 1) % m;
                let (u, v) = (t0 - t0.floor(), t1 - t1.floor());
                let at = |i: usize, j: usize| self.values[i * m + j];
                out[0] = ((at(i1, j0) - at(i0, j0)) * (1.0 - v) + (at(i1, j1) - at(i0, j1)) * v)
                    * mf;
                out[1] =
                    ((at(i0, j1) - at(i0, j0)) * (1.0 - u) + (at(i1, j1) - at(i1, j0)) * u) * mf;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_tiny_grids() {
        assert!(TorusGrid::new(1, 3).is_err());
        assert!(TorusGrid::new(3, 8).is_err());
        assert!(TorusGrid::new(1, 4).is_ok());
    }

    #[test]
    fn nodes_cover_unit_cell_once() {
        let g = TorusGrid::new(2, 4).unwrap();
        let mut seen = std::collections::BTreeSet::new();
        for i in 0..g.num_nodes() {
            let p = g.node(i);
            assert!(p.iter().all(|&c| (0.0..1.0).contains(&c)));
            seen.insert(((p[0] * 4.0) as i64, (p[1] * 4.0) as i64));
        }
        assert_eq!(seen.len(), 16);
    }

    #[test]
    fn interpolation_reproduces_nodes_and_wraps() {
        let g = TorusGrid::new(1, 8).unwrap();
        let f = GridFunction::from_fn(g, |x| (2.0 * std::f64::consts::PI * x[0]).sin());
        for i in 0..8 {
            let x = g.node(i);
            assert!((f.eval(&x) - f.values()[i]).abs() < 1e-15);
            // periodic lift
            assert!((f.eval(&[x[0] + 3.0]) - f.values()[i]).abs() < 1e-12);
        }
        // linear between nodes
        let mid = (f.values()[2] + f.values()[3]) / 2.0;
        assert!((f.eval(&[(2.5) / 8.0]) - mid).abs() < 1e-14);
    }

    #[test]
    fn nearest_node_wraps() {
        let g = TorusGrid::new(1, 8).unwrap();
        assert_eq!(g.nearest_node(&[0.999]), 0);
        assert_eq!(g.nearest_node(&[-0.124]), 7);
        let g2 = TorusGrid::new(2, 8).unwrap();
        assert_eq!(g2.nearest_node(&[0.25, 0.5]), 2 * 8 + 4);
    }
}

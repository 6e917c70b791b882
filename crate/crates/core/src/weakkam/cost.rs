//! One-step cost matrix on the grid, with the lattice-translate minimum
//! folded in.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::grid::TorusGrid;
use crate::model::TwoPointLagrangian;
use crate::Result;

/// `cost[from][to] = min_n L(x_from, x_to + n)` over lattice translates
/// `|n|_inf <= radius`, together with the minimizing translate.
///
/// Ties break to the first candidate in enumeration order: translates are
/// scanned lexicographically from `-radius` to `+radius`, so backpointer
/// paths are deterministic.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    grid: TorusGrid,
    radius: i64,
    cost: Vec<f64>,
    translate: Vec<[i8; 2]>,
}

impl CostMatrix {
    /// Default truncation radius: one cell beyond the largest displacement a
    /// minimizing step can take, `ceil(1 + |omega| + sup|V'|)`.
    pub fn default_radius(omega_norm: f64, grad_bound: f64) -> usize {
        (1.0 + omega_norm + grad_bound).ceil() as usize + 1
    }

    pub fn build<L: TwoPointLagrangian>(lag: &L, grid: TorusGrid, radius: usize) -> Result<Self> {
        if grid.dim() != lag.dim() {
            return Err(CoreError::InvalidArgument(
                "grid and lagrangian dimensions differ".into(),
            ));
        }
        if radius == 0 || radius > 120 {
            return Err(CoreError::InvalidArgument(format!(
                "translate radius {radius} out of range"
            )));
        }
        let nn = grid.num_nodes();
        let d = grid.dim();
        let r = radius as i64;
        let translates: Vec<[i64; 2]> = if d == 1 {
            (-r..=r).map(|n| [n, 0]).collect()
        } else {
            (-r..=r)
                .flat_map(|n0| (-r..=r).map(move |n1| [n0, n1]))
                .collect()
        };
        let mut cost = vec![0.0; nn * nn];
        let mut translate = vec![[0i8; 2]; nn * nn];
        cost.par_chunks_mut(nn)
            .zip(translate.par_chunks_mut(nn))
            .enumerate()
            .for_each(|(from, (crow, trow))| {
                let xf = grid.node(from);
                let mut xt = vec![0.0; d];
                let mut lifted = vec![0.0; d];
                for to in 0..nn {
                    grid.node_into(to, &mut xt);
                    let mut best = f64::INFINITY;
                    let mut best_t = [0i8; 2];
                    for t in &translates {
                        for k in 0..d {
                            lifted[k] = xt[k] + t[k] as f64;
                        }
                        let v = lag.value(&xf, &lifted);
                        if v < best {
                            best = v;
                            best_t = [t[0] as i8, t[1] as i8];
                        }
                    }
                    crow[to] = best;
                    trow[to] = best_t;
                }
            });
        Ok(Self {
            grid,
            radius: r,
            cost,
            translate,
        })
    }

    pub fn grid(&self) -> TorusGrid {
        self.grid
    }

    pub fn radius(&self) -> usize {
        self.radius as usize
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    #[inline]
    pub fn cost(&self, from: usize, to: usize) -> f64 {
        self.cost[from * self.grid.num_nodes() + to]
    }

    /// The minimizing lattice translate of the target for the pair.
    pub fn minimizing_translate(&self, from: usize, to: usize) -> [i64; 2] {
        let t = self.translate[from * self.grid.num_nodes() + to];
        [t[0] as i64, t[1] as i64]
    }

    /// Lifted displacement `x_to + n - x_from` of the minimizing step.
    pub fn step_displacement(&self, from: usize, to: usize, out: &mut [f64]) {
        let d = self.grid.dim();
        let mut xf = vec![0.0; d];
        let mut xt = vec![0.0; d];
        self.grid.node_into(from, &mut xf);
        self.grid.node_into(to, &mut xt);
        let n = self.minimizing_translate(from, to);
        for k in 0..d {
            out[k] = xt[k] + n[k] as f64 - xf[k];
        }
    }

    /// Backward Lax–Oleinik sweep without the critical constant:
    /// `(T u)(x_i) = min_j [ u_j + cost(j, i) ]`.
    pub fn lax_backward(&self, u: &[f64]) -> Vec<f64> {
        let nn = self.num_nodes();
        assert_eq!(u.len(), nn);
        (0..nn)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                for (j, uj) in u.iter().enumerate() {
                    let v = uj + self.cost[j * nn + i];
                    if v < best {
                        best = v;
                    }
                }
                best
            })
            .collect()
    }

    /// Backward sweep that also records the minimizing source node.
    pub fn lax_backward_argmin(&self, u: &[f64]) -> (Vec<f64>, Vec<u32>) {
        let nn = self.num_nodes();
        let rows: Vec<(f64, u32)> = (0..nn)
            .into_par_iter()
            .map(|i| {
                let mut best = f64::INFINITY;
                let mut arg = 0u32;
                for (j, uj) in u.iter().enumerate() {
                    let v = uj + self.cost[j * nn + i];
                    if v < best {
                        best = v;
                        arg = j as u32;
                    }
                }
                (best, arg)
            })
            .collect();
        (
            rows.iter().map(|r| r.0).collect(),
            rows.iter().map(|r| r.1).collect(),
        )
    }

    /// Forward Lax–Oleinik sweep without the critical constant:
    /// `(T u)(x_i) = max_j [ u_j - cost(i, j) ]`.
    pub fn lax_forward(&self, u: &[f64]) -> Vec<f64> {
        let nn = self.num_nodes();
        assert_eq!(u.len(), nn);
        (0..nn)
            .into_par_iter()
            .map(|i| {
                let row = &self.cost[i * nn..(i + 1) * nn];
                let mut best = f64::NEG_INFINITY;
                for (uj, c) in u.iter().zip(row) {
                    let v = uj - c;
                    if v > best {
                        best = v;
                    }
                }
                best
            })
            .collect()
    }
}

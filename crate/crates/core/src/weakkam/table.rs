//! Finite-horizon value functions `h_n` by dynamic programming, with
//! backpointers for path reconstruction and Newton refinement of the
//! reconstructed paths on the lifted Euler–Lagrange system.

use rayon::prelude::*;

use crate::error::CoreError;
use crate::hessian::{assemble_hessian, block_determinant};
use crate::model::{action_of_path, Orbit, TwoPointLagrangian};
use crate::weakkam::CostMatrix;
use crate::Result;

/// All horizons `h_1, ..., h_n` over grid-node pairs, plus the argmin
/// midpoints needed to rebuild optimal paths.
#[derive(Debug, Clone)]
pub struct ValueTable {
    cost: CostMatrix,
    horizon: usize,
    /// `tables[k-1][x * nn + z] = h_k(x, z)`.
    tables: Vec<Vec<f64>>,
    /// `backptr[k-2][x * nn + z]` = minimizing `y` in
    /// `h_k(x,z) = min_y h_{k-1}(x,y) + h_1(y,z)`, for `k >= 2`.
    backptr: Vec<Vec<u32>>,
}

impl ValueTable {
    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn cost(&self) -> &CostMatrix {
        &self.cost
    }

    /// `h_k(from, to)` for `1 <= k <= horizon`.
    pub fn value(&self, k: usize, from: usize, to: usize) -> f64 {
        self.tables[k - 1][from * self.cost.num_nodes() + to]
    }

    /// Mass functional `beta^d h^{2d} sum_{x,z} exp(-beta (h_k(x,z) + k c))`
    /// with the critical value `c` absorbing the per-step drift of the raw
    /// action, the grid transcription of the bounded-density requirement on
    /// near-minimizing endpoint pairs. Subexponential growth in `k` is the
    /// healthy regime.
    pub fn gaussian_mass(&self, k: usize, beta: f64, c: f64) -> f64 {
        let grid = self.cost.grid();
        let d = grid.dim() as i32;
        let hv = grid.cell_volume(); // h^d
        let table = &self.tables[k - 1];
        let scale = beta.powi(d) * hv * hv;
        scale
            * table
                .iter()
                .map(|&v| (-beta * (v + k as f64 * c)).exp())
                .sum::<f64>()
    }

    /// DP-backtracked lifted node path from `from` to `to` at the table
    /// horizon.
    pub fn dp_path(&self, from: usize, to: usize) -> Result<Orbit> {
        let nn = self.cost.num_nodes();
        if from >= nn || to >= nn {
            return Err(CoreError::InvalidArgument("node index out of range".into()));
        }
        // recover interior nodes from the composition backpointers
        let mut nodes = vec![0usize; self.horizon + 1];
        nodes[0] = from;
        nodes[self.horizon] = to;
        let mut z = to;
        for k in (2..=self.horizon).rev() {
            let y = self.backptr[k - 2][from * nn + z] as usize;
            nodes[k - 1] = y;
            z = y;
        }
        // lift: accumulate minimizing step displacements
        let d = self.cost.grid().dim();
        let mut pts = Vec::with_capacity((self.horizon + 1) * d);
        let mut cur = self.cost.grid().node(from);
        pts.extend_from_slice(&cur);
        let mut disp = vec![0.0; d];
        for k in 0..self.horizon {
            self.cost.step_displacement(nodes[k], nodes[k + 1], &mut disp);
            for i in 0..d {
                cur[i] += disp[i];
            }
            pts.extend_from_slice(&cur);
        }
        Ok(Orbit::from_points(
            d,
            pts.chunks(d).map(|c| c.to_vec()).collect(),
        )?)
    }
}

/// Build `h_1, ..., h_n` by min-plus composition `h_{k+1} = h_k (*) h_1`.
pub fn finite_action_table(cost: &CostMatrix, n: usize) -> Result<ValueTable> {
    if n < 1 {
        return Err(CoreError::InvalidArgument(
            "table horizon must be at least 1".into(),
        ));
    }
    let nn = cost.num_nodes();
    let h1: Vec<f64> = (0..nn * nn)
        .map(|idx| cost.cost(idx / nn, idx % nn))
        .collect();
    let mut tables = vec![h1];
    let mut backptr = Vec::new();
    for _ in 2..=n {
        let prev = tables.last().unwrap();
        let mut next = vec![0.0f64; nn * nn];
        let mut bp = vec![0u32; nn * nn];
        next.par_chunks_mut(nn)
            .zip(bp.par_chunks_mut(nn))
            .enumerate()
            .for_each(|(x, (nrow, brow))| {
                let prow = &prev[x * nn..(x + 1) * nn];
                for z in 0..nn {
                    let mut best = f64::INFINITY;
                    let mut arg = 0u32;
                    for (y, py) in prow.iter().enumerate() {
                        let v = py + cost.cost(y, z);
                        if v < best {
                            best = v;
                            arg = y as u32;
                        }
                    }
                    nrow[z] = best;
                    brow[z] = arg;
                }
            });
        tables.push(next);
        backptr.push(bp);
    }
    Ok(ValueTable {
        cost: cost.clone(),
        horizon: n,
        tables,
        backptr,
    })
}

/// A reconstructed (optionally Newton-refined) fixed-endpoint minimizer.
#[derive(Debug, Clone)]
pub struct MinimizerPath {
    pub orbit: Orbit,
    pub dp_action: f64,
    pub action: f64,
    pub refined: bool,
    /// Set when refinement was requested but fell back to the DP path.
    pub warning: Option<String>,
}

/// Newton iteration on the interior Euler–Lagrange system
/// `d2 L(g_{i-1}, g_i) + d1 L(g_i, g_{i+1}) = 0`, endpoints fixed.
/// The linear solves reuse the block-tridiagonal forward elimination.
pub fn newton_refine<L: TwoPointLagrangian>(
    lag: &L,
    orbit: &Orbit,
    tol: f64,
    max_iters: usize,
) -> Result<Orbit> {
    let d = lag.dim();
    let p = orbit.len();
    if p < 3 {
        return Err(CoreError::InvalidArgument(
            "refinement needs interior points".into(),
        ));
    }
    let mut cur = orbit.clone();
    let mut buf1 = vec![0.0; d];
    let mut buf2 = vec![0.0; d];
    let mut last_res = f64::INFINITY;
    for it in 0..max_iters {
        // residual G_i = d2 L(g_{i-1}, g_i) + d1 L(g_i, g_{i+1})
        let mut g = vec![0.0; (p - 2) * d];
        let mut res = 0.0f64;
        for i in 1..p - 1 {
            lag.d2_into(cur.point(i - 1), cur.point(i), &mut buf1);
            lag.d1_into(cur.point(i), cur.point(i + 1), &mut buf2);
            for k in 0..d {
                let v = buf1[k] + buf2[k];
                g[(i - 1) * d + k] = v;
                res = res.max(v.abs());
            }
        }
        if res <= tol {
            return Ok(cur);
        }
        if res > 4.0 * last_res && it > 2 {
            return Err(CoreError::NewtonDivergence {
                iterations: it,
                residual: res,
            });
        }
        last_res = last_res.min(res);
        let hess = assemble_hessian(lag, &cur)?;
        let fact = hess.factorize().map_err(|_| {
            CoreError::DegenerateHessian("singular Hessian during Newton refinement".into())
        })?;
        let delta = fact.solve(&g);
        // cap the step to stay in the basin
        let step_max = delta.iter().fold(0.0f64, |m, &v| m.max(v.abs()));
        let scale = if step_max > 0.5 { 0.5 / step_max } else { 1.0 };
        for i in 1..p - 1 {
            for k in 0..d {
                cur.point_mut(i)[k] -= scale * delta[(i - 1) * d + k];
            }
        }
    }
    let res = cur.max_el_residual(lag);
    if res <= tol {
        Ok(cur)
    } else {
        Err(CoreError::NewtonDivergence {
            iterations: max_iters,
            residual: res,
        })
    }
}

/// DP-backtracked minimizer between two grid nodes, Newton-refined to the
/// interior Euler–Lagrange system when `refine` is set. Newton divergence
/// falls back to the unrefined path and reports it in `warning`.
pub fn minimizer_path<L: TwoPointLagrangian>(
    table: &ValueTable,
    lag: &L,
    from: usize,
    to: usize,
    refine: bool,
) -> Result<MinimizerPath> {
    let orbit = table.dp_path(from, to)?;
    let dp_action = action_of_path(lag, &orbit);
    if !refine {
        return Ok(MinimizerPath {
            orbit,
            dp_action,
            action: dp_action,
            refined: false,
            warning: None,
        });
    }
    match newton_refine(lag, &orbit, 1e-12, 60) {
        Ok(refined) => {
            let action = action_of_path(lag, &refined);
            // a refined critical path with larger action than the DP path is
            // a saddle, not the minimizer; keep the DP path in that case
            if action <= dp_action + 1e-12 {
                // nondegeneracy report
                let det = block_determinant(&assemble_hessian(lag, &refined)?);
                let warning = det
                    .conjugate_point
                    .then(|| "degenerate Hessian at the refined minimizer".to_string());
                Ok(MinimizerPath {
                    orbit: refined,
                    dp_action,
                    action,
                    refined: true,
                    warning,
                })
            } else {
                Ok(MinimizerPath {
                    orbit,
                    dp_action,
                    action: dp_action,
                    refined: false,
                    warning: Some("Newton converged to a higher-action critical point".into()),
                })
            }
        }
        Err(e) => Ok(MinimizerPath {
            orbit,
            dp_action,
            action: dp_action,
            refined: false,
            warning: Some(format!("Newton refinement failed: {e}")),
        }),
    }
}

//! Torus Schrödinger ground states by finite differences.
//!
//! `H = -hbar^2 Delta / 2 + V` discretized with the second-order periodic
//! stencil. Finite differences keep the off-diagonal entries nonpositive
//! (an M-matrix structure), so the discrete ground state inherits strict
//! positivity from Perron theory. The mesh must resolve the semiclassical
//! wave-packet width: `hbar / h >= 8` is enforced.

use crate::error::CoreError;
use crate::grid::{GridFunction, TorusGrid};
use crate::linalg::{cg_solve, cyclic_tridiag_solve, dot, lanczos_smallest, norm, normalize};
use crate::model::TrigPotential;
use crate::Result;

/// Ground eigenpair of the discretized `H = -hbar^2 Delta/2 + V`.
#[derive(Debug, Clone)]
pub struct SchrodingerResult {
    pub hbar: f64,
    /// Ground energy (discrete Rayleigh quotient at the converged vector).
    pub energy: f64,
    /// Positive ground state, normalized so `sum psi^2 h^d = 1`.
    pub psi: GridFunction,
    /// `|H psi - E psi|_2 / |psi|_2`, relative to `op_scale`.
    pub residual: f64,
    /// Stencil scale `2 d hbar^2/h^2 + osc(V)` the residual is measured
    /// against.
    pub op_scale: f64,
}

impl SchrodingerResult {
    /// Probability density values `psi^2` (they integrate to one with the
    /// cell volume weight).
    pub fn density(&self) -> GridFunction {
        let vals = self.psi.values().iter().map(|p| p * p).collect();
        GridFunction::new(self.psi.grid(), vals).expect("finite")
    }
}

/// Smallest power-of-two node count satisfying the mesh guard for `hbar`.
pub fn suggested_grid_nodes(hbar: f64) -> usize {
    (((8.0 / hbar).ceil() as usize).max(64)).next_power_of_two()
}

struct Stencil {
    grid: TorusGrid,
    hbar: f64,
    pot: Vec<f64>,
}

impl Stencil {
    fn new(potential: &TrigPotential, hbar: f64, grid: TorusGrid) -> Self {
        let pot = GridFunction::from_fn(grid, |x| potential.value(x))
            .values()
            .to_vec();
        Stencil { grid, hbar, pot }
    }

    fn kin(&self) -> f64 {
        let h = self.grid.spacing();
        self.hbar * self.hbar / (2.0 * h * h)
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let m = self.grid.nodes_per_dim();
        let kin = self.kin();
        match self.grid.dim() {
            1 => {
                for i in 0..m {
                    let left = v[(i + m - 1) % m];
                    let right = v[(i + 1) % m];
                    out[i] = kin * (2.0 * v[i] - left - right) + self.pot[i] * v[i];
                }
            }
            _ => {
                for i in 0..m {
                    for j in 0..m {
                        let idx = i * m + j;
                        let up = v[((i + m - 1) % m) * m + j];
                        let down = v[((i + 1) % m) * m + j];
                        let left = v[i * m + (j + m - 1) % m];
                        let right = v[i * m + (j + 1) % m];
                        out[idx] = kin * (4.0 * v[idx] - up - down - left - right)
                            + self.pot[idx] * v[idx];
                    }
                }
            }
        }
    }

    fn rayleigh(&self, v: &[f64], scratch: &mut [f64]) -> f64 {
        self.apply(v, scratch);
        dot(v, scratch) / dot(v, v)
    }

    fn residual(&self, v: &[f64], e: f64, scratch: &mut [f64]) -> f64 {
        self.apply(v, scratch);
        let mut s = 0.0;
        for (hv, vi) in scratch.iter().zip(v) {
            let r = hv - e * vi;
            s += r * r;
        }
        s.sqrt() / norm(v)
    }

    fn op_scale(&self) -> f64 {
        let vmin = self.pot.iter().cloned().fold(f64::INFINITY, f64::min);
        let vmax = self.pot.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        2.0 * self.grid.dim() as f64 * 2.0 * self.kin() + (vmax - vmin) + 1.0
    }
}

const RESIDUAL_REL_TOL: f64 = 1e-9;

/// Smallest eigenpair by Lanczos warmup plus shifted inverse iteration
/// (cyclic tridiagonal solves in 1-d, conjugate-gradient solves in 2-d).
pub fn schrodinger_ground(
    potential: &TrigPotential,
    hbar: f64,
    grid: TorusGrid,
) -> Result<SchrodingerResult> {
    if !(hbar > 0.0) {
        return Err(CoreError::InvalidArgument("hbar must be positive".into()));
    }
    if potential.dim() != grid.dim() {
        return Err(CoreError::InvalidArgument(
            "potential and grid dimensions differ".into(),
        ));
    }
    if hbar / grid.spacing() < 8.0 {
        return Err(CoreError::InvalidArgument(format!(
            "mesh guard violated: hbar/h = {:.2} < 8 (need at least {} nodes)",
            hbar / grid.spacing(),
            suggested_grid_nodes(hbar)
        )));
    }
    let st = Stencil::new(potential, hbar, grid);
    let n = grid.num_nodes();
    let op_scale = st.op_scale();
    let tol = RESIDUAL_REL_TOL * op_scale;

    let warmup_basis = if grid.dim() == 1 { 200 } else { 300 };
    let (mut e, mut v) = lanczos_smallest(n, |x, out| st.apply(x, out), warmup_basis);
    let mut scratch = vec![0.0; n];

    match grid.dim() {
        1 => {
            // Rayleigh-quotient iteration with cyclic tridiagonal solves
            let m = grid.nodes_per_dim();
            let kin = st.kin();
            let off = vec![-kin; m];
            for _ in 0..60 {
                let res = st.residual(&v, e, &mut scratch);
                if res <= tol {
                    break;
                }
                let mut shift = e;
                let mut solved = None;
                for _ in 0..4 {
                    let diag: Vec<f64> =
                        (0..m).map(|i| 2.0 * kin + st.pot[i] - shift).collect();
                    match cyclic_tridiag_solve(&diag, &off, &v) {
                        Ok(w) => {
                            solved = Some(w);
                            break;
                        }
                        Err(_) => shift += 1e-11 * op_scale,
                    }
                }
                let mut w = solved.ok_or(CoreError::NonConvergence {
                    what: "Schrödinger inverse iteration (singular shift)",
                    iterations: 60,
                    residual: res,
                })?;
                normalize(&mut w);
                v = w;
                e = st.rayleigh(&v, &mut scratch);
            }
        }
        _ => {
            // fixed safely-below shift keeps H - sigma positive definite
            let res0 = st.residual(&v, e, &mut scratch);
            let delta = (4.0 * res0).max(1e-7 * op_scale);
            let sigma = e - delta;
            for _ in 0..120 {
                let res = st.residual(&v, e, &mut scratch);
                if res <= tol {
                    break;
                }
                let mut w = cg_solve(
                    n,
                    |x, out| {
                        st.apply(x, out);
                        for (o, xi) in out.iter_mut().zip(x) {
                            *o -= sigma * xi;
                        }
                    },
                    &v,
                    1e-12,
                    20_000,
                );
                normalize(&mut w);
                v = w;
                e = st.rayleigh(&v, &mut scratch);
            }
        }
    }

    let residual = st.residual(&v, e, &mut scratch) / op_scale;
    if residual > RESIDUAL_REL_TOL {
        return Err(CoreError::NonConvergence {
            what: "Schrödinger ground-state iteration",
            iterations: 120,
            residual,
        });
    }
    // orient positive and check strict positivity
    let s: f64 = v.iter().sum();
    if s < 0.0 {
        for x in &mut v {
            *x = -*x;
        }
    }
    if !v.iter().all(|&x| x > 0.0) {
        return Err(CoreError::InvalidArgument(
            "ground state lost strict positivity (mesh too coarse for this hbar?)".into(),
        ));
    }
    // L^2 normalization with the cell volume weight
    let hv = grid.cell_volume();
    let nrm = (v.iter().map(|x| x * x).sum::<f64>() * hv).sqrt();
    for x in &mut v {
        *x /= nrm;
    }
    Ok(SchrodingerResult {
        hbar,
        energy: e,
        psi: GridFunction::new(grid, v)?,
        residual,
        op_scale,
    })
}

/// A well for the concentration bookkeeping: center on the torus and the
/// radius of the mass window.
#[derive(Debug, Clone)]
pub struct Well {
    pub center: Vec<f64>,
    pub radius: f64,
}

impl Well {
    /// Three Gaussian widths of the harmonic ground state in a well of
    /// curvature `w`: `3 sqrt(hbar / sqrt(w))`.
    pub fn default_radius(hbar: f64, curvature: f64) -> f64 {
        3.0 * (hbar / curvature.sqrt()).sqrt()
    }
}

/// Per-well probability masses of the ground state across an `hbar` sweep.
#[derive(Debug, Clone)]
pub struct WellMassRow {
    pub hbar: f64,
    pub energy: f64,
    /// One mass per well, in input order.
    pub masses: Vec<f64>,
}

/// Ground-state mass inside each well across descending `hbar`.
///
/// Wells must be pairwise disjoint on the torus; masses are reported per
/// `hbar` and must sum to at most one.
pub fn concentration_experiment(
    potential: &TrigPotential,
    wells: &[Well],
    hbar_list: &[f64],
    m: usize,
) -> Result<Vec<WellMassRow>> {
    if wells.is_empty() || hbar_list.is_empty() {
        return Err(CoreError::InvalidArgument(
            "need at least one well and one hbar".into(),
        ));
    }
    let grid = TorusGrid::new(potential.dim(), m)?;
    for (i, a) in wells.iter().enumerate() {
        for b in wells.iter().skip(i + 1) {
            let dist = grid.torus_distance(&a.center, &b.center);
            if dist <= a.radius + b.radius {
                return Err(CoreError::InvalidArgument(format!(
                    "wells overlap: centers {:?} and {:?} at distance {dist:.4}",
                    a.center, b.center
                )));
            }
        }
    }
    let mut rows = Vec::with_capacity(hbar_list.len());
    for &hbar in hbar_list {
        let ground = schrodinger_ground(potential, hbar, grid)?;
        let density = ground.density();
        let hv = grid.cell_volume();
        let mut masses = vec![0.0; wells.len()];
        let mut node = vec![0.0; grid.dim()];
        for idx in 0..grid.num_nodes() {
            grid.node_into(idx, &mut node);
            for (w, well) in wells.iter().enumerate() {
                if grid.torus_distance(&node, &well.center) <= well.radius {
                    masses[w] += density.values()[idx] * hv;
                }
            }
        }
        let total: f64 = masses.iter().sum();
        if total > 1.0 + 1e-9 {
            return Err(CoreError::InvalidArgument(format!(
                "well masses sum to {total} > 1"
            )));
        }
        rows.push(WellMassRow {
            hbar,
            energy: ground.energy,
            masses,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::TAU;

    #[test]
    fn flat_ground_state_is_constant_with_zero_energy() {
        let v = TrigPotential::zero(1);
        let grid = TorusGrid::new(1, 64).unwrap();
        let g = schrodinger_ground(&v, 1.0, grid).unwrap();
        assert!(g.energy.abs() < 1e-10);
        let first = g.psi.values()[0];
        for &p in g.psi.values() {
            assert!((p - first).abs() < 1e-8);
        }
        // normalization
        let mass: f64 = g.psi.values().iter().map(|p| p * p).sum::<f64>() / 64.0;
        assert!((mass - 1.0).abs() < 1e-10);
    }

    #[test]
    fn mesh_guard_rejects_coarse_grids() {
        let v = TrigPotential::zero(1);
        let grid = TorusGrid::new(1, 64).unwrap();
        assert!(schrodinger_ground(&v, 0.01, grid).is_err());
        assert_eq!(suggested_grid_nodes(0.01), 1024);
    }

    #[test]
    fn harmonic_expansion_of_the_ground_energy() {
        // single nondegenerate minimum at x = 1/2 with V''(1/2) = w:
        // V(x) = a (1 + cos 2 pi x), a = w / (2 pi)^2, min value 0
        let w = 1.0f64;
        let a = w / (TAU * TAU);
        let v = TrigPotential::cosine_series(&[a]);
        assert!((v.hess(&[0.5])[(0, 0)] - w).abs() < 1e-14);
        let vmin = v.value(&[0.5]);
        let mut errs = Vec::new();
        for &hbar in &[0.05f64, 0.02] {
            let m = suggested_grid_nodes(hbar).max(512);
            let grid = TorusGrid::new(1, m).unwrap();
            let g = schrodinger_ground(&v, hbar, grid).unwrap();
            let harmonic = vmin + hbar * w.sqrt() / 2.0;
            errs.push((g.energy - harmonic).abs());
        }
        // O(hbar^2) error: ratio for 0.05 / 0.02 should be near 6.25
        let ratio = errs[0] / errs[1];
        assert!(
            (3.0..12.0).contains(&ratio),
            "expansion error ratio {ratio}, errors {errs:?}"
        );
    }

    #[test]
    fn even_potential_gives_even_state() {
        let v = TrigPotential::cosine_series(&[0.02]);
        let grid = TorusGrid::new(1, 256).unwrap();
        let g = schrodinger_ground(&v, 0.05, grid).unwrap();
        let p = g.psi.values();
        for i in 1..128 {
            assert!((p[i] - p[256 - i]).abs() < 1e-8, "asymmetric at {i}");
        }
    }

    #[test]
    fn energy_is_exactly_linear_in_constant_shifts() {
        let base = TrigPotential::cosine_series(&[0.02, -0.01]);
        let shift = 0.37;
        let shifted = {
            let mut modes = base.modes().to_vec();
            modes.push(crate::model::Mode {
                k: vec![0],
                a: shift,
                b: 0.0,
            });
            TrigPotential::new(1, modes).unwrap()
        };
        let grid = TorusGrid::new(1, 256).unwrap();
        let e0 = schrodinger_ground(&base, 0.05, grid).unwrap().energy;
        let e1 = schrodinger_ground(&shifted, 0.05, grid).unwrap().energy;
        assert!(((e1 - e0) - shift).abs() < 1e-10);
    }

    #[test]
    fn symmetric_double_well_splits_mass_evenly() {
        // V = a cos(4 pi x): equal minima at 1/4 and 3/4, deep enough that
        // the ground state is strongly localized and the two windows catch
        // half the mass each to far better than 1e-6
        let v = TrigPotential::cosine_series(&[0.0, 0.2]);
        let wells = [
            Well {
                center: vec![0.25],
                radius: 0.24,
            },
            Well {
                center: vec![0.75],
                radius: 0.24,
            },
        ];
        let rows = concentration_experiment(&v, &wells, &[0.02], 512).unwrap();
        let m = &rows[0].masses;
        assert!((m[0] - 0.5).abs() < 1e-6, "masses {m:?}");
        assert!((m[1] - 0.5).abs() < 1e-6);
    }

    #[test]
    fn swapping_well_order_swaps_the_mass_profile() {
        let v = TrigPotential::double_well_equal_depth(1.0, 4.0);
        let wells = [
            Well {
                center: vec![0.0],
                radius: 0.2,
            },
            Well {
                center: vec![0.5],
                radius: 0.2,
            },
        ];
        let swapped = [wells[1].clone(), wells[0].clone()];
        let a = concentration_experiment(&v, &wells, &[0.05], 512).unwrap();
        let b = concentration_experiment(&v, &swapped, &[0.05], 512).unwrap();
        assert!((a[0].masses[0] - b[0].masses[1]).abs() < 1e-12);
        assert!((a[0].masses[1] - b[0].masses[0]).abs() < 1e-12);
    }

    #[test]
    fn rejects_overlapping_wells() {
        let v = TrigPotential::double_well_equal_depth(1.0, 4.0);
        let wells = [
            Well {
                center: vec![0.0],
                radius: 0.3,
            },
            Well {
                center: vec![0.5],
                radius: 0.3,
            },
        ];
        assert!(concentration_experiment(&v, &wells, &[0.05], 512).is_err());
    }

    #[test]
    fn two_dimensional_ground_state_harmonic_energy() {
        // separable wells: V = a(2 + cos 2 pi x + cos 2 pi y), minimum at
        // (1/2, 1/2) with curvature w in each axis; w large enough that the
        // ground energy sits well below the barrier top
        let w = 25.0f64;
        let a = w / (TAU * TAU);
        let v = TrigPotential::new(
            2,
            vec![
                crate::model::Mode {
                    k: vec![1, 0],
                    a,
                    b: 0.0,
                },
                crate::model::Mode {
                    k: vec![0, 1],
                    a,
                    b: 0.0,
                },
                crate::model::Mode {
                    k: vec![0, 0],
                    a: 2.0 * a,
                    b: 0.0,
                },
            ],
        )
        .unwrap();
        let grid = TorusGrid::new(2, 96).unwrap();
        let hbar = 0.1;
        let g = schrodinger_ground(&v, hbar, grid).unwrap();
        let harmonic = hbar * w.sqrt(); // two axes, each hbar sqrt(w)/2
        assert!(
            (g.energy - harmonic).abs() < 0.1 * harmonic,
            "E = {}, harmonic {}",
            g.energy,
            harmonic
        );
        assert!(g.psi.values().iter().all(|&p| p > 0.0));
    }
}

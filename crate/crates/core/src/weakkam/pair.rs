//! Conjugate weak-KAM pairs, the Mather-set indicator, and the
//! large-deviation action deficit.

use crate::error::CoreError;
use crate::grid::GridFunction;
use crate::model::{action_of_path, Orbit, TwoPointLagrangian};
use crate::weakkam::{critical_value, CostMatrix};
use crate::Result;

/// A conjugate pair of discrete weak-KAM solutions.
///
/// `u_minus` is a fixed point of the backward operator `u -> T^- u + c`,
/// `u_plus` of the forward operator `u -> T^+ u - c`; after normalization
/// `u_minus - u_plus >= 0` with zeros on the Mather set.
#[derive(Debug, Clone)]
pub struct WeakKamPair {
    pub u_minus: GridFunction,
    pub u_plus: GridFunction,
    pub c: f64,
    pub residual_minus: f64,
    pub residual_plus: f64,
}

impl WeakKamPair {
    /// Pointwise gap `u_minus - u_plus` (nonnegative after normalization).
    pub fn gap(&self) -> GridFunction {
        let values = self
            .u_minus
            .values()
            .iter()
            .zip(self.u_plus.values())
            .map(|(a, b)| a - b)
            .collect();
        GridFunction::new(self.u_minus.grid(), values).expect("same grid")
    }
}

const FIXED_POINT_TOL: f64 = 1e-9;
const MAX_VALUE_ITERS: usize = 30_000;

/// Solve for the conjugate pair: `u_minus` by backward value iteration from
/// zero, `u_plus` as the limit of forward iterates started from `u_minus`.
/// The cost matrix fixes the lagrangian and the grid.
pub fn weak_kam_pair(cost: &CostMatrix) -> Result<WeakKamPair> {
    let c = critical_value(cost)?.c;
    let nn = cost.num_nodes();

    let mut u = vec![0.0; nn];
    let mut residual_minus = f64::INFINITY;
    for _ in 0..MAX_VALUE_ITERS {
        let tu: Vec<f64> = cost.lax_backward(&u).iter().map(|v| v + c).collect();
        residual_minus = u
            .iter()
            .zip(&tu)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        u = tu;
        // keep iterates anchored
        let m = u.iter().cloned().fold(f64::INFINITY, f64::min);
        for v in &mut u {
            *v -= m;
        }
        if residual_minus <= FIXED_POINT_TOL {
            break;
        }
    }
    if residual_minus > FIXED_POINT_TOL * 10.0 {
        return Err(CoreError::NonConvergence {
            what: "backward weak-KAM value iteration",
            iterations: MAX_VALUE_ITERS,
            residual: residual_minus,
        });
    }

    let mut v = u.clone();
    let mut residual_plus = f64::INFINITY;
    for _ in 0..MAX_VALUE_ITERS {
        let tv: Vec<f64> = cost.lax_forward(&v).iter().map(|x| x - c).collect();
        residual_plus = v
            .iter()
            .zip(&tv)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        v = tv;
        if residual_plus <= FIXED_POINT_TOL {
            break;
        }
    }
    if residual_plus > FIXED_POINT_TOL * 10.0 {
        return Err(CoreError::NonConvergence {
            what: "forward weak-KAM value iteration",
            iterations: MAX_VALUE_ITERS,
            residual: residual_plus,
        });
    }

    // normalize: min u_minus = 0 and min(u_minus - u_plus) = 0
    let mu = u.iter().cloned().fold(f64::INFINITY, f64::min);
    for x in &mut u {
        *x -= mu;
    }
    for x in &mut v {
        *x -= mu;
    }
    let gap_min = u
        .iter()
        .zip(&v)
        .map(|(a, b)| a - b)
        .fold(f64::INFINITY, f64::min);
    for x in &mut v {
        *x += gap_min;
    }

    Ok(WeakKamPair {
        u_minus: GridFunction::new(cost.grid(), u)?,
        u_plus: GridFunction::new(cost.grid(), v)?,
        c,
        residual_minus,
        residual_plus,
    })
}

/// Nodes where `u_minus - u_plus` vanishes to tolerance.
///
/// The default tolerance is `10 h Lip_0`, with `Lip_0` the one-sided slope of
/// the gap measured one cell away from its zero set; for a quadratic gap this
/// flags the handful of cells containing each contact point.
pub fn mather_indicator(pair: &WeakKamPair, tol: Option<f64>) -> Result<Vec<usize>> {
    let gap = pair.gap();
    let grid = gap.grid();
    let h = grid.spacing();
    let m = grid.nodes_per_dim();
    let tol = tol.unwrap_or_else(|| {
        // local slope one cell away from the minimum of the gap
        let argmin = gap
            .values()
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.partial_cmp(b.1).unwrap())
            .map(|(i, _)| i)
            .unwrap_or(0);
        let neighbors: Vec<usize> = match grid.dim() {
            1 => vec![(argmin + 1) % m, (argmin + m - 1) % m],
            _ => {
                let (i, j) = (argmin / m, argmin % m);
                vec![
                    ((i + 1) % m) * m + j,
                    ((i + m - 1) % m) * m + j,
                    i * m + (j + 1) % m,
                    i * m + (j + m - 1) % m,
                ]
            }
        };
        let base = gap.values()[argmin];
        let lip0 = neighbors
            .iter()
            .map(|&k| (gap.values()[k] - base).abs() / h)
            .fold(0.0f64, f64::max)
            .max(f64::MIN_POSITIVE);
        10.0 * h * lip0
    });
    let nodes: Vec<usize> = gap
        .values()
        .iter()
        .enumerate()
        .filter(|(_, &g)| g <= tol)
        .map(|(i, _)| i)
        .collect();
    if nodes.is_empty() {
        return Err(CoreError::EmptySet("Mather indicator set"));
    }
    Ok(nodes)
}

/// Two-sided calibration scores of every candidate successor of a Mather
/// node `x`:
///
/// ```text
///   score(y) = u_minus(x) + cost(x, y) + c - u_plus(y)
///            = [backward calibration residual] + [u_minus(y) - u_plus(y)],
/// ```
///
/// nonnegative, and zero only when the step is backward calibrated *and*
/// lands on the Mather set. Backward calibration alone does not single out
/// the successor (near a maximum many nodes have the maximum as optimal
/// predecessor); adding the conjugate gap does. Returned sorted ascending
/// as `(score, node)`.
pub fn calibrated_successor_scores(pair: &WeakKamPair, cost: &CostMatrix, node: usize) -> Vec<(f64, usize)> {
    let u = pair.u_minus.values();
    let v = pair.u_plus.values();
    let mut scores: Vec<(f64, usize)> = (0..cost.num_nodes())
        .map(|y| (u[node] + cost.cost(node, y) + pair.c - v[y], y))
        .collect();
    scores.sort_by(|a, b| a.partial_cmp(b).unwrap());
    scores
}

/// Large-deviation rate of a path:
/// `u_minus(g_0) + A(g) + n c - u_plus(g_n)`, nonnegative and zero exactly
/// on calibrated paths.
pub fn action_deficit<L: TwoPointLagrangian>(
    pair: &WeakKamPair,
    lag: &L,
    orbit: &Orbit,
) -> f64 {
    let n = (orbit.len() - 1) as f64;
    pair.u_minus.eval(orbit.first()) + action_of_path(lag, orbit) + n * pair.c
        - pair.u_plus.eval(orbit.last())
}

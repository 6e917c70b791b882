//! Gibbs marginal, Doob-transformed Markov chain, chain sampling and the
//! free-energy diagnostic.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::CoreError;
use crate::grid::GridFunction;
use crate::model::{DiscreteLagrangian, Orbit, TwoPointLagrangian};
use crate::transfer::{PeriodizedKernel, TransferSpectrum};
use crate::Result;

/// Single-time Gibbs marginal: node weights `psi_i psi*_i h^d`, normalized
/// to a probability vector.
pub fn gibbs_marginal(spec: &TransferSpectrum) -> GridFunction {
    let grid = spec.psi.grid();
    let hv = grid.cell_volume();
    let mut w: Vec<f64> = spec
        .psi
        .values()
        .iter()
        .zip(spec.psi_star.values())
        .map(|(a, b)| a * b * hv)
        .collect();
    let total: f64 = w.iter().sum();
    for v in &mut w {
        *v /= total;
    }
    GridFunction::new(grid, w).expect("weights are finite")
}

/// Row-stochastic Doob transform of the kernel:
/// `P[i][j] = K[i][j] psi_j / (rho psi_i)`.
#[derive(Debug, Clone)]
pub struct MarkovChain {
    grid: crate::grid::TorusGrid,
    p: Vec<f64>,
}

impl MarkovChain {
    pub fn grid(&self) -> crate::grid::TorusGrid {
        self.grid
    }

    pub fn num_nodes(&self) -> usize {
        self.grid.num_nodes()
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let nn = self.num_nodes();
        &self.p[i * nn..(i + 1) * nn]
    }

    #[inline]
    pub fn prob(&self, i: usize, j: usize) -> f64 {
        self.p[i * self.num_nodes() + j]
    }

    pub fn max_row_sum_error(&self) -> f64 {
        let nn = self.num_nodes();
        (0..nn)
            .map(|i| (self.row(i).iter().sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// `mu P` for a probability row vector `mu`.
    pub fn evolve(&self, mu: &[f64]) -> Vec<f64> {
        let nn = self.num_nodes();
        let mut out = vec![0.0; nn];
        for (i, &mi) in mu.iter().enumerate() {
            if mi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, &pij) in out.iter_mut().zip(row) {
                *o += mi * pij;
            }
        }
        out
    }

    /// `|mu P - mu|_1`.
    pub fn stationarity_residual(&self, mu: &GridFunction) -> f64 {
        let next = self.evolve(mu.values());
        next.iter()
            .zip(mu.values())
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    /// Mix with the uniform chain: `(1 - eps) P + eps / nn`.
    pub fn mixed_with_uniform(&self, eps: f64) -> MarkovChain {
        let nn = self.num_nodes();
        let u = eps / nn as f64;
        MarkovChain {
            grid: self.grid,
            p: self.p.iter().map(|v| (1.0 - eps) * v + u).collect(),
        }
    }
}

/// Doob transform of the kernel by its Perron pair.
pub fn markov_kernel(spec: &TransferSpectrum, kernel: &PeriodizedKernel) -> Result<MarkovChain> {
    if spec.psi.grid() != kernel.grid() {
        return Err(CoreError::InvalidArgument(
            "spectrum and kernel live on different grids".into(),
        ));
    }
    let nn = kernel.grid().num_nodes();
    let psi = spec.psi.values();
    let mut p = vec![0.0f64; nn * nn];
    for i in 0..nn {
        let row = kernel.row(i);
        let scale = 1.0 / (spec.rho * psi[i]);
        for j in 0..nn {
            p[i * nn + j] = row[j] * psi[j] * scale;
        }
    }
    Ok(MarkovChain {
        grid: kernel.grid(),
        p,
    })
}

/// Stationary distribution of an arbitrary positive chain by transpose
/// power iteration (used for perturbed chains; the Doob chain's stationary
/// law is the Gibbs marginal).
pub fn stationary_distribution(chain: &MarkovChain) -> GridFunction {
    let nn = chain.num_nodes();
    let mut mu = vec![1.0 / nn as f64; nn];
    for _ in 0..100_000 {
        let next = {
            let mut out = vec![0.0; nn];
            for (i, &mi) in mu.iter().enumerate() {
                let row = chain.row(i);
                for (o, &pij) in out.iter_mut().zip(row) {
                    *o += mi * pij;
                }
            }
            out
        };
        let diff: f64 = next.iter().zip(&mu).map(|(a, b)| (a - b).abs()).sum();
        mu = next;
        if diff < 1e-14 {
            break;
        }
    }
    let total: f64 = mu.iter().sum();
    for v in &mut mu {
        *v /= total;
    }
    GridFunction::new(chain.grid(), mu).expect("finite")
}

/// A sampled chain path with its lift.
#[derive(Debug, Clone)]
pub struct SampledChain {
    pub nodes: Vec<usize>,
    pub orbit: Orbit,
}

/// Sample `n_steps` transitions of the Doob chain started from the Gibbs
/// marginal, tracking lifted displacements: within a transition `(i, j)` the
/// lattice representative is drawn with weight `exp(-beta L(x_i, x_j + n))`.
/// Reproducible for a fixed seed.
pub fn sample_chain(
    lag: &DiscreteLagrangian,
    kernel: &PeriodizedKernel,
    chain: &MarkovChain,
    marginal: &GridFunction,
    n_steps: usize,
    seed: u64,
) -> Result<SampledChain> {
    let grid = kernel.grid();
    let d = grid.dim();
    let beta = kernel.beta();
    let r = kernel.radius() as i64;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);

    let draw_from = |weights: &[f64], rng: &mut ChaCha8Rng| -> usize {
        let total: f64 = weights.iter().sum();
        let mut t = rng.gen_range(0.0..total);
        for (k, w) in weights.iter().enumerate() {
            t -= w;
            if t <= 0.0 {
                return k;
            }
        }
        weights.len() - 1
    };

    let mut nodes = Vec::with_capacity(n_steps + 1);
    let mut points: Vec<Vec<f64>> = Vec::with_capacity(n_steps + 1);
    let start = draw_from(marginal.values(), &mut rng);
    nodes.push(start);
    points.push(grid.node(start));

    let translates: Vec<[i64; 2]> = if d == 1 {
        (-r..=r).map(|n| [n, 0]).collect()
    } else {
        (-r..=r)
            .flat_map(|n0| (-r..=r).map(move |n1| [n0, n1]))
            .collect()
    };
    let mut tweights = vec![0.0f64; translates.len()];
    for _ in 0..n_steps {
        let i = *nodes.last().unwrap();
        let j = draw_from(chain.row(i), &mut rng);
        // lattice representative within the chosen cell
        let xi = grid.node(i);
        let xj = grid.node(j);
        let mut lifted = vec![0.0; d];
        for (w, t) in tweights.iter_mut().zip(&translates) {
            for k in 0..d {
                lifted[k] = xj[k] + t[k] as f64;
            }
            *w = (-beta * lag.value(&xi, &lifted)).exp();
        }
        let t = translates[draw_from(&tweights, &mut rng)];
        let prev = points.last().unwrap().clone();
        let mut next = vec![0.0; d];
        for k in 0..d {
            next[k] = prev[k] + (xj[k] + t[k] as f64 - xi[k]);
        }
        nodes.push(j);
        points.push(next);
    }
    Ok(SampledChain {
        nodes,
        orbit: Orbit::from_points(d, points)?,
    })
}

/// Free energy of a stationary chain against the kernel's Lagrangian data:
///
/// ```text
///   F = sum_ij mu_i P_ij [ L_eff(i,j) + (1/beta) log(P_ij / h^d) ]
///     = (1/beta) sum_ij mu_i P_ij log( P_ij / K_ij ),
/// ```
///
/// where `L_eff = -(1/beta) log(K_ij / h^d)` absorbs the lattice sum, so no
/// arbitrary representative choice enters. For the Doob chain this equals
/// `-lambda/beta` up to the stationarity residual.
pub fn free_energy(kernel: &PeriodizedKernel, chain: &MarkovChain, mu: &GridFunction) -> f64 {
    let nn = kernel.grid().num_nodes();
    let beta = kernel.beta();
    let mut f = 0.0;
    for i in 0..nn {
        let mi = mu.values()[i];
        if mi == 0.0 {
            continue;
        }
        let prow = chain.row(i);
        let krow = kernel.row(i);
        let mut acc = 0.0;
        for j in 0..nn {
            if prow[j] > 0.0 {
                acc += prow[j] * (prow[j] / krow[j]).ln();
            }
        }
        f += mi * acc;
    }
    f / beta
}

/// The vanishing-viscosity pair `u_beta = -(log psi*)/beta`,
/// `v_beta = -(log psi)/beta`, each normalized to minimum zero.
pub fn viscous_solutions(spec: &TransferSpectrum) -> (GridFunction, GridFunction) {
    let beta = spec.beta;
    let grid = spec.psi.grid();
    let mut u: Vec<f64> = spec
        .psi_star
        .values()
        .iter()
        .map(|&v| -v.ln() / beta)
        .collect();
    let mut v: Vec<f64> = spec.psi.values().iter().map(|&w| -w.ln() / beta).collect();
    let (mu, mv) = (
        u.iter().cloned().fold(f64::INFINITY, f64::min),
        v.iter().cloned().fold(f64::INFINITY, f64::min),
    );
    for x in &mut u {
        *x -= mu;
    }
    for x in &mut v {
        *x -= mv;
    }
    (
        GridFunction::new(grid, u).expect("finite"),
        GridFunction::new(grid, v).expect("finite"),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::TorusGrid;
    use crate::model::TrigPotential;
    use crate::transfer::{build_mechanical_kernel, principal_eigenpair};

    fn setup(v: TrigPotential, omega: f64, m: usize, beta: f64) -> (DiscreteLagrangian, PeriodizedKernel, TransferSpectrum) {
        let lag = DiscreteLagrangian::new(v, vec![omega]);
        let grid = TorusGrid::new(1, m).unwrap();
        let kernel = build_mechanical_kernel(&lag, grid, beta, None).unwrap();
        let spec = principal_eigenpair(&kernel).unwrap();
        (lag, kernel, spec)
    }

    #[test]
    fn flat_marginal_is_uniform_and_rows_are_gaussian() {
        let (_, kernel, spec) = setup(TrigPotential::zero(1), 0.0, 64, 30.0);
        let mu = gibbs_marginal(&spec);
        for &w in mu.values() {
            assert!((w - 1.0 / 64.0).abs() < 1e-12);
        }
        let chain = markov_kernel(&spec, &kernel).unwrap();
        assert!(chain.max_row_sum_error() < 1e-9);
        // rows are discretized (lattice-summed) Gaussians centered at the node
        let row = chain.row(10);
        let grid = kernel.grid();
        let theta = |delta: f64| -> f64 {
            (-5i64..=5)
                .map(|n| (-30.0 * (delta + n as f64).powi(2) / 2.0).exp())
                .sum()
        };
        for j in 0..64 {
            let delta = grid.node(j)[0] - grid.node(10)[0];
            let expect = theta(delta) / theta(0.0);
            assert!((row[j] / row[10] - expect).abs() < 1e-9);
        }
    }

    #[test]
    fn stationarity_of_the_gibbs_marginal() {
        let (_, kernel, spec) = setup(TrigPotential::cosine_series(&[0.06, -0.02]), 0.1, 64, 40.0);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        assert!(chain.stationarity_residual(&mu) <= 1e-8);
        assert!(chain.max_row_sum_error() <= 1e-9);
    }

    #[test]
    fn even_potential_marginal_is_symmetric() {
        let (_, _, spec) = setup(TrigPotential::cosine_series(&[0.05]), 0.0, 64, 50.0);
        let mu = gibbs_marginal(&spec);
        for i in 1..32 {
            assert!((mu.values()[i] - mu.values()[64 - i]).abs() < 1e-8);
        }
    }

    #[test]
    fn chain_samples_are_reproducible_and_unbiased() {
        let (lag, kernel, spec) = setup(TrigPotential::zero(1), 0.0, 32, 25.0);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        let a = sample_chain(&lag, &kernel, &chain, &mu, 2000, 42).unwrap();
        let b = sample_chain(&lag, &kernel, &chain, &mu, 2000, 42).unwrap();
        assert_eq!(a.nodes, b.nodes);
        assert_eq!(a.orbit, b.orbit);
        // zero drift at omega = 0, within 3 sigma
        let n = a.orbit.len() - 1;
        let total = a.orbit.last()[0] - a.orbit.first()[0];
        let sigma_step = (1.0 / 25.0f64).sqrt();
        assert!(
            total.abs() < 3.0 * sigma_step * (n as f64).sqrt(),
            "drift {total}"
        );
    }

    #[test]
    fn drift_matches_omega() {
        let omega = 0.3;
        let (lag, kernel, spec) = setup(TrigPotential::zero(1), omega, 32, 25.0);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        let s = sample_chain(&lag, &kernel, &chain, &mu, 20_000, 7).unwrap();
        let n = (s.orbit.len() - 1) as f64;
        let mean_step = (s.orbit.last()[0] - s.orbit.first()[0]) / n;
        let sigma = (1.0 / 25.0f64).sqrt() / n.sqrt();
        assert!(
            (mean_step - omega).abs() < 3.0 * sigma,
            "mean step {mean_step} vs omega {omega}"
        );
    }

    #[test]
    fn occupation_matches_marginal_chi_square() {
        let (lag, kernel, spec) = setup(TrigPotential::cosine_series(&[0.04]), 0.0, 32, 25.0);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        let s = sample_chain(&lag, &kernel, &chain, &mu, 100_000, 11).unwrap();
        let mut counts = vec![0usize; 32];
        for &n in &s.nodes {
            counts[n] += 1;
        }
        let total = s.nodes.len() as f64;
        let mut chi2 = 0.0f64;
        let mut df = 0.0f64;
        for i in 0..32 {
            let e = mu.values()[i] * total;
            if e >= 10.0 {
                chi2 += (counts[i] as f64 - e).powi(2) / e;
                df += 1.0;
            }
        }
        // correlated samples inflate the statistic; a loose bound still
        // catches gross bias
        assert!(chi2 < df + 10.0 * (2.0 * df).sqrt(), "chi2 {chi2} df {df}");
    }

    #[test]
    fn free_energy_flat_matches_gaussian_entropy() {
        let beta = 30.0;
        let (_, kernel, spec) = setup(TrigPotential::zero(1), 0.0, 64, beta);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        let f = free_energy(&kernel, &chain, &mu);
        let expect = -(std::f64::consts::TAU / beta).ln() / (2.0 * beta);
        assert!((f - expect).abs() < 1e-6, "{f} vs {expect}");
        // and equals -lambda/beta
        assert!((f - (-spec.lambda / beta)).abs() < 1e-9);
    }

    #[test]
    fn uniform_noise_increases_free_energy() {
        let (_, kernel, spec) = setup(TrigPotential::cosine_series(&[0.05]), 0.0, 48, 40.0);
        let chain = markov_kernel(&spec, &kernel).unwrap();
        let mu = gibbs_marginal(&spec);
        let f0 = free_energy(&kernel, &chain, &mu);
        let noisy = chain.mixed_with_uniform(0.01);
        let mu_noisy = stationary_distribution(&noisy);
        let f1 = free_energy(&kernel, &noisy, &mu_noisy);
        assert!(f1 > f0, "noise must cost free energy: {f1} <= {f0}");
    }

    #[test]
    fn viscous_identity_with_marginal() {
        let (_, _, spec) = setup(TrigPotential::cosine_series(&[0.05, 0.01]), 0.12, 48, 35.0);
        let (u, v) = viscous_solutions(&spec);
        assert!(u.min().abs() < 1e-15 && v.min().abs() < 1e-15);
        // exp(-beta (u + v)) renormalized equals the Gibbs marginal
        let beta = spec.beta;
        let mut w: Vec<f64> = u
            .values()
            .iter()
            .zip(v.values())
            .map(|(a, b)| (-beta * (a + b)).exp())
            .collect();
        let tot: f64 = w.iter().sum();
        for x in &mut w {
            *x /= tot;
        }
        let mu = gibbs_marginal(&spec);
        for i in 0..48 {
            assert!((w[i] - mu.values()[i]).abs() < 1e-10);
        }
    }

    #[test]
    fn gauge_change_rescales_spectrum_but_not_marginal() {
        use crate::model::NormalizedLagrangian;
        use crate::transfer::build_kernel;
        let (lag, kernel, spec) = setup(TrigPotential::cosine_series(&[0.05]), 0.1, 48, 30.0);
        let grid = kernel.grid();
        let u = GridFunction::from_fn(grid, |x| 0.3 * (std::f64::consts::TAU * x[0]).cos());
        let c = 0.2;
        let norm = NormalizedLagrangian::new(&lag, &u, c);
        let kernel_n = build_kernel(&norm, grid, 30.0, kernel.radius()).unwrap();
        let spec_n = principal_eigenpair(&kernel_n).unwrap();
        // rho scales by exp(-beta c); psi picks up exp(-beta u) (a constant
        // rescaling apart, the similarity diag(e^{beta u}) conjugates K)
        assert!(
            ((spec_n.rho / spec.rho).ln() + 30.0 * c).abs() < 1e-8,
            "eigenvalue shift mismatch"
        );
        let ratio0 =
            spec_n.psi.values()[0] / (spec.psi.values()[0] * (-30.0 * u.values()[0]).exp());
        for i in 0..48 {
            let r = spec_n.psi.values()[i]
                / (spec.psi.values()[i] * (-30.0 * u.values()[i]).exp());
            assert!((r / ratio0 - 1.0).abs() < 1e-8);
        }
        let mu0 = gibbs_marginal(&spec);
        let mu1 = gibbs_marginal(&spec_n);
        for i in 0..48 {
            assert!((mu0.values()[i] - mu1.values()[i]).abs() < 1e-8);
        }
    }
}

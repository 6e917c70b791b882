//! Named experiment scenarios: each resolves its parameters from the config,
//! runs the corresponding numerics, writes the declared outputs, and records
//! in-run assertions. Reruns with the same config and seed are byte
//! identical (the manifest, which carries wall times, is the one exception).

use std::path::Path;

use mather_core::hessian::{
    assemble_hessian, block_determinant, lyapunov_exponents, monodromy_map, thouless_running,
};
use mather_core::model::{
    iterate_twist, DiscreteLagrangian, ForceSign, Mode, Orbit, PhasePoint, TrigPotential,
    TwoPointLagrangian,
};
use mather_core::semiclassics::{
    concentration_experiment, continuous_monodromy_det, discretized_hessian_det, fredholm_det,
    fredholm_operator, laplace_validate, schrodinger_ground, suggested_grid_nodes, Well,
};
use mather_core::transfer::{
    build_mechanical_kernel, gibbs_marginal, markov_kernel, principal_eigenpair,
    viscous_solutions,
};
use mather_core::weakkam::{critical_value, mather_indicator, weak_kam_pair, CostMatrix};
use mather_core::TorusGrid;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;

use crate::config::ExperimentConfig;
use crate::outputs::{fmt_f64, write_json, CsvWriter, RunManifest, StageTimer};
use crate::CliError;

pub const SCENARIOS: &[&str] = &[
    "flat",
    "transfer",
    "weakkam",
    "identity",
    "thouless",
    "laplace",
    "detconv",
    "ground",
    "concentrate",
    "all",
];

/// Run a named scenario into `out_dir`. The manifest is written before the
/// stages start and finalized afterwards; assertion failures surface as
/// [`CliError::Assertions`] after all outputs exist.
pub fn run_scenario(
    name: &str,
    cfg: &ExperimentConfig,
    out_dir: &Path,
) -> Result<RunManifest, CliError> {
    cfg.validate()?;
    let mut manifest = RunManifest::begin(name, cfg, out_dir)?;
    let mut failures = Vec::new();
    match name {
        "flat" => flat(cfg, out_dir, &mut manifest, &mut failures)?,
        "transfer" => transfer(cfg, out_dir, &mut manifest, &mut failures)?,
        "weakkam" => weakkam(cfg, out_dir, &mut manifest, &mut failures)?,
        "identity" => identity(cfg, out_dir, &mut manifest, &mut failures)?,
        "thouless" => thouless(cfg, out_dir, &mut manifest, &mut failures)?,
        "laplace" => laplace(cfg, out_dir, &mut manifest, &mut failures)?,
        "detconv" => detconv(cfg, out_dir, &mut manifest, &mut failures)?,
        "ground" => ground(cfg, out_dir, &mut manifest, &mut failures)?,
        "concentrate" => concentrate(cfg, out_dir, &mut manifest, &mut failures)?,
        "all" => {
            flat(cfg, out_dir, &mut manifest, &mut failures)?;
            transfer(cfg, out_dir, &mut manifest, &mut failures)?;
            weakkam(cfg, out_dir, &mut manifest, &mut failures)?;
            identity(cfg, out_dir, &mut manifest, &mut failures)?;
            thouless(cfg, out_dir, &mut manifest, &mut failures)?;
            laplace(cfg, out_dir, &mut manifest, &mut failures)?;
            detconv(cfg, out_dir, &mut manifest, &mut failures)?;
            ground(cfg, out_dir, &mut manifest, &mut failures)?;
            concentrate(cfg, out_dir, &mut manifest, &mut failures)?;
            emit_plot_data(out_dir, &mut manifest)?;
        }
        other => {
            return Err(CliError::Config(format!(
                "unknown scenario '{other}'; expected one of {SCENARIOS:?}"
            )))
        }
    }
    manifest.finalize(out_dir, failures.clone())?;
    if failures.is_empty() {
        Ok(manifest)
    } else {
        Err(CliError::Assertions(failures))
    }
}

fn check(failures: &mut Vec<String>, ok: bool, message: impl FnOnce() -> String) {
    if !ok {
        failures.push(message());
    }
}

/// Potential with exactly two maxima of equal height and curvatures 1, 4
/// (the selection experiments) at grid nodes 0 and 1/2.
fn selection_potential() -> TrigPotential {
    TrigPotential::two_maxima_equal_height(1.0, 4.0)
}

/// Default single-global-maximum test potential with two critical points of
/// distinct curvature.
fn default_potential() -> TrigPotential {
    TrigPotential::cosine_series(&[0.05, 0.02])
}

// ---------------------------------------------------------------- flat ----

/// All the closed-form zero-potential baselines in one pass.
fn flat(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let tol_det = cfg.tolerance("flat_det", 1e-10);
    let tol_rho = cfg.tolerance("flat_rho", 1e-6);
    let tol_c = cfg.tolerance("flat_c", 1e-8);
    let tol_lyap = cfg.tolerance("flat_lyapunov", 1e-6);

    let lag0 = DiscreteLagrangian::new(TrigPotential::zero(1), vec![0.0]);

    // determinant of the free path Hessian is the step count
    let orbit = iterate_twist(&lag0, &[0.0], &[0.05], 10).map_err(|e| CliError::numerical("flat", e))?;
    let det = block_determinant(&assemble_hessian(&lag0, &orbit).map_err(|e| CliError::numerical("flat", e))?);
    let det_err = (det.det.value() - 10.0).abs();
    check(failures, det_err <= tol_det, || {
        format!("flat determinant: |det - 10| = {det_err:.3e} > {tol_det:.1e}")
    });

    // Perron eigenvalue of the flat kernel at beta = 2 pi, m = 256, R = 4
    let beta = std::f64::consts::TAU;
    let grid = TorusGrid::new(1, 256).map_err(|e| CliError::numerical("flat", e))?;
    let kernel = build_mechanical_kernel(&lag0, grid, beta, Some(4))
        .map_err(|e| CliError::numerical("flat", e))?;
    let spec = principal_eigenpair(&kernel).map_err(|e| CliError::numerical("flat", e))?;
    let rho_err = (spec.rho - (std::f64::consts::TAU / beta).sqrt()).abs();
    check(failures, rho_err <= tol_rho, || {
        format!("flat Perron eigenvalue: error {rho_err:.3e} > {tol_rho:.1e}")
    });

    // critical value c(omega) = omega^2 / 2 for a grid-commensurate omega
    let omega = 0.25;
    let m = cfg.m.unwrap_or(64);
    let lag_w = DiscreteLagrangian::new(TrigPotential::zero(1), vec![omega]);
    let grid_w = TorusGrid::new(1, m).map_err(|e| CliError::numerical("flat", e))?;
    let cost = CostMatrix::build(&lag_w, grid_w, 3).map_err(|e| CliError::numerical("flat", e))?;
    let c = critical_value(&cost).map_err(|e| CliError::numerical("flat", e))?;
    let c_err = (c.c - omega * omega / 2.0).abs();
    check(failures, c_err <= tol_c, || {
        format!("flat critical value: error {c_err:.3e} > {tol_c:.1e}")
    });

    // all Lyapunov exponents vanish (log n / n transient needs a long run)
    let lyap = lyapunov_exponents(
        &lag0,
        &PhasePoint::new(vec![0.0], vec![0.05]),
        20_000_000,
        None,
    )
    .map_err(|e| CliError::numerical("flat", e))?;
    let lyap_max = lyap.exponents[0].abs();
    check(failures, lyap_max <= tol_lyap, || {
        format!("flat Lyapunov exponents: |max| = {lyap_max:.3e} > {tol_lyap:.1e}")
    });

    let report = json!({
        "det": { "value": det.det.value(), "expected": 10.0, "error": det_err, "tol": tol_det },
        "rho": { "value": spec.rho, "expected": 1.0, "error": rho_err, "tol": tol_rho },
        "critical_value": { "value": c.c, "expected": omega * omega / 2.0, "error": c_err, "tol": tol_c },
        "lyapunov": { "value": lyap.exponents[0], "expected": 0.0, "error": lyap_max, "tol": tol_lyap },
    });
    let (f, h) = write_json(dir, "flat.json", &report)?;
    manifest.record_output(f, h);
    timer.record(manifest, "flat");
    Ok(())
}

// ------------------------------------------------------------ transfer ----

fn transfer(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let potential = cfg.potential_or(selection_potential())?;
    let omega = cfg.omega.clone().unwrap_or_else(|| vec![0.0; potential.dim()]);
    let lag = DiscreteLagrangian::new(potential.clone(), omega);
    let m = cfg.m.unwrap_or(512);
    let betas = cfg
        .beta_list
        .clone()
        .unwrap_or_else(|| vec![25.0, 50.0, 100.0, 200.0, 400.0]);
    let grid = TorusGrid::new(lag.dim(), m).map_err(|e| CliError::numerical("transfer", e))?;

    let (pf, phash) = write_json(dir, "potential.json", &potential)?;
    manifest.record_output(pf, phash);

    let mut spectrum_rows = Vec::new();
    let mut conc = CsvWriter::new(dir, "concentration_vs_beta.csv", &["beta", "site", "mass"]);
    let mut last = None;
    // mass window: radius 0.1 around the flat maximum at x = 0
    let site = 0usize;
    let mut masses = Vec::new();
    for &beta in &betas {
        let kernel = build_mechanical_kernel(&lag, grid, beta, None)
            .map_err(|e| CliError::numerical("transfer", e))?;
        let spec = principal_eigenpair(&kernel).map_err(|e| CliError::numerical("transfer", e))?;
        let mu = gibbs_marginal(&spec);
        let mass: f64 = (0..grid.num_nodes())
            .filter(|&i| grid.torus_distance(&grid.node(i), &grid.node(site)) <= 0.1)
            .map(|i| mu.values()[i])
            .sum();
        conc.row(&[fmt_f64(beta), site.to_string(), fmt_f64(mass)]);
        masses.push(mass);
        spectrum_rows.push(json!({
            "beta": beta,
            "rho": spec.rho,
            "lambda": spec.lambda,
            "residual": spec.residual,
            "residual_star": spec.residual_star,
            "iterations": spec.iterations,
        }));
        last = Some((kernel, spec, mu));
    }
    let (kernel, spec, mu) = last.expect("beta list validated nonempty");

    // stationarity of the Gibbs marginal under the Doob chain
    let chain = markov_kernel(&spec, &kernel).map_err(|e| CliError::numerical("transfer", e))?;
    let stat = chain.stationarity_residual(&mu);
    let tol_stat = cfg.tolerance("stationarity", 1e-8);
    check(failures, stat <= tol_stat, || {
        format!("stationarity residual {stat:.3e} > {tol_stat:.1e}")
    });

    // concentration must increase along the sweep
    let monotone = masses.windows(2).all(|w| w[1] >= w[0]);
    check(failures, monotone, || {
        format!("marginal mass near the flat site not monotone in beta: {masses:?}")
    });

    let mut marginal = CsvWriter::new(dir, "marginal.csv", &["x", "mu"]);
    for i in 0..grid.num_nodes() {
        marginal.row_f64(&[grid.node(i)[0], mu.values()[i]]);
    }
    let (f, h) = marginal.finish()?;
    manifest.record_output(f, h);

    let (u_beta, v_beta) = viscous_solutions(&spec);
    let mut viscous = CsvWriter::new(dir, "viscous.csv", &["x", "u_beta", "v_beta"]);
    for i in 0..grid.num_nodes() {
        viscous.row_f64(&[grid.node(i)[0], u_beta.values()[i], v_beta.values()[i]]);
    }
    let (f, h) = viscous.finish()?;
    manifest.record_output(f, h);

    let (f, h) = write_json(dir, "spectrum.json", &json!({ "rows": spectrum_rows }))?;
    manifest.record_output(f, h);
    let (f, h) = conc.finish()?;
    manifest.record_output(f, h);
    timer.record(manifest, "transfer");
    Ok(())
}

// ------------------------------------------------------------- weakkam ----

fn weakkam(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let potential = cfg.potential_or(default_potential())?;
    let omega = cfg.omega.clone().unwrap_or_else(|| vec![0.0; potential.dim()]);
    let lag = DiscreteLagrangian::new(potential, omega);
    let m = cfg.m.unwrap_or(128);
    let grid = TorusGrid::new(lag.dim(), m).map_err(|e| CliError::numerical("weakkam", e))?;
    let radius = CostMatrix::default_radius(lag.omega_norm(), lag.potential().grad_norm_bound());
    let cost =
        CostMatrix::build(&lag, grid, radius).map_err(|e| CliError::numerical("weakkam", e))?;

    let cv = critical_value(&cost).map_err(|e| CliError::numerical("weakkam", e))?;
    let pair = weak_kam_pair(&cost).map_err(|e| CliError::numerical("weakkam", e))?;
    let tol_fp = cfg.tolerance("fixed_point", 1e-8);
    check(failures, pair.residual_minus <= tol_fp, || {
        format!("backward fixed-point residual {:.3e} > {tol_fp:.1e}", pair.residual_minus)
    });
    check(failures, pair.residual_plus <= tol_fp, || {
        format!("forward fixed-point residual {:.3e} > {tol_fp:.1e}", pair.residual_plus)
    });
    check(failures, pair.gap().min() >= -1e-8, || {
        format!("conjugate gap dips to {:.3e}", pair.gap().min())
    });

    let mut ukam = CsvWriter::new(dir, "ukam.csv", &["x", "u_minus", "u_plus", "gap"]);
    let gap = pair.gap();
    for i in 0..grid.num_nodes() {
        ukam.row_f64(&[
            grid.node(i)[0],
            pair.u_minus.values()[i],
            pair.u_plus.values()[i],
            gap.values()[i],
        ]);
    }
    let (f, h) = ukam.finish()?;
    manifest.record_output(f, h);

    let (f, h) = write_json(
        dir,
        "critical.json",
        &json!({
            "c": pair.c,
            "shift_residual": cv.residual,
            "iterations": cv.iterations,
            "cycle": cv.cycle,
            "residual_minus": pair.residual_minus,
            "residual_plus": pair.residual_plus,
        }),
    )?;
    manifest.record_output(f, h);

    let nodes = mather_indicator(&pair, None).map_err(|e| CliError::numerical("weakkam", e))?;
    let mut mather = CsvWriter::new(dir, "mather.csv", &["node", "x", "gap"]);
    for n in nodes {
        mather.row(&[n.to_string(), fmt_f64(grid.node(n)[0]), fmt_f64(gap.values()[n])]);
    }
    let (f, h) = mather.finish()?;
    manifest.record_output(f, h);
    timer.record(manifest, "weakkam");
    Ok(())
}

// ------------------------------------------------------------ identity ----

fn identity(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let trials = cfg.trials.unwrap_or(200);
    let n_max = cfg.n_max.unwrap_or(64).max(3);
    let seed = cfg.seed.unwrap_or(0);
    let tol = cfg.tolerance("identity_rel_err", 1e-9);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut csv = CsvWriter::new(dir, "identity.csv", &["n", "det_map", "det_hess", "rel_err"]);
    let mut worst = 0.0f64;
    for trial in 0..trials {
        let d = if trial % 3 == 2 { 2 } else { 1 };
        let lag = random_system(&mut rng, d);
        let x0: Vec<f64> = (0..d).map(|_| rng.gen_range(0.0..1.0)).collect();
        let x1: Vec<f64> = (0..d).map(|i| x0[i] + rng.gen_range(-0.4..0.4)).collect();
        let n = rng.gen_range(3..=n_max);
        let orbit = iterate_twist(&lag, &x0, &x1, n).map_err(|e| CliError::numerical("identity", e))?;
        let map_det = monodromy_map(&lag, &orbit)
            .map_err(|e| CliError::numerical("identity", e))?
            .det();
        let hess_det = block_determinant(
            &assemble_hessian(&lag, &orbit).map_err(|e| CliError::numerical("identity", e))?,
        )
        .det;
        let rel = map_det.relative_diff(&hess_det);
        worst = worst.max(rel);
        csv.row(&[
            n.to_string(),
            format!("{}*exp({})", map_det.sign, fmt_f64(map_det.log_abs)),
            format!("{}*exp({})", hess_det.sign, fmt_f64(hess_det.log_abs)),
            fmt_f64(rel),
        ]);
    }
    check(failures, worst <= tol, || {
        format!("determinant identity: worst relative error {worst:.3e} > {tol:.1e}")
    });
    let (f, h) = csv.finish()?;
    manifest.record_output(f, h);
    timer.record(manifest, "identity");
    Ok(())
}

fn random_system(rng: &mut ChaCha8Rng, d: usize) -> DiscreteLagrangian {
    if d == 1 {
        DiscreteLagrangian::new(
            TrigPotential::cosine_series(&[rng.gen_range(-0.2..0.2), rng.gen_range(-0.2..0.2)]),
            vec![rng.gen_range(-0.3..0.3)],
        )
    } else {
        DiscreteLagrangian::new(
            TrigPotential::new(
                2,
                vec![
                    Mode { k: vec![1, 0], a: rng.gen_range(-0.2..0.2), b: rng.gen_range(-0.2..0.2) },
                    Mode { k: vec![0, 1], a: rng.gen_range(-0.2..0.2), b: 0.0 },
                    Mode { k: vec![1, 1], a: rng.gen_range(-0.2..0.2), b: 0.0 },
                ],
            )
            .expect("valid modes"),
            vec![rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3)],
        )
    }
}

// ------------------------------------------------------------ thouless ----

fn thouless(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let n = cfg.n.unwrap_or(10_000);
    // hyperbolic fixed point with V''(0) = -1
    let a = 1.0 / (4.0 * std::f64::consts::PI.powi(2));
    let lag = DiscreteLagrangian::new(TrigPotential::cosine_series(&[a]), vec![0.0]);
    let target = ((3.0 + 5.0f64.sqrt()) / 2.0).ln();

    let orbit = Orbit::constant(&[0.0], n + 2);
    let stride = (n / 20).max(1);
    let running = thouless_running(&lag, &orbit, stride)
        .map_err(|e| CliError::numerical("thouless", e))?;
    let lyap = lyapunov_exponents(&lag, &PhasePoint::new(vec![0.0], vec![0.0]), n, None)
        .map_err(|e| CliError::numerical("thouless", e))?;

    let mut csv = CsvWriter::new(dir, "thouless.csv", &["n", "running_avg", "lyapunov_sum"]);
    for (i, (k, avg)) in running.iter().enumerate() {
        let lsum = lyap
            .history
            .get(i)
            .map(|(_, ex)| ex.iter().take(1).sum::<f64>())
            .unwrap_or_else(|| lyap.positive_sum());
        csv.row(&[k.to_string(), fmt_f64(*avg), fmt_f64(lsum)]);
    }
    let (f, h) = csv.finish()?;
    manifest.record_output(f, h);

    let final_avg = running.last().map(|r| r.1).unwrap_or(f64::NAN);
    let tol = cfg.tolerance("thouless_agreement", 5e-3);
    check(failures, (final_avg - lyap.positive_sum()).abs() <= tol, || {
        format!(
            "growth rate {final_avg:.6} vs Lyapunov sum {:.6} beyond {tol:.1e}",
            lyap.positive_sum()
        )
    });
    let (f, h) = write_json(
        dir,
        "thouless.json",
        &json!({ "n": n, "rate": final_avg, "lyapunov_sum": lyap.positive_sum(), "target": target }),
    )?;
    manifest.record_output(f, h);
    timer.record(manifest, "thouless");
    Ok(())
}

// ------------------------------------------------------------- laplace ----

fn laplace(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let potential = cfg.potential_or(TrigPotential::cosine_series(&[0.01]))?;
    let lag = DiscreteLagrangian::new(potential, vec![0.0]);
    let betas = cfg
        .beta_list
        .clone()
        .unwrap_or_else(|| vec![100.0, 200.0, 400.0]);
    let rows = laplace_validate(&lag, &[0.15], &[0.4], 2, &betas)
        .map_err(|e| CliError::numerical("laplace", e))?;
    let mut csv = CsvWriter::new(dir, "laplace.csv", &["beta", "lhs", "rhs", "rel_err"]);
    for r in &rows {
        csv.row_f64(&[r.beta, r.lhs, r.rhs, r.rel_err]);
    }
    let (f, h) = csv.finish()?;
    manifest.record_output(f, h);

    let tol = cfg.tolerance("laplace_rel_err", 0.05);
    check(failures, rows[0].rel_err <= tol, || {
        format!("Laplace error {:.3e} at beta {} > {tol}", rows[0].rel_err, rows[0].beta)
    });
    let decreasing = rows.windows(2).all(|w| w[1].rel_err < w[0].rel_err);
    check(failures, decreasing, || {
        format!(
            "Laplace errors not strictly decreasing: {:?}",
            rows.iter().map(|r| r.rel_err).collect::<Vec<_>>()
        )
    });
    timer.record(manifest, "laplace");
    Ok(())
}

// ------------------------------------------------------------- detconv ----

fn detconv(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    use std::f64::consts::TAU;
    let q = 2.0;
    let potential = TrigPotential::cosine_series(&[-q / (TAU * TAU)]);
    let start = PhasePoint::new(vec![0.0], vec![0.0]);
    let t = 1.0;
    let exact = (q.sqrt() * t).sin() / (q.sqrt() * t);
    let continuous = continuous_monodromy_det(&potential, &start, t, 1e-4)
        .map_err(|e| CliError::numerical("detconv", e))?;
    let tol_closed = cfg.tolerance("detconv_closed_form", 1e-6);
    check(failures, (continuous - exact).abs() <= tol_closed, || {
        format!("continuous determinant {continuous} vs closed form {exact}")
    });

    let mut csv = CsvWriter::new(dir, "detconv.csv", &["N", "disc", "continuous", "err"]);
    let mut errs = Vec::new();
    for n in [8usize, 16, 32, 64, 128, 256, 512, 1024] {
        let disc = discretized_hessian_det(&potential, &start, t, n)
            .map_err(|e| CliError::numerical("detconv", e))?;
        let err = (disc - continuous).abs();
        csv.row(&[n.to_string(), fmt_f64(disc), fmt_f64(continuous), fmt_f64(err)]);
        errs.push((n, err));
    }
    let (f, h) = csv.finish()?;
    manifest.record_output(f, h);
    let halving = errs
        .windows(2)
        .filter(|w| [64, 128].contains(&w[0].0))
        .all(|w| w[1].1 <= 0.55 * w[0].1);
    check(failures, halving, || {
        format!("discretized determinant errors not halving through 64..256: {errs:?}")
    });

    // Fredholm truncation on an oscillating orbit with smooth V''
    let q_osc = 2.5;
    let pot_osc = TrigPotential::cosine_series(&[-q_osc / (TAU * TAU)]);
    let start_osc = PhasePoint::new(vec![0.06], vec![0.0]);
    let traj = mather_core::model::integrate_flow(&pot_osc, ForceSign::Mechanical, &start_osc, t, 1e-4)
        .map_err(|e| CliError::numerical("detconv", e))?;
    let d128 = fredholm_det(
        &fredholm_operator(&pot_osc, &traj, 128).map_err(|e| CliError::numerical("detconv", e))?,
    )
    .value;
    let d256 = fredholm_det(
        &fredholm_operator(&pot_osc, &traj, 256).map_err(|e| CliError::numerical("detconv", e))?,
    )
    .value;
    let mono = continuous_monodromy_det(&pot_osc, &start_osc, t, 1e-4)
        .map_err(|e| CliError::numerical("detconv", e))?;
    let tol_stab = cfg.tolerance("fredholm_stability", 1e-4);
    let tol_agree = cfg.tolerance("fredholm_agreement", 1e-3);
    check(failures, (d256 - d128).abs() <= tol_stab, || {
        format!("Fredholm truncation moved by {:.3e}", (d256 - d128).abs())
    });
    check(failures, (d256 - mono).abs() <= tol_agree, || {
        format!("Fredholm {d256} vs monodromy {mono}")
    });
    let (f, h) = write_json(
        dir,
        "detconv.json",
        &json!({
            "closed_form": exact,
            "continuous": continuous,
            "fredholm_128": d128,
            "fredholm_256": d256,
            "monodromy_oscillating": mono,
        }),
    )?;
    manifest.record_output(f, h);
    timer.record(manifest, "detconv");
    Ok(())
}

// -------------------------------------------------------------- ground ----

fn ground(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let potential = cfg.potential_or(TrigPotential::double_well_equal_depth(1.0, 4.0))?;
    let hbars = cfg
        .hbar_list
        .clone()
        .unwrap_or_else(|| vec![0.05, 0.02, 0.01]);
    let v_min = potential.value(&[0.0]);
    let mut rows = Vec::new();
    for &hbar in &hbars {
        // the configured grid never undercuts the mesh guard
        let m = cfg
            .m
            .unwrap_or(0)
            .max(suggested_grid_nodes(hbar));
        let grid = TorusGrid::new(potential.dim(), m).map_err(|e| CliError::numerical("ground", e))?;
        let g = schrodinger_ground(&potential, hbar, grid)
            .map_err(|e| CliError::numerical("ground", e))?;
        rows.push(json!({ "hbar": hbar, "E0": g.energy, "m": m, "residual": g.residual }));
        // the flat well (curvature 1) hosts the ground state
        let harmonic = v_min + hbar / 2.0;
        if (hbar - 0.01).abs() < 1e-12 {
            let tol = cfg.tolerance("ground_harmonic_rel", 0.10);
            check(
                failures,
                (g.energy - harmonic).abs() <= tol * harmonic.abs(),
                || format!("E0 = {} vs harmonic {} beyond {tol:.0e} relative", g.energy, harmonic),
            );
        }
    }
    let (f, h) = write_json(dir, "ground.json", &json!({ "rows": rows }))?;
    manifest.record_output(f, h);
    timer.record(manifest, "ground");
    Ok(())
}

// --------------------------------------------------------- concentrate ----

fn concentrate(
    cfg: &ExperimentConfig,
    dir: &Path,
    manifest: &mut RunManifest,
    failures: &mut Vec<String>,
) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let potential = cfg.potential_or(TrigPotential::double_well_equal_depth(1.0, 4.0))?;
    let mut hbars = cfg
        .hbar_list
        .clone()
        .unwrap_or_else(|| vec![0.05, 0.02, 0.01]);
    hbars.sort_by(|a, b| b.partial_cmp(a).unwrap());
    let wells = [
        Well { center: vec![0.0], radius: 0.22 },
        Well { center: vec![0.5], radius: 0.22 },
    ];
    let m = cfg
        .m
        .unwrap_or(0)
        .max(suggested_grid_nodes(hbars.iter().cloned().fold(f64::INFINITY, f64::min)));
    let rows = concentration_experiment(&potential, &wells, &hbars, m)
        .map_err(|e| CliError::numerical("concentrate", e))?;

    let mut csv = CsvWriter::new(dir, "wells.csv", &["hbar", "well_id", "mass"]);
    for r in &rows {
        for (w, mass) in r.masses.iter().enumerate() {
            csv.row(&[fmt_f64(r.hbar), w.to_string(), fmt_f64(*mass)]);
        }
    }
    let (f, h) = csv.finish()?;
    manifest.record_output(f, h);

    // the flat well (index 0) must accumulate all the mass as hbar shrinks
    let flat: Vec<f64> = rows.iter().map(|r| r.masses[0]).collect();
    let monotone = flat.windows(2).all(|w| w[1] >= w[0]);
    check(failures, monotone, || {
        format!("flat-well mass not monotone along descending hbar: {flat:?}")
    });
    // the 0.99 bar is pinned at hbar = 0.01; shorter sweeps only check
    // monotonicity
    let hbar_min = *hbars.last().unwrap();
    if hbar_min <= 0.01 + 1e-12 {
        let tol = cfg.tolerance("flat_well_mass", 0.99);
        let last = flat.last().copied().unwrap_or(0.0);
        check(failures, last >= tol, || {
            format!("flat-well mass {last:.4} below {tol} at hbar = {hbar_min}")
        });
    }
    timer.record(manifest, "concentrate");
    Ok(())
}

// ----------------------------------------------------------- plot data ----

/// Figure-ready CSVs derived from scenario outputs, plus a generated README
/// documenting every schema. Missing or malformed inputs are reported by
/// file name.
pub fn emit_plot_data(dir: &Path, manifest: &mut RunManifest) -> Result<(), CliError> {
    let timer = StageTimer::start();
    let mut readme = String::from("# Plot data\n\nGenerated figure-ready CSV files.\n\n");

    // determinant convergence: (N, value, reference, abs_err)
    let detconv = read_csv(dir, "detconv.csv", &["N", "disc", "continuous", "err"])?;
    let mut plot = CsvWriter::new(dir, "detconv_plot.csv", &["N", "value", "reference", "abs_err"]);
    for row in &detconv {
        plot.row(&[row[0].clone(), row[1].clone(), row[2].clone(), row[3].clone()]);
    }
    let (f, h) = plot.finish()?;
    manifest.record_output(f, h);
    readme.push_str("- `detconv_plot.csv`: columns (N, value, reference, abs_err); abs_err decreases with N.\n");

    // growth-rate running average: (n, avg, target)
    let th = read_csv(dir, "thouless.csv", &["n", "running_avg", "lyapunov_sum"])?;
    let mut plot = CsvWriter::new(dir, "thouless_plot.csv", &["n", "avg", "target"]);
    for row in &th {
        plot.row(&[row[0].clone(), row[1].clone(), row[2].clone()]);
    }
    let (f, h) = plot.finish()?;
    manifest.record_output(f, h);
    readme.push_str("- `thouless_plot.csv`: columns (n, avg, target); running determinant rate against the Lyapunov sum.\n");

    // marginal concentration sweep is already figure-ready
    let _ = read_csv(dir, "concentration_vs_beta.csv", &["beta", "site", "mass"])?;
    readme.push_str("- `concentration_vs_beta.csv`: columns (beta, site, mass); Gibbs mass near the selected site.\n");

    // viscous solution vs weak-KAM solution: (x, u_beta, u_minus)
    let viscous = read_csv(dir, "viscous.csv", &["x", "u_beta", "v_beta"])?;
    let ukam = read_csv(dir, "ukam.csv", &["x", "u_minus", "u_plus", "gap"])?;
    let mut plot = CsvWriter::new(dir, "ubeta_vs_ukam.csv", &["x", "u_beta", "u_minus"]);
    for (vrow, urow) in viscous.iter().zip(&ukam) {
        plot.row(&[vrow[0].clone(), vrow[1].clone(), urow[1].clone()]);
    }
    let (f, h) = plot.finish()?;
    manifest.record_output(f, h);
    readme.push_str("- `ubeta_vs_ukam.csv`: columns (x, u_beta, u_minus); finite-beta solution against the limit (grids may differ across runs; rows are aligned by index).\n");

    readme.push_str("- `wells.csv`: columns (hbar, well_id, mass); ground-state mass per well.\n");
    std::fs::write(dir.join("PLOTS.md"), &readme)?;
    manifest.record_output("PLOTS.md".into(), String::new());
    timer.record(manifest, "plot-data");
    Ok(())
}

/// Read a CSV written by this tool, verifying the header schema.
fn read_csv(dir: &Path, name: &str, expect: &[&str]) -> Result<Vec<Vec<String>>, CliError> {
    let path = dir.join(name);
    let text = std::fs::read_to_string(&path).map_err(|e| {
        CliError::Numerical {
            stage: "plot-data",
            message: format!("cannot read {}: {e}", path.display()),
        }
    })?;
    let mut rows = Vec::new();
    let mut lines = text.lines();
    let header: Vec<&str> = lines.next().unwrap_or_default().split(',').collect();
    if header != expect {
        return Err(CliError::Numerical {
            stage: "plot-data",
            message: format!("schema mismatch in {name}: found {header:?}, expected {expect:?}"),
        });
    }
    for line in lines {
        if line.is_empty() {
            continue;
        }
        rows.push(line.split(',').map(|s| s.to_string()).collect());
    }
    Ok(rows)
}

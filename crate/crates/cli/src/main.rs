//! `mather-zero`: experiment runner for the torus Lagrangian numerics.
//!
//! Every acceptance-style experiment is a named scenario writing CSV/JSON
//! outputs and a manifest into the output directory. Exit codes: 0 on
//! success, 1 when in-run assertions fail, 2 on configuration errors, 3 on
//! numerical failures.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use mather_zero::config::ExperimentConfig;
use mather_zero::scenarios;
use mather_zero::CliError;

#[derive(Parser)]
#[command(name = "mather-zero", version, about = "Aubry-Mather / weak-KAM desk-scale experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Clone, Default)]
struct Common {
    /// JSON experiment configuration.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory (default: ./out/<scenario>).
    #[arg(long)]
    out: Option<PathBuf>,
    /// RNG seed override.
    #[arg(long)]
    seed: Option<u64>,
    /// Potential JSON file override.
    #[arg(long)]
    potential: Option<PathBuf>,
    /// Cohomology class (repeat for 2-d).
    #[arg(long, num_args = 1.., value_delimiter = ',')]
    omega: Option<Vec<f64>>,
    /// Grid nodes per dimension.
    #[arg(long)]
    m: Option<usize>,
}

#[derive(Subcommand)]
enum Command {
    /// Zero-potential closed-form baselines.
    Flat(Common),
    /// Transfer-operator sweep: spectrum, Gibbs marginal, viscous pair.
    Transfer {
        #[command(flatten)]
        common: Common,
        /// Inverse temperatures, comma separated.
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        beta_list: Option<Vec<f64>>,
    },
    /// Weak-KAM solver: critical value, conjugate pair, Mather nodes.
    Weakkam {
        #[command(flatten)]
        common: Common,
        /// DP horizon.
        #[arg(long)]
        horizon: Option<usize>,
    },
    /// Monodromy/Hessian determinant identity over random systems.
    Identity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Alias of `identity` with the module flag names.
    #[command(name = "hessian-identity")]
    HessianIdentity {
        #[command(flatten)]
        common: Common,
        #[arg(long)]
        trials: Option<usize>,
        #[arg(long)]
        n_max: Option<usize>,
    },
    /// Hessian-determinant growth rate against the Lyapunov sum.
    Thouless {
        #[command(flatten)]
        common: Common,
        /// Orbit length.
        #[arg(long)]
        n: Option<usize>,
    },
    /// Laplace-method validation across a beta sweep.
    Laplace {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        beta_list: Option<Vec<f64>>,
    },
    /// Continuous determinant vs discretization and Fredholm truncation.
    Detconv(Common),
    /// Schrödinger ground states across an hbar sweep.
    Ground {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        hbar_list: Option<Vec<f64>>,
    },
    /// Ground-state well masses (semiclassical selection).
    Concentrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        hbar_list: Option<Vec<f64>>,
    },
    /// Every scenario in sequence, plus figure-ready plot data.
    All(Common),
    /// Semiclassical subcommands grouped under one name.
    Semiclassics {
        #[command(subcommand)]
        sub: SemiclassicsCommand,
    },
    /// Regenerate figure-ready CSVs from an existing results directory.
    PlotData {
        /// Directory holding scenario outputs.
        results: PathBuf,
    },
}

#[derive(Subcommand)]
enum SemiclassicsCommand {
    Laplace {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        beta_list: Option<Vec<f64>>,
    },
    Detconv(Common),
    Ground {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        hbar_list: Option<Vec<f64>>,
    },
    Concentrate {
        #[command(flatten)]
        common: Common,
        #[arg(long, num_args = 1.., value_delimiter = ',')]
        hbar_list: Option<Vec<f64>>,
    },
}

fn resolve(common: &Common) -> Result<ExperimentConfig, CliError> {
    let mut cfg = match &common.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    if common.seed.is_some() {
        cfg.seed = common.seed;
    }
    if common.out.is_some() {
        cfg.out_dir = common.out.clone();
    }
    if common.potential.is_some() {
        cfg.potential = common.potential.clone();
    }
    if common.omega.is_some() {
        cfg.omega = common.omega.clone();
    }
    if common.m.is_some() {
        cfg.m = common.m;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: Cli) -> Result<(), CliError> {
    let (name, cfg): (&str, ExperimentConfig) = match &cli.command {
        Command::Flat(c) => ("flat", resolve(c)?),
        Command::Transfer { common, beta_list } => {
            let mut cfg = resolve(common)?;
            if beta_list.is_some() {
                cfg.beta_list = beta_list.clone();
            }
            ("transfer", cfg)
        }
        Command::Weakkam { common, horizon } => {
            let mut cfg = resolve(common)?;
            if horizon.is_some() {
                cfg.horizon = *horizon;
            }
            ("weakkam", cfg)
        }
        Command::Identity { common, trials, n_max }
        | Command::HessianIdentity { common, trials, n_max } => {
            let mut cfg = resolve(common)?;
            if trials.is_some() {
                cfg.trials = *trials;
            }
            if n_max.is_some() {
                cfg.n_max = *n_max;
            }
            ("identity", cfg)
        }
        Command::Thouless { common, n } => {
            let mut cfg = resolve(common)?;
            if n.is_some() {
                cfg.n = *n;
            }
            ("thouless", cfg)
        }
        Command::Laplace { common, beta_list }
        | Command::Semiclassics { sub: SemiclassicsCommand::Laplace { common, beta_list } } => {
            let mut cfg = resolve(common)?;
            if beta_list.is_some() {
                cfg.beta_list = beta_list.clone();
            }
            ("laplace", cfg)
        }
        Command::Detconv(c)
        | Command::Semiclassics { sub: SemiclassicsCommand::Detconv(c) } => ("detconv", resolve(c)?),
        Command::Ground { common, hbar_list }
        | Command::Semiclassics { sub: SemiclassicsCommand::Ground { common, hbar_list } } => {
            let mut cfg = resolve(common)?;
            if hbar_list.is_some() {
                cfg.hbar_list = hbar_list.clone();
            }
            ("ground", cfg)
        }
        Command::Concentrate { common, hbar_list }
        | Command::Semiclassics { sub: SemiclassicsCommand::Concentrate { common, hbar_list } } => {
            let mut cfg = resolve(common)?;
            if hbar_list.is_some() {
                cfg.hbar_list = hbar_list.clone();
            }
            ("concentrate", cfg)
        }
        Command::All(c) => ("all", resolve(c)?),
        Command::PlotData { results } => {
            // regenerate plot CSVs in place over existing outputs
            let cfg = ExperimentConfig::default();
            let mut manifest = mather_zero::outputs::RunManifest::begin("plot-data", &cfg, results)?;
            scenarios::emit_plot_data(results, &mut manifest)?;
            manifest.finalize(results, Vec::new())?;
            println!("plot data written to {}", results.display());
            return Ok(());
        }
    };
    let out_dir = cfg
        .out_dir
        .clone()
        .unwrap_or_else(|| PathBuf::from("out").join(name));
    let manifest = scenarios::run_scenario(name, &cfg, &out_dir)?;
    println!(
        "scenario '{name}' finished: {} outputs in {}",
        manifest.outputs.len(),
        out_dir.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

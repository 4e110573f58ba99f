//! Experiment driver: every module of the laboratory behind one subcommand,
//! JSON configuration in, JSON report plus CSV sweeps out.
//!
//! Exit codes: 0 success, 1 invariant failure, 2 usage or validation error.

mod config;
mod report;
mod runs;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::ExperimentConfig;

#[derive(Parser)]
#[command(
    name = "hexloop",
    about = "Loop ensembles and site percolation on hexagonal patches: exact tables, Monte Carlo sweeps, and verification oracles"
)]
struct Cli {
    /// Load the full experiment configuration from a JSON file; command-line
    /// parameters are ignored except --out.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Write the main artifact (CSV sweep or JSON table) here instead of
    /// stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print the effective configuration and exit.
    #[arg(long, global = true)]
    dump_config: bool,
    #[command(subcommand)]
    command: Option<Command>,
}

#[derive(Args, Clone)]
struct ModelArgs {
    /// Loop weight.
    #[arg(long, default_value_t = 1.0)]
    n: f64,
    /// Edge weight.
    #[arg(long, default_value_t = 1.0)]
    x: f64,
    /// Host ball radius.
    #[arg(long, default_value_t = 1)]
    r: u32,
    /// Frozen boundary condition as comma-separated edge indices; the free
    /// domain is then B_{r-1} inside the host B_r.
    #[arg(long, value_delimiter = ',', num_args = 0..)]
    boundary: Vec<u32>,
}

#[derive(Args, Clone)]
struct ChainArgs {
    /// Base seed (required for stochastic commands).
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long, default_value_t = 1000)]
    burnin: u64,
    #[arg(long, default_value_t = 10)]
    gap: u64,
    #[arg(long, default_value_t = 1000)]
    samples: u64,
    #[arg(long, default_value_t = 1)]
    chains: u64,
    /// Worker threads (0 = one per chain). Results never depend on this.
    #[arg(long, default_value_t = 0)]
    threads: u64,
}

#[derive(Subcommand)]
enum Command {
    /// Exact Gibbs table on a small ball: states, probabilities, log Z.
    Enumerate(ModelArgs),
    /// Metropolis samples of the loop ensemble with per-sample observables.
    Sample {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, default_value_t = 1000)]
        sweeps: u64,
        /// Append each sample's edge-index list (semicolon separated) to the
        /// CSV.
        #[arg(long)]
        emit_configs: bool,
    },
    /// Annulus-loop probability sweep over an (n, x, k) grid.
    Rsw {
        #[command(flatten)]
        chain: ChainArgs,
        /// Grid values; empty lists make an empty sweep.
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
        n_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0])]
        x_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2])]
        k_grid: Vec<u32>,
    },
    /// Blocking-percolation crossing statistics over a radius sweep.
    Blocking {
        #[command(flatten)]
        model: ModelArgs,
        #[command(flatten)]
        chain: ChainArgs,
        #[arg(long, value_delimiter = ',', default_values_t = vec![2])]
        r_grid: Vec<u32>,
    },
    /// Arc splitting and the crossing-component sweep on a triangular patch.
    Arms {
        #[command(flatten)]
        chain: ChainArgs,
        /// Triangular patch radius.
        #[arg(long, default_value_t = 5)]
        r: u32,
        /// Cut-set ball radius.
        #[arg(long, default_value_t = 3)]
        cut_radius: u32,
        /// Number of arc pairs.
        #[arg(long, default_value_t = 2)]
        k: u32,
        /// Site density (monotone pairs need p <= 1/2).
        #[arg(long, default_value_t = 0.5)]
        p: f64,
        /// Arc-splitting threshold.
        #[arg(long, default_value_t = 0.4)]
        eps: f64,
    },
    /// Spanning-forest trifurcation statistics on random clusters.
    Trifurcation {
        #[command(flatten)]
        chain: ChainArgs,
        /// Rhombus side.
        #[arg(long, default_value_t = 7)]
        side: usize,
        #[arg(long, default_value_t = 0.5)]
        p: f64,
    },
    /// Exact law-equality report for the resampling kernel.
    Couple {
        #[arg(long, value_delimiter = ',', default_values_t = vec![1.0, 1.5, 2.0])]
        n_grid: Vec<f64>,
        #[arg(long, value_delimiter = ',', default_values_t = vec![std::f64::consts::FRAC_1_SQRT_2, 0.85, 1.0])]
        x_grid: Vec<f64>,
        /// Exact tolerance on the total-variation distance.
        #[arg(long, default_value_t = 1e-9)]
        tv_tol: f64,
    },
    /// Run the whole invariant suite and exit nonzero on any failure.
    Check {
        #[arg(long, default_value_t = 1)]
        seed: u64,
        /// Shrink the statistical sample sizes for a fast smoke run.
        #[arg(long)]
        fast: bool,
        /// Exact tolerance override; zero demands exact equality and may
        /// fail statistical checks (reported as statistical, not exact).
        #[arg(long, default_value_t = 1e-9)]
        tv_tol: f64,
        /// Statistical tolerance in standard errors.
        #[arg(long, default_value_t = 4.0)]
        stat_tol: f64,
    },
}

fn effective_config(cli: &Cli) -> Result<ExperimentConfig, String> {
    if let Some(path) = &cli.config {
        let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read config: {e}"))?;
        return ExperimentConfig::parse(&text);
    }
    let cmd = cli
        .command
        .as_ref()
        .ok_or_else(|| "missing subcommand (or --config)".to_string())?;
    let mut cfg;
    match cmd {
        Command::Enumerate(m) => {
            cfg = ExperimentConfig::new("enumerate");
            cfg.n = m.n;
            cfg.x = m.x;
            cfg.r = m.r;
            cfg.boundary = m.boundary.clone();
        }
        Command::Sample {
            model,
            chain,
            sweeps,
            emit_configs,
        } => {
            cfg = ExperimentConfig::new("sample");
            cfg.n = model.n;
            cfg.x = model.x;
            cfg.r = model.r;
            cfg.boundary = model.boundary.clone();
            cfg.sweeps = *sweeps;
            cfg.emit_configs = *emit_configs;
            apply_chain(&mut cfg, chain);
        }
        Command::Rsw {
            chain,
            n_grid,
            x_grid,
            k_grid,
        } => {
            cfg = ExperimentConfig::new("rsw");
            cfg.n_list = n_grid.clone();
            cfg.x_list = x_grid.clone();
            cfg.k_list = k_grid.clone();
            apply_chain(&mut cfg, chain);
        }
        Command::Blocking { model, chain, r_grid } => {
            cfg = ExperimentConfig::new("blocking");
            cfg.n = model.n;
            cfg.x = model.x;
            cfg.r_list = r_grid.clone();
            apply_chain(&mut cfg, chain);
        }
        Command::Arms {
            chain,
            r,
            cut_radius,
            k,
            p,
            eps,
        } => {
            cfg = ExperimentConfig::new("arms");
            cfg.r = *r;
            cfg.cut_radius = *cut_radius;
            cfg.k = *k;
            cfg.p = *p;
            cfg.eps = *eps;
            apply_chain(&mut cfg, chain);
        }
        Command::Trifurcation { chain, side, p } => {
            cfg = ExperimentConfig::new("trifurcation");
            cfg.side = *side;
            cfg.p = *p;
            apply_chain(&mut cfg, chain);
        }
        Command::Couple {
            n_grid,
            x_grid,
            tv_tol,
        } => {
            cfg = ExperimentConfig::new("couple");
            cfg.n_list = n_grid.clone();
            cfg.x_list = x_grid.clone();
            cfg.tv_tol = *tv_tol;
        }
        Command::Check {
            seed,
            fast,
            tv_tol,
            stat_tol,
        } => {
            cfg = ExperimentConfig::new("check");
            cfg.seed = Some(*seed);
            cfg.samples = if *fast { 2000 } else { 20_000 };
            cfg.tv_tol = *tv_tol;
            cfg.stat_tol = *stat_tol;
        }
    }
    Ok(cfg)
}

fn apply_chain(cfg: &mut ExperimentConfig, chain: &ChainArgs) {
    cfg.seed = chain.seed;
    cfg.burnin = chain.burnin;
    cfg.gap = chain.gap;
    cfg.samples = chain.samples;
    cfg.chains = chain.chains;
    cfg.threads = chain.threads;
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match effective_config(&cli) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    if cli.dump_config {
        println!("{}", cfg.emit());
        return ExitCode::SUCCESS;
    }
    if let Err(msg) = cfg.validate() {
        eprintln!("error: {msg}");
        return ExitCode::from(2);
    }
    match runs::dispatch(&cfg, cli.out.as_deref()) {
        Ok(pass) => {
            if pass {
                ExitCode::SUCCESS
            } else {
                ExitCode::from(1)
            }
        }
        Err(runs::RunError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(runs::RunError::Io(e)) => {
            eprintln!("io error: {e}");
            ExitCode::from(2)
        }
    }
}

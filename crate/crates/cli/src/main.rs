//! `pavg`: batch runner for slow-fast SDE experiments.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::{ConfigError, ExperimentConfig};
use output::Output;

#[derive(Parser)]
#[command(
    name = "pavg",
    version,
    about = "Random periodic solutions, periodic measures and averaging for slow-fast SDEs"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// TOML experiment configuration; built-in defaults when omitted.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, overriding `out` in the config.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Worker threads, overriding `workers` in the config (0 = one per core).
    #[arg(long, global = true, value_name = "K")]
    workers: Option<usize>,

    /// Added to every seed, for replication studies.
    #[arg(long, global = true, value_name = "S", default_value_t = 0)]
    seed_offset: u64,
}

#[derive(Subcommand, Clone, Copy)]
enum Command {
    /// Slow-fast trajectory from the configured initial state.
    Simulate,
    /// Random periodic solution of the frozen fast process by pullback.
    Pullback,
    /// Empirical periodic measures and d_BL tables.
    Measure,
    /// Krylov–Bogolyubov curves and the Poincaré section check.
    Ergodicity,
    /// Coupling rate, dissipativity constants, Hörmander rank, semigroup probe.
    Diagnose,
    /// Averaged drift table and the averaged ODE.
    Average,
    /// Averaging error against the averaged ODE for each epsilon.
    VerifyAveraging,
    /// Oracle-backed checks on the configured catalog system.
    Example,
}

impl Command {
    fn run(self, cfg: &ExperimentConfig, out: &mut Output) -> anyhow::Result<()> {
        match self {
            Command::Simulate => commands::simulate(cfg, out),
            Command::Pullback => commands::pullback(cfg, out),
            Command::Measure => commands::measure(cfg, out),
            Command::Ergodicity => commands::ergodicity(cfg, out),
            Command::Diagnose => commands::diagnose(cfg, out),
            Command::Average => commands::average(cfg, out),
            Command::VerifyAveraging => commands::verify_averaging(cfg, out),
            Command::Example => commands::example(cfg, out),
        }
    }
}

fn resolve(cli: &Cli) -> Result<ExperimentConfig, ConfigError> {
    let mut cfg = match &cli.config {
        Some(p) => config::load(p)?,
        None => ExperimentConfig::default(),
    };
    if let Some(o) = &cli.out {
        cfg.out = o.clone();
    }
    if let Some(w) = cli.workers {
        cfg.workers = w;
    }
    cfg.seeds = cfg.seeds.offset(cli.seed_offset);
    Ok(cfg)
}

#[cfg(feature = "parallel")]
fn init_pool(workers: usize) -> anyhow::Result<()> {
    rayon::ThreadPoolBuilder::new().num_threads(workers).build_global()?;
    Ok(())
}

#[cfg(not(feature = "parallel"))]
fn init_pool(workers: usize) -> anyhow::Result<()> {
    if workers > 1 {
        eprintln!("warning: built without the `parallel` feature, running on one thread");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match resolve(&cli) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: invalid config: {e}");
            return ExitCode::from(2);
        }
    };
    let run = || -> anyhow::Result<()> {
        init_pool(cfg.workers)?;
        let mut out = Output::create(&cfg.out)?;
        cli.command.run(&cfg, &mut out)
    };
    match run() {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

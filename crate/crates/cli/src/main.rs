//! `tearfilm`: simulate, synthesize, preprocess, fit and report.
//!
//! Exit codes: 0 success, 1 output I/O, 2 config or input error, 3 solver
//! failure, 4 optimizer did not converge.

mod commands;
mod config;
mod render;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

#[derive(Debug, Parser)]
#[command(
    name = "tearfilm",
    version,
    about = "Tear-film thinning: forward solves, preprocessing and parameter fits"
)]
struct Cli {
    /// TOML run configuration; built-in defaults otherwise.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory.
    #[arg(long, global = true, default_value = "tearfilm-out")]
    out: PathBuf,
    /// Overrides the configured random seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides the configured thread count.
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Forward solve; writes field CSVs and intensity frames.
    Simulate,
    /// Forward solve rendered as a frame sequence, with optional noise.
    Synth,
    /// Align, smooth, window, normalize and regrid a frame directory.
    Preprocess,
    /// Fit an evaporation model to a processed sequence.
    Fit,
    /// Tabulate fit results.
    Report {
        /// fit.json files or directories containing one.
        paths: Vec<PathBuf>,
    },
}

#[derive(Debug)]
pub enum Failure {
    Io(String),
    Config(String),
    Solver(String),
    NotConverged(String),
}

impl Failure {
    pub fn io(e: impl std::fmt::Display) -> Self {
        Failure::Io(e.to_string())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Io(_) => 1,
            Failure::Config(_) => 2,
            Failure::Solver(_) => 3,
            Failure::NotConverged(_) => 4,
        }
    }
}

impl std::fmt::Display for Failure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Failure::Io(m) => write!(f, "i/o error: {m}"),
            Failure::Config(m) => write!(f, "config error: {m}"),
            Failure::Solver(m) => write!(f, "solver failure: {m}"),
            Failure::NotConverged(m) => write!(f, "not converged: {m}"),
        }
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let mut cfg = RunConfig::load(cli.config.as_deref())?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(t) = cli.threads {
        cfg.threads = t;
    }
    cfg.fit.optimizer.seed = cfg.seed;
    cfg.validate()?;
    match cli.command {
        Command::Simulate => commands::simulate(&cfg, &cli.out),
        Command::Synth => commands::synth(&cfg, &cli.out),
        Command::Preprocess => commands::preprocess(&cfg, &cli.out),
        Command::Fit => commands::fit(&mut cfg, &cli.out),
        Command::Report { paths } => commands::report(&paths, &cli.out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("tearfilm: {e}");
            ExitCode::from(e.code())
        }
    }
}

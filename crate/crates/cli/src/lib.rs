//! Command-line front end for the Volterra simulation toolkit.
//!
//! The `svie` binary reads a flat `key = value` config file, runs one of
//! six subcommands against it, and writes CSV tables into an output
//! directory. Exit codes: 0 on success, 1 for configuration problems
//! (reported on stderr), 2 for numerical failures such as a rejected
//! factorization or a violated invariant.

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use thiserror::Error as ThisError;

pub mod commands;
pub mod config;

pub use config::Config;

/// Failure modes, split by the exit code they map to.
#[derive(Debug, ThisError)]
pub enum Error {
    /// Bad arguments, unreadable files, malformed or inconsistent configs.
    #[error("{0}")]
    Config(String),
    /// The run itself went numerically wrong.
    #[error("{0}")]
    Numerical(String),
}

impl Error {
    /// Process exit code for this failure.
    pub fn exit_code(&self) -> u8 {
        match self {
            Error::Config(_) => 1,
            Error::Numerical(_) => 2,
        }
    }
}

/// Convenience alias used throughout the crate.
pub type Result<T> = std::result::Result<T, Error>;

/// Parsed command line.
#[derive(Debug, Parser)]
#[command(name = "svie", version, about = "Stochastic Volterra equation toolkit")]
pub struct Args {
    #[command(subcommand)]
    pub command: Cmd,
}

/// Common flags shared by every subcommand.
#[derive(Debug, clap::Args)]
pub struct RunArgs {
    /// Flat key = value config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Directory the CSV files are written into.
    #[arg(long, default_value = ".")]
    pub out: PathBuf,
    /// Override a config entry, e.g. --set lambda=0.3 (repeatable).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub set: Vec<String>,
    /// Size of the worker pool (0 picks the machine default).
    #[arg(long)]
    pub threads: Option<usize>,
    /// Replace the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
}

/// Available subcommands.
#[derive(Debug, Subcommand)]
pub enum Cmd {
    /// Tabulate the resolvent pair (R, f) on the grid.
    Resolvent(RunArgs),
    /// Emit the variance-stabilizing profile.
    Stabilizer(RunArgs),
    /// Sample paths and report per-time moments.
    Simulate(RunArgs),
    /// Simulate and check the run's invariants.
    Verify(RunArgs),
    /// Couple two starting laws on shared noise and track their gap.
    Confluence(RunArgs),
    /// Compare empirical autocovariances with the long-run prediction.
    Autocov(RunArgs),
}

/// Runs the parsed command line to completion.
pub fn run(args: Args) -> Result<()> {
    match args.command {
        Cmd::Resolvent(ra) => exec(&ra, commands::resolvent),
        Cmd::Stabilizer(ra) => exec(&ra, commands::stabilizer),
        Cmd::Simulate(ra) => exec(&ra, commands::simulate),
        Cmd::Verify(ra) => exec(&ra, commands::verify),
        Cmd::Confluence(ra) => exec(&ra, commands::confluence),
        Cmd::Autocov(ra) => exec(&ra, commands::autocov),
    }
}

fn exec(ra: &RunArgs, command: fn(&Config, &Path) -> Result<()>) -> Result<()> {
    if let Some(threads) = ra.threads {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
            .map_err(|e| Error::Config(format!("worker pool: {e}")))?;
    }
    let text = fs::read_to_string(&ra.config)
        .map_err(|e| Error::Config(format!("cannot read {}: {e}", ra.config.display())))?;
    let mut map = config::parse_kv(&text)?;
    config::apply_overrides(&mut map, &ra.set)?;
    let mut config = Config::from_map(map)?;
    if let Some(seed) = ra.seed {
        config.seed = seed;
    }
    fs::create_dir_all(&ra.out)
        .map_err(|e| Error::Config(format!("cannot create {}: {e}", ra.out.display())))?;
    command(&config, &ra.out)
}

//! Batch front end for the fractional heat exterior-control experiments.
//!
//! Subcommands: eigen, trace, solve, dual, control, muntz, verify.
//! Exit codes: 0 success, 2 configuration error, 3 numerical failure,
//! 4 I/O failure.

mod commands;
mod config;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;

/// Error classes mapped onto distinct exit codes.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Numerical(String),
    Io(String),
}

impl CliError {
    pub fn config(msg: String) -> Self {
        CliError::Config(msg)
    }
    pub fn numerical(msg: String) -> Self {
        CliError::Numerical(msg)
    }
    pub fn io(msg: String) -> Self {
        CliError::Io(msg)
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Config(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::Io(_) => 4,
        }
    }

    fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Numerical(m) | CliError::Io(m) => m,
        }
    }
}

/// Classifies library errors into the CLI error classes.
impl From<fracheat_core::Error> for CliError {
    fn from(e: fracheat_core::Error) -> Self {
        use fracheat_core::Error as E;
        match e {
            E::InvalidParameter { .. } | E::InvalidGrid(_) | E::InvalidRegion(_) => {
                CliError::Config(e.to_string())
            }
            E::Io(_) | E::CacheFormat(_) => CliError::Io(e.to_string()),
            _ => CliError::Numerical(e.to_string()),
        }
    }
}

#[derive(Parser)]
#[command(
    name = "fracheat",
    version,
    about = "Spectral solver and exterior null-control experiments for the fractional heat equation on (-1,1)",
    long_about = None
)]
struct Cli {
    /// Configuration file (flat key = value with [section] headers).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Output directory (overrides [output] out_dir).
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Eigenpair cache directory (overrides [output] cache_dir).
    #[arg(long, global = true)]
    cache: Option<PathBuf>,
    /// Seed for randomized data and verification probes.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Number of modes kept in series truncations.
    #[arg(long, global = true)]
    modes: Option<usize>,
    /// Fractional order, 0 < s < 1.
    #[arg(long, global = true)]
    s: Option<f64>,
    /// Control horizon T > 0.
    #[arg(long, global = true)]
    horizon: Option<f64>,
    /// Exterior region "a:b[,c:d]" disjoint from (-1,1).
    #[arg(long, global = true)]
    region: Option<String>,
    /// Uniform grid cells on [-1,1].
    #[arg(long, global = true)]
    grid: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Compute (or load) the eigenbasis; write the cache and the
    /// discrete-vs-asymptotic eigenvalue table.
    Eigen,
    /// Export exterior traces of the basis modes on the region.
    Trace,
    /// Run the forward evolution and export the modal trajectory.
    Solve,
    /// Run the backward dual evolution and export its exterior trace.
    Dual,
    /// Synthesize an exterior null control, verify it, write the report.
    Control,
    /// Partial sums of the reciprocal eigenvalue series.
    Muntz,
    /// Re-check a stored experiment report from its own data.
    Verify {
        /// Path to a report JSON produced by `control`.
        report: PathBuf,
    },
}

fn load_config(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::from_file(path)?,
        None => RunConfig::default(),
    };
    if let Some(out) = &cli.out {
        cfg.out_dir = out.clone();
    }
    if let Some(cache) = &cli.cache {
        cfg.cache_dir = cache.clone();
    }
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(modes) = cli.modes {
        cfg.modes = modes;
    }
    if let Some(s) = cli.s {
        cfg.s = s;
    }
    if let Some(horizon) = cli.horizon {
        cfg.horizon = horizon;
    }
    if let Some(region) = &cli.region {
        cfg.region = fracheat_core::nonlocal::ExteriorRegion::parse(region)
            .map_err(|e| CliError::config(e.to_string()))?;
    }
    if let Some(grid) = cli.grid {
        cfg.grid = grid;
    }
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<(), CliError> {
    match &cli.command {
        Command::Verify { report } => commands::cmd_verify(report),
        command => {
            let cfg = load_config(cli)?;
            match command {
                Command::Eigen => commands::cmd_eigen(&cfg),
                Command::Trace => commands::cmd_trace(&cfg),
                Command::Solve => commands::cmd_solve(&cfg),
                Command::Dual => commands::cmd_dual(&cfg),
                Command::Control => commands::cmd_control(&cfg),
                Command::Muntz => commands::cmd_muntz(&cfg),
                Command::Verify { .. } => unreachable!(),
            }
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("fracheat: {}", e.message());
            ExitCode::from(e.exit_code())
        }
    }
}

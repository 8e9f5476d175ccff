//! `citesim`: team-size cohorts, simulation ensembles, analysis and fitting.
//!
//! Exit codes: 0 success, 1 validation, 2 I/O, 3 analysis undefined.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use citesim_core::fit::GridAxis;
use citesim_core::Error;
use clap::{Parser, Subcommand};

use config::{CliConfig, Overrides};

#[derive(Debug, Parser)]
#[command(name = "citesim", version, about = "Two-mechanism citation simulator")]
struct Cli {
    /// JSON config file; command-line flags override its fields
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Output file or directory (each command has its own default)
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Generate a synthetic team-size cohort CSV
    GenTeams {
        #[arg(long, default_value_t = citesim_core::engine::DEFAULT_PAPERS)]
        n: usize,
    },
    /// Run an ensemble and write one run JSON per replicate plus summary.json
    Simulate {
        #[command(flatten)]
        overrides: Overrides,
    },
    /// Write distribution, share, fraction and geometric-mean CSVs for a run
    Analyze {
        run: PathBuf,
        /// Snapshot label; repeat for several (default: all)
        #[arg(long)]
        checkpoint: Vec<String>,
    },
    /// Distance in decades between two distribution CSVs
    Compare { a: PathBuf, b: PathBuf },
    /// Grid-search kernel parameters against a target distribution CSV
    Fit {
        #[arg(long)]
        target: PathBuf,
        /// Axis as name=lo:hi:step or name=value; repeat for a multi-parameter grid
        #[arg(long, required = true)]
        grid: Vec<GridAxis>,
        #[command(flatten)]
        overrides: Overrides,
    },
}

fn exit_code(e: &Error) -> u8 {
    match e {
        Error::Replicate { source, .. } => exit_code(source),
        Error::Io { .. } => 2,
        Error::Csv { source, .. } if source.is_io_error() => 2,
        Error::Json { source, .. } if source.is_io() => 2,
        Error::UndefinedDistance | Error::EmptySupport | Error::DegenerateKernel { .. } => 3,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(1)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out = |default: &str| cli.out.clone().unwrap_or_else(|| PathBuf::from(default));
    let result = CliConfig::load(cli.config.as_deref()).and_then(|cfg| match &cli.command {
        Command::GenTeams { n } => commands::gen_teams(cfg, *n, cli.seed, &out("teams.csv")),
        Command::Simulate { overrides } => commands::simulate(cfg, overrides, cli.seed, &out("runs")),
        Command::Analyze { run, checkpoint } => commands::analyze(cfg, run, checkpoint, &out("analysis")),
        Command::Compare { a, b } => commands::compare(cfg, a, b),
        Command::Fit {
            target,
            grid,
            overrides,
        } => commands::fit(cfg, overrides, cli.seed, target, grid, &out("fit.json")),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e))
        }
    }
}

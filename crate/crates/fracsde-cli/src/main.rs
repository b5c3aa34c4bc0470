//! `fracsde` — batch front end for the `fracsde` library.
//!
//! Four subcommands cover the pipeline: `simulate` writes one exact SDE
//! trajectory as CSV, `estimate` runs the Hurst/volatility estimators on a
//! path CSV, `experiment` runs a replicated Monte Carlo sweep and writes the
//! report tables (plus optional SVG charts), and `variances` tabulates the
//! asymptotic variance constants over a Hurst grid.
//!
//! Every subcommand reads a single JSON config document (`--config`) with a
//! `schema_version` field, validates it completely before any computation
//! starts, buffers all outputs in memory, and only then writes files into
//! `--out` — a failed run never leaves partial outputs behind.
//!
//! Exit codes: `0` success, `2` configuration/validation failure (including
//! malformed input CSVs), `3` numeric or I/O failure during a valid run.

mod commands;
mod config;
mod svg;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Parser)]
#[command(
    name = "fracsde",
    version,
    about = "Exact simulation and inference for geometric SDEs driven by fractional Brownian motion",
    propagate_version = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Simulate one trajectory (and optionally its driver) to CSV.
    Simulate(CommonArgs),
    /// Run the estimators on a path CSV and write an estimates table.
    Estimate(CommonArgs),
    /// Run a replicated Monte Carlo experiment and write report tables.
    Experiment(CommonArgs),
    /// Tabulate asymptotic variance constants over a Hurst grid.
    Variances(CommonArgs),
}

/// Flags shared by every subcommand.
#[derive(Debug, Args)]
struct CommonArgs {
    /// JSON config document for this subcommand.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,

    /// Output directory (created if missing).
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,

    /// Output format: CSV tables only, or CSV plus static SVG charts.
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,

    /// Worker-pool size for the experiment sweep (default: hardware
    /// parallelism).
    #[arg(long, value_name = "K")]
    threads: Option<usize>,

    /// Overrides the config's `seed` (simulate) or `base_seed` (experiment).
    #[arg(long, value_name = "U64")]
    seed: Option<u64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    /// CSV tables only.
    Csv,
    /// CSV tables plus SVG charts.
    #[value(name = "csv+svg")]
    CsvSvg,
}

/// Failures after argument parsing. `Config` exits with 2, `Runtime` with 3;
/// clap itself exits with 2 on usage errors.
#[derive(Debug)]
enum CliError {
    Config(String),
    Runtime(String),
}

impl CliError {
    fn config(msg: impl Into<String>) -> Self {
        CliError::Config(msg.into())
    }

    fn runtime(msg: impl Into<String>) -> Self {
        CliError::Runtime(msg.into())
    }
}

/// A config/validation error naming the offending document field, matching
/// the library's diagnostic style.
fn field_err(field: &str, message: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("invalid field `{field}`: {message}"))
}

type CmdFn = fn(&CommonArgs) -> Result<(), CliError>;

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (args, run): (&CommonArgs, CmdFn) = match &cli.command {
        Command::Simulate(a) => (a, commands::cmd_simulate),
        Command::Estimate(a) => (a, commands::cmd_estimate),
        Command::Experiment(a) => (a, commands::cmd_experiment),
        Command::Variances(a) => (a, commands::cmd_variances),
    };

    if let Some(k) = args.threads {
        if k == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(2);
        }
        // The global pool can be installed only once per process; if it
        // already exists (it never does in this binary, but keep the call
        // infallible) the existing pool is kept.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(k)
            .build_global();
    }

    match run(args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Config(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
        Err(CliError::Runtime(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(3)
        }
    }
}

//! Command-line front end for the diamond-fractal heat kernel library:
//! batch kernel evaluation, bound-constant tables, the verification suite,
//! oracle comparisons, and exact geodesic distances.
//!
//! Outputs are CSV for numeric tables and JSON for structured reports, and
//! are byte-identical across runs with the same configuration and seed.
//! Exit status: 0 on success, 1 when a check fails (or a computation cannot
//! be completed), 2 on a usage or configuration error.

mod commands;
mod config;
mod grid;
mod points;

use clap::{Parser, Subcommand};
use config::{AppError, Ctx};
use std::path::PathBuf;
use std::process::ExitCode;

/// Heat kernels, functional-inequality constants, and verification oracles
/// for generalized diamond fractals.
#[derive(Debug, Parser)]
#[command(name = "dheat", version, about, max_term_width = 100)]
struct Cli {
    /// TOML configuration file; command-line flags override file values.
    #[arg(long, global = true, value_name = "FILE")]
    config: Option<PathBuf>,

    /// Directory receiving output artifacts. Defaults to $DHEAT_OUT_DIR,
    /// then the working directory.
    #[arg(long, global = true, value_name = "DIR")]
    out_dir: Option<PathBuf>,

    /// Cap on worker threads for batch evaluation (0 or absent: all cores).
    #[arg(long, global = true, value_name = "K")]
    jobs: Option<usize>,

    /// Seed for every randomized choice; recorded in reports.
    #[arg(long, global = true, value_name = "SEED")]
    seed: Option<u64>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Evaluate heat-kernel values on a time grid and a list of point
    /// pairs; writes a CSV table with certified truncation errors.
    Kernel(commands::kernel::KernelArgs),
    /// Tabulate the closed-form bound constants (Lipschitz, kernel-drift,
    /// log-Sobolev, ultracontractivity) over a time grid; writes CSV.
    Bounds(commands::bounds::BoundsArgs),
    /// Run the consistency-check suite against the independent oracles;
    /// writes a JSON report. Exits 1 if any non-informational check fails.
    Verify(commands::verify::VerifyArgs),
    /// Compare the closed-form kernel against the spectral solver on a
    /// cable discretization; writes a CSV of probe deviations.
    OracleCompare(commands::oracle::OracleArgs),
    /// Exact geodesic distance between two addressed points, at a finite
    /// level or on the limit space with a certified tolerance.
    Distance(commands::distance::DistanceArgs),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(AppError::Usage(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
        Err(AppError::Run(err)) => {
            eprintln!("error: {err:#}");
            ExitCode::from(1)
        }
    }
}

fn run(cli: Cli) -> Result<bool, AppError> {
    let ctx = Ctx::build(
        cli.config.as_deref(),
        cli.out_dir,
        cli.jobs,
        cli.seed,
    )?;
    match &cli.command {
        Command::Kernel(args) => commands::kernel::run(&ctx, args),
        Command::Bounds(args) => commands::bounds::run(&ctx, args),
        Command::Verify(args) => commands::verify::run(&ctx, args),
        Command::OracleCompare(args) => commands::oracle::run(&ctx, args),
        Command::Distance(args) => commands::distance::run(&ctx, args),
    }
}

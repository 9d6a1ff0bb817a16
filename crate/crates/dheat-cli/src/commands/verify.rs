//! `verify`: run the named consistency-check suite and write a JSON report.
//! The exit status is nonzero exactly when a non-informational check fails.

use crate::config::{describe_space, resolve_times, run_err, AppError, Ctx, SpaceArgs};
use anyhow::Context as _;
use clap::Args;
use dheat::verify::{run_suite, suite_passed, CheckResult, CheckStatus, SuiteConfig};
use dheat::ParameterSequences;
use serde::Serialize;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Deepest level exercised by level-dependent checks.
    #[arg(long, value_name = "L")]
    levels: Option<usize>,

    /// Evaluation time; repeatable.
    #[arg(long = "t", value_name = "T")]
    t: Vec<f64>,

    /// Time grid "A:B:logN" or "A:B:linN".
    #[arg(long, value_name = "GRID")]
    t_grid: Option<String>,

    /// Samples per branch for quadrature-based checks.
    #[arg(long, value_name = "M")]
    grid_points: Option<usize>,

    /// Samples per branch for the spectral/graph discretizations.
    #[arg(long, value_name = "M")]
    oracle_points: Option<usize>,

    /// Random probe pairs per check.
    #[arg(long, value_name = "K")]
    pairs: Option<usize>,

    /// Random-walk sample count.
    #[arg(long, value_name = "K")]
    walk_samples: Option<usize>,

    /// Output JSON report name (relative names land in the output directory).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct SpaceDescriptor {
    j_prefix: Vec<u64>,
    n_prefix: Vec<u64>,
    tail: Option<(u64, u64)>,
}

#[derive(Serialize)]
struct Report {
    space: SpaceDescriptor,
    levels: usize,
    t_grid: Vec<f64>,
    config: SuiteConfig,
    passed: bool,
    results: Vec<CheckResult>,
}

fn descriptor(seq: &ParameterSequences) -> SpaceDescriptor {
    let prefix = seq.prefix_len();
    SpaceDescriptor {
        j_prefix: (1..=prefix).filter_map(|l| seq.j_at(l).ok()).collect(),
        n_prefix: (1..=prefix).filter_map(|l| seq.n_at(l).ok()).collect(),
        tail: seq.tail(),
    }
}

pub fn run(ctx: &Ctx, args: &VerifyArgs) -> Result<bool, AppError> {
    let seq = ctx.space(&args.space)?;
    let table = ctx.file.verify.as_ref();
    let levels = args.levels.or(table.and_then(|v| v.levels)).unwrap_or(2);
    let ts = resolve_times(
        &args.t,
        args.t_grid.as_deref(),
        table.and_then(|v| v.t.as_ref()),
        table.and_then(|v| v.t_grid.as_deref()),
        &[0.1, 0.5, 1.0],
    )?;
    let defaults = SuiteConfig::default();
    let cfg = SuiteConfig {
        grid_points: args
            .grid_points
            .or(table.and_then(|v| v.grid_points))
            .unwrap_or(defaults.grid_points),
        oracle_points: args
            .oracle_points
            .or(table.and_then(|v| v.oracle_points))
            .unwrap_or(defaults.oracle_points),
        pairs: args
            .pairs
            .or(table.and_then(|v| v.pairs))
            .unwrap_or(defaults.pairs),
        walk_samples: args
            .walk_samples
            .or(table.and_then(|v| v.walk_samples))
            .unwrap_or(defaults.walk_samples),
        seed: ctx.seed,
    };

    println!(
        "verify: {} | levels 0..={} | t = {:?} | seed {}",
        describe_space(&seq),
        levels,
        ts,
        cfg.seed
    );
    let results = run_suite(&seq, levels, &ts, &cfg);
    let passed = suite_passed(&results);

    let name_width = results.iter().map(|r| r.name.len()).max().unwrap_or(8);
    for r in &results {
        println!(
            "  {:<4} {:<name_width$}  measured {:>12.5e}  bound {:>12.5e}  {}",
            r.status.to_string(),
            r.name,
            r.measured,
            r.bound,
            r.notes,
        );
    }
    let infos = results
        .iter()
        .filter(|r| r.status == CheckStatus::Info)
        .count();
    let fails = results
        .iter()
        .filter(|r| r.status == CheckStatus::Fail)
        .count();
    println!(
        "verify: {} — {} checks, {} informational, {} failed",
        if passed { "PASS" } else { "FAIL" },
        results.len(),
        infos,
        fails,
    );

    let report = Report {
        space: descriptor(&seq),
        levels,
        t_grid: ts,
        config: cfg,
        passed,
        results,
    };
    let path = ctx.artifact_path(
        args.output.as_deref(),
        table.and_then(|v| v.output.as_deref()),
        "verify.json",
    )?;
    let json = serde_json::to_string_pretty(&report)
        .context("cannot serialize the report")
        .map_err(run_err)?;
    std::fs::write(&path, json + "\n")
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(run_err)?;
    println!("verify: wrote {}", path.display());
    Ok(passed)
}

//! `bounds`: tabulate the closed-form constants over a time grid — spatial
//! Lipschitz constant of the kernel, kernel-drift (total-variation) constant,
//! log-Sobolev constant, and the mean-square-to-uniform operator norm.

use crate::config::{describe_space, resolve_times, run_err, AppError, Ctx, SpaceArgs};
use anyhow::{anyhow, Context as _};
use clap::Args;
use dheat::estimates::{
    lipschitz_bound, logsob_constant, ultracontractivity_bound, wbe_constant,
};
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Evaluation time; repeatable.
    #[arg(long = "t", value_name = "T")]
    t: Vec<f64>,

    /// Time grid "A:B:logN" or "A:B:linN" (default 0.01:10:log25).
    #[arg(long, value_name = "GRID")]
    t_grid: Option<String>,

    /// Certified truncation-error budget per constant.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,

    /// Output CSV name (relative names land in the output directory).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

pub fn run(ctx: &Ctx, args: &BoundsArgs) -> Result<bool, AppError> {
    let seq = ctx.space(&args.space)?;
    let table = ctx.file.bounds.as_ref();
    let ts = resolve_times(
        &args.t,
        args.t_grid.as_deref(),
        table.and_then(|b| b.t.as_ref()),
        table.and_then(|b| b.t_grid.as_deref()),
        &[],
    )
    .and_then(|ts| {
        if ts.is_empty() {
            crate::grid::parse_time_grid("0.01:10:log25").map_err(AppError::Usage)
        } else {
            Ok(ts)
        }
    })?;
    let tol = args.tol.or(table.and_then(|b| b.tol)).unwrap_or(1e-10);

    let mut rows: Vec<[f64; 5]> = Vec::with_capacity(ts.len());
    for &t in &ts {
        let lip = lipschitz_bound(&seq, t, tol)
            .with_context(|| format!("Lipschitz constant at t = {t}"))
            .map_err(run_err)?;
        let drift = wbe_constant(&seq, t, tol)
            .with_context(|| format!("kernel-drift constant at t = {t}"))
            .map_err(run_err)?;
        let logsob = logsob_constant(&seq, t, tol)
            .with_context(|| format!("log-Sobolev constant at delta = {t}"))
            .map_err(run_err)?;
        let ultra = ultracontractivity_bound(&seq, t, tol)
            .with_context(|| format!("ultracontractivity bound at t = {t}"))
            .map_err(run_err)?;
        rows.push([t, lip.value, drift.value, logsob.value, ultra.value]);
    }

    let path = ctx.artifact_path(
        args.output.as_deref(),
        table.and_then(|b| b.output.as_deref()),
        "bounds.csv",
    )?;
    let mut writer = csv::Writer::from_path(&path)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(run_err)?;
    writer
        .write_record(["t", "lipschitz", "wbe", "logsob", "ultracontractivity"])
        .map_err(|e| run_err(anyhow!(e)))?;
    for row in &rows {
        writer
            .write_record(row.iter().map(f64::to_string))
            .map_err(|e| run_err(anyhow!(e)))?;
    }
    writer.flush().map_err(|e| run_err(anyhow!(e)))?;

    println!("bounds: {}", describe_space(&seq));
    println!(
        "{:>12}  {:>14}  {:>14}  {:>14}  {:>14}",
        "t", "lipschitz", "wbe", "logsob", "ultracontract"
    );
    for row in &rows {
        println!(
            "{:>12.6}  {:>14.8}  {:>14.8}  {:>14.8}  {:>14.8}",
            row[0], row[1], row[2], row[3], row[4]
        );
    }
    println!("bounds: wrote {}", path.display());
    Ok(true)
}

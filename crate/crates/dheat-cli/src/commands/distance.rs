//! `distance`: exact geodesic distance between two addressed points, either
//! on a finite level or on the limit space with a certified tolerance.

use crate::config::{bail_usage, describe_space, run_err, usage, AppError, Ctx, SpaceArgs};
use anyhow::{anyhow, Context as _};
use clap::Args;
use dheat::geometry::{distance_level, distance_limit};
use dheat::ParameterSequences;
use serde::Serialize;
use std::path::PathBuf;

use crate::points::{build_point, PointInput};

#[derive(Debug, Args)]
pub struct DistanceArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Angle of the first point (radians).
    #[arg(long, value_name = "THETA")]
    theta_x: Option<f64>,

    /// Copy labels of the first point, comma separated (deepest last).
    #[arg(long, value_delimiter = ',', value_name = "W1,W2,...")]
    labels_x: Option<Vec<u32>>,

    /// Angle of the second point (radians).
    #[arg(long, value_name = "THETA")]
    theta_y: Option<f64>,

    /// Copy labels of the second point, comma separated.
    #[arg(long, value_delimiter = ',', value_name = "W1,W2,...")]
    labels_y: Option<Vec<u32>>,

    /// Level of the metric (default: the deepest address length given).
    #[arg(long, value_name = "I")]
    level: Option<usize>,

    /// Compute the limit-space distance with a certified tolerance.
    #[arg(long)]
    limit: bool,

    /// Tolerance certified for the limit distance.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,

    /// Optional JSON artifact name (relative names land in the output
    /// directory). Nothing is written without it.
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

#[derive(Serialize)]
struct DistanceReport {
    space: String,
    x: ReportPoint,
    y: ReportPoint,
    kind: &'static str,
    /// Metric level: the requested one, or for the limit metric the level
    /// the approximation was evaluated at.
    level: usize,
    value: f64,
    /// Certified bound on the remaining metric tail (0 for finite levels).
    tail_bound: f64,
}

#[derive(Serialize)]
struct ReportPoint {
    theta: f64,
    labels: Vec<u32>,
}

fn resolve_point(
    flag_theta: Option<f64>,
    flag_labels: Option<&Vec<u32>>,
    file_point: Option<&PointInput>,
    which: &str,
) -> Result<PointInput, AppError> {
    match (flag_theta, file_point) {
        (Some(theta), _) => Ok(PointInput {
            theta,
            labels: flag_labels.cloned().unwrap_or_default(),
        }),
        (None, Some(p)) => {
            if flag_labels.is_some() {
                return bail_usage(format!(
                    "--labels-{which} was given without --theta-{which}"
                ));
            }
            Ok(p.clone())
        }
        (None, None) => bail_usage(format!(
            "point {which} is missing: pass --theta-{which} (and --labels-{which}), \
             or set it in the [distance] table"
        )),
    }
}

pub fn run(ctx: &Ctx, args: &DistanceArgs) -> Result<bool, AppError> {
    let seq: ParameterSequences = ctx.space(&args.space)?;
    let table = ctx.file.distance.as_ref();

    let x_in = resolve_point(
        args.theta_x,
        args.labels_x.as_ref(),
        table.and_then(|d| d.x.as_ref()),
        "x",
    )?;
    let y_in = resolve_point(
        args.theta_y,
        args.labels_y.as_ref(),
        table.and_then(|d| d.y.as_ref()),
        "y",
    )?;
    let limit = args.limit || table.and_then(|d| d.limit).unwrap_or(false);

    let (kind, level, value, tail_bound, x, y);
    if limit {
        let tol = args.tol.or(table.and_then(|d| d.tol)).unwrap_or(1e-9);
        x = build_point(&seq, &x_in, None)?;
        y = build_point(&seq, &y_in, None)?;
        let d = distance_limit(&seq, &x, &y, tol)
            .context("limit distance failed")
            .map_err(run_err)?;
        kind = "limit";
        level = d.level;
        value = d.value;
        tail_bound = d.tail_bound;
        println!(
            "distance: d_limit = {} (+{:.2e} certified tail, evaluated at level {})",
            value, tail_bound, level
        );
    } else {
        let fallback = x_in.labels.len().max(y_in.labels.len());
        level = args
            .level
            .or(table.and_then(|d| d.level))
            .unwrap_or(fallback);
        x = build_point(&seq, &x_in, Some(level))?;
        y = build_point(&seq, &y_in, Some(level))?;
        value = distance_level(&seq, &x, &y, level)
            .map_err(|e| usage(anyhow!(e)))?;
        kind = "level";
        tail_bound = 0.0;
        println!("distance: d_{level} = {value}");
    }

    if args.output.is_some() || table.and_then(|d| d.output.as_ref()).is_some() {
        let path = ctx.artifact_path(
            args.output.as_deref(),
            table.and_then(|d| d.output.as_deref()),
            "distance.json",
        )?;
        let report = DistanceReport {
            space: describe_space(&seq),
            x: ReportPoint {
                theta: x.theta(),
                labels: x.labels().to_vec(),
            },
            y: ReportPoint {
                theta: y.theta(),
                labels: y.labels().to_vec(),
            },
            kind,
            level,
            value,
            tail_bound,
        };
        let json = serde_json::to_string_pretty(&report)
            .context("cannot serialize the report")
            .map_err(run_err)?;
        std::fs::write(&path, json + "\n")
            .with_context(|| format!("cannot write {}", path.display()))
            .map_err(run_err)?;
        println!("distance: wrote {}", path.display());
    }
    Ok(true)
}

//! `kernel`: batch heat-kernel evaluation over times × pairs, written as a
//! CSV table with a certified truncation-error column.

use crate::config::{bail_usage, describe_space, resolve_times, run_err, usage, AppError, Ctx, SpaceArgs};
use crate::points::{self, PairInput};
use anyhow::{anyhow, Context as _};
use clap::Args;
use dheat::geometry::PointAddress;
use dheat::kernels::{batch_evaluate, KernelEvalConfig, KernelTarget};
use dheat::ParameterSequences;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use std::path::PathBuf;

#[derive(Debug, Args)]
pub struct KernelArgs {
    #[command(flatten)]
    space: SpaceArgs,

    /// Level i of the kernel (the graph obtained after i subdivisions).
    #[arg(long, value_name = "I")]
    level: Option<usize>,

    /// Evaluate the limit-space kernel instead of a finite level. Random
    /// pairs are then sampled at depth --level (default 2).
    #[arg(long)]
    limit: bool,

    /// Evaluation time; repeatable.
    #[arg(long = "t", value_name = "T")]
    t: Vec<f64>,

    /// Time grid "A:B:logN" or "A:B:linN".
    #[arg(long, value_name = "GRID")]
    t_grid: Option<String>,

    /// JSON pair file: [{"x": {"theta": .., "labels": [..]}, "y": ..}, ..].
    #[arg(long, value_name = "FILE")]
    pairs: Option<PathBuf>,

    /// Sample this many random pairs instead of reading a pair file.
    #[arg(long, value_name = "K")]
    random_pairs: Option<usize>,

    /// Certified truncation-error budget per kernel value.
    #[arg(long, value_name = "TOL")]
    tol: Option<f64>,

    /// Output CSV name (relative names land in the output directory).
    #[arg(long, value_name = "FILE")]
    output: Option<PathBuf>,
}

enum PairSource {
    File(PathBuf),
    Random(usize),
}

pub fn run(ctx: &Ctx, args: &KernelArgs) -> Result<bool, AppError> {
    let seq = ctx.space(&args.space)?;
    let table = ctx.file.kernel.as_ref();

    let limit = args.limit || table.and_then(|k| k.limit).unwrap_or(false);
    let level = args.level.or(table.and_then(|k| k.level));
    let target = if limit {
        KernelTarget::Limit
    } else {
        match level {
            Some(i) => KernelTarget::Level(i),
            None => return bail_usage("kernel needs --level I or --limit"),
        }
    };

    let ts = resolve_times(
        &args.t,
        args.t_grid.as_deref(),
        table.and_then(|k| k.t.as_ref()),
        table.and_then(|k| k.t_grid.as_deref()),
        &[1.0],
    )?;

    let source = match (&args.pairs, args.random_pairs) {
        (Some(_), Some(_)) => {
            return bail_usage("--pairs and --random-pairs are mutually exclusive")
        }
        (Some(p), None) => PairSource::File(p.clone()),
        (None, Some(k)) => PairSource::Random(k),
        (None, None) => match (
            table.and_then(|k| k.pairs.clone()),
            table.and_then(|k| k.random_pairs),
        ) {
            (Some(_), Some(_)) => {
                return bail_usage(
                    "the [kernel] table sets both pairs and random_pairs; keep one",
                )
            }
            (Some(p), None) => PairSource::File(p),
            (None, Some(k)) => PairSource::Random(k),
            (None, None) => PairSource::Random(16),
        },
    };

    let address_level = match target {
        KernelTarget::Level(i) => Some(i),
        KernelTarget::Limit => None,
    };
    let pairs: Vec<(PointAddress, PointAddress)> = match source {
        PairSource::File(path) => {
            let inputs = points::load_pairs(&path)?;
            build_pairs(&seq, &inputs, address_level)?
        }
        PairSource::Random(count) => {
            if count == 0 {
                return bail_usage("--random-pairs needs at least one pair");
            }
            let depth = match target {
                KernelTarget::Level(i) => i,
                KernelTarget::Limit => level.unwrap_or(2),
            };
            let mut rng = ChaCha8Rng::seed_from_u64(ctx.seed);
            points::random_pairs(&seq, depth, count, &mut rng)?
        }
    };

    let tol = args.tol.or(table.and_then(|k| k.tol));
    let mut cfg = KernelEvalConfig::default();
    if let Some(tol) = tol {
        if !(tol > 0.0 && tol.is_finite()) {
            return bail_usage(format!("tolerance must be positive and finite, got {tol}"));
        }
        cfg = KernelEvalConfig::with_tol(tol);
    }

    let entries = batch_evaluate(&seq, target, &ts, &pairs, &cfg)
        .context("kernel evaluation failed")
        .map_err(run_err)?;

    let path = ctx.artifact_path(
        args.output.as_deref(),
        table.and_then(|k| k.output.as_deref()),
        "kernel.csv",
    )?;
    let mut writer = csv::Writer::from_path(&path)
        .with_context(|| format!("cannot write {}", path.display()))
        .map_err(run_err)?;
    writer
        .write_record([
            "t",
            "theta_x",
            "labels_x",
            "theta_y",
            "labels_y",
            "value",
            "certified_error",
        ])
        .map_err(|e| run_err(anyhow!(e)))?;
    let mut max_tail = 0.0f64;
    for e in &entries {
        max_tail = max_tail.max(e.tail_bound);
        writer
            .write_record([
                e.t.to_string(),
                e.x.theta().to_string(),
                points::format_labels(e.x.labels()),
                e.y.theta().to_string(),
                points::format_labels(e.y.labels()),
                e.value.to_string(),
                format!("{:e}", e.tail_bound),
            ])
            .map_err(|e| run_err(anyhow!(e)))?;
    }
    writer.flush().map_err(|e| run_err(anyhow!(e)))?;

    let what = match target {
        KernelTarget::Level(i) => format!("level-{i} kernel"),
        KernelTarget::Limit => "limit kernel".to_string(),
    };
    println!(
        "kernel: {} on {}; {} times x {} pairs -> {} rows, max certified error {:.3e}",
        what,
        describe_space(&seq),
        ts.len(),
        pairs.len(),
        entries.len(),
        max_tail,
    );
    println!("kernel: wrote {}", path.display());
    Ok(true)
}

fn build_pairs(
    seq: &ParameterSequences,
    inputs: &[PairInput],
    level: Option<usize>,
) -> Result<Vec<(PointAddress, PointAddress)>, AppError> {
    inputs
        .iter()
        .enumerate()
        .map(|(idx, pair)| {
            let x = points::build_point(seq, &pair.x, level)
                .map_err(|e| annotate(e, idx, "x"))?;
            let y = points::build_point(seq, &pair.y, level)
                .map_err(|e| annotate(e, idx, "y"))?;
            Ok((x, y))
        })
        .collect()
}

fn annotate(err: AppError, idx: usize, side: &str) -> AppError {
    match err {
        AppError::Usage(e) => usage(anyhow!("pair {idx}, point {side}: {e:#}")),
        other => other,
    }
}

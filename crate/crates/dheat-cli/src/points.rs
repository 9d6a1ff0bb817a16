//! Point and pair inputs: JSON pair files, address bridging between levels,
//! random pair sampling, and label formatting for CSV output.

use crate::config::{usage, AppError};
use anyhow::{anyhow, Context as _};
use dheat::geometry::PointAddress;
use dheat::ParameterSequences;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::Deserialize;
use std::path::Path;

/// One point as written in configuration and pair files.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PointInput {
    pub theta: f64,
    #[serde(default)]
    pub labels: Vec<u32>,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PairInput {
    pub x: PointInput,
    pub y: PointInput,
}

/// Read a JSON pair file: `[{"x": {"theta": .., "labels": [..]}, "y": ..}, ..]`.
pub fn load_pairs(path: &Path) -> Result<Vec<PairInput>, AppError> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("cannot read pair file {}", path.display()))
        .map_err(usage)?;
    let pairs: Vec<PairInput> = serde_json::from_str(&text)
        .with_context(|| format!("invalid pair file {}", path.display()))
        .map_err(usage)?;
    if pairs.is_empty() {
        return Err(usage(anyhow!("pair file {} is empty", path.display())));
    }
    Ok(pairs)
}

/// Build a validated address, optionally bridged to a target level: an
/// address shorter than the target is extended canonically (the thread that
/// keeps picking copy 1), a longer one is rejected rather than silently
/// projected.
pub fn build_point(
    seq: &ParameterSequences,
    input: &PointInput,
    target_level: Option<usize>,
) -> Result<PointAddress, AppError> {
    let point = PointAddress::new(seq, input.theta, input.labels.clone()).map_err(usage)?;
    match target_level {
        None => Ok(point),
        Some(level) => {
            if point.level() > level {
                return Err(usage(anyhow!(
                    "point (theta = {}, labels = {:?}) is addressed at level {} but the \
                     operation runs at level {level}; drop the deepest labels explicitly",
                    input.theta,
                    input.labels,
                    point.level()
                )));
            }
            point.view_at(seq, level).map_err(usage)
        }
    }
}

/// Uniform random pairs at the given address depth.
pub fn random_pairs(
    seq: &ParameterSequences,
    depth: usize,
    count: usize,
    rng: &mut ChaCha8Rng,
) -> Result<Vec<(PointAddress, PointAddress)>, AppError> {
    let mut out = Vec::with_capacity(count);
    for _ in 0..count {
        let x = random_point(seq, depth, rng)?;
        let y = random_point(seq, depth, rng)?;
        out.push((x, y));
    }
    Ok(out)
}

fn random_point(
    seq: &ParameterSequences,
    depth: usize,
    rng: &mut ChaCha8Rng,
) -> Result<PointAddress, AppError> {
    let theta = rng.gen_range(0.0..std::f64::consts::TAU);
    let mut labels = Vec::with_capacity(depth);
    for l in 1..=depth {
        let n_l = seq.n_at(l).map_err(usage)?;
        labels.push(rng.gen_range(1..=n_l) as u32);
    }
    PointAddress::new(seq, theta, labels).map_err(usage)
}

/// Dot-separated label path for CSV cells; empty for circle-level points.
pub fn format_labels(labels: &[u32]) -> String {
    labels
        .iter()
        .map(u32::to_string)
        .collect::<Vec<_>>()
        .join(".")
}

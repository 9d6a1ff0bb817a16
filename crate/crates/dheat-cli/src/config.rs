//! Configuration resolution: TOML file schema, flag/file/default precedence,
//! output-path layout, and the shared run context.
//!
//! Precedence is strict: a command-line flag beats the configuration file,
//! which beats the built-in default. The space description is atomic — if
//! any space flag is given, the whole space comes from flags.

use anyhow::{anyhow, Context as _};
use clap::Args;
use dheat::ParameterSequences;
use serde::Deserialize;
use std::fs;
use std::path::{Path, PathBuf};

/// Error carrying the exit-code class: usage/configuration problems exit 2,
/// failures of the actual computation exit 1.
#[derive(Debug)]
pub enum AppError {
    Usage(anyhow::Error),
    Run(anyhow::Error),
}

pub fn usage(err: impl Into<anyhow::Error>) -> AppError {
    AppError::Usage(err.into())
}

pub fn run_err(err: impl Into<anyhow::Error>) -> AppError {
    AppError::Run(err.into())
}

/// Parsed configuration file. Unknown keys anywhere are rejected.
#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    pub space: Option<SpaceTable>,
    pub run: Option<RunTable>,
    pub kernel: Option<KernelTable>,
    pub bounds: Option<BoundsTable>,
    pub verify: Option<VerifyTable>,
    pub oracle_compare: Option<OracleTable>,
    pub distance: Option<DistanceTable>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceTable {
    /// Regular space: `[J, N]` reused at every level.
    pub regular: Option<Vec<u64>>,
    /// Per-level subdivision counts (levels `1..=len`).
    pub j_seq: Option<Vec<u64>>,
    /// Per-level copy counts, same length as `j_seq`.
    pub n_seq: Option<Vec<u64>>,
    /// Regular tail `[J, N]` appended beyond the explicit prefix.
    pub tail: Option<Vec<u64>>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunTable {
    pub seed: Option<u64>,
    pub jobs: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelTable {
    pub level: Option<usize>,
    pub limit: Option<bool>,
    pub t: Option<Vec<f64>>,
    pub t_grid: Option<String>,
    pub pairs: Option<PathBuf>,
    pub random_pairs: Option<usize>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BoundsTable {
    pub t: Option<Vec<f64>>,
    pub t_grid: Option<String>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyTable {
    pub levels: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub t_grid: Option<String>,
    pub grid_points: Option<usize>,
    pub oracle_points: Option<usize>,
    pub pairs: Option<usize>,
    pub walk_samples: Option<usize>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OracleTable {
    pub level: Option<usize>,
    pub m: Option<usize>,
    pub t: Option<Vec<f64>>,
    pub probes: Option<usize>,
    pub tol: Option<f64>,
    pub output: Option<PathBuf>,
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DistanceTable {
    pub level: Option<usize>,
    pub limit: Option<bool>,
    pub tol: Option<f64>,
    pub x: Option<crate::points::PointInput>,
    pub y: Option<crate::points::PointInput>,
    pub output: Option<PathBuf>,
}

/// Space description shared by every subcommand.
#[derive(Debug, Clone, Default, Args)]
pub struct SpaceArgs {
    /// Regular space: subdivision count J and copy count N reused at every
    /// level (both at least 2).
    #[arg(long, num_args = 2, value_names = ["J", "N"])]
    pub regular: Option<Vec<u64>>,

    /// Per-level subdivision counts, comma separated (defines levels
    /// 1..=len). Requires --n-seq of the same length.
    #[arg(long, value_delimiter = ',', value_name = "J1,J2,...")]
    pub j_seq: Option<Vec<u64>>,

    /// Per-level copy counts, comma separated, same length as --j-seq.
    #[arg(long, value_delimiter = ',', value_name = "N1,N2,...")]
    pub n_seq: Option<Vec<u64>>,

    /// Regular tail "J,N" appended beyond the explicit prefix, making the
    /// space infinitely subdivided (required by the limit-space bounds).
    #[arg(long, num_args = 1..=2, value_delimiter = ',', value_name = "J,N")]
    pub tail: Option<Vec<u64>>,
}

impl SpaceArgs {
    fn is_empty(&self) -> bool {
        self.regular.is_none()
            && self.j_seq.is_none()
            && self.n_seq.is_none()
            && self.tail.is_none()
    }
}

fn pair_of(name: &str, values: &[u64]) -> Result<(u64, u64), AppError> {
    match values {
        [a, b] => Ok((*a, *b)),
        _ => Err(usage(anyhow!(
            "{name} takes exactly two values (subdivision count, copy count), got {values:?}"
        ))),
    }
}

fn space_from_parts(
    regular: Option<&Vec<u64>>,
    j_seq: Option<&Vec<u64>>,
    n_seq: Option<&Vec<u64>>,
    tail: Option<&Vec<u64>>,
) -> Result<ParameterSequences, AppError> {
    if let Some(reg) = regular {
        if j_seq.is_some() || n_seq.is_some() || tail.is_some() {
            return Err(usage(anyhow!(
                "a regular space cannot be combined with explicit sequences or a tail"
            )));
        }
        let (j, n) = pair_of("the regular space", reg)?;
        return ParameterSequences::regular(j, n).map_err(usage);
    }
    let tail = tail.map(|t| pair_of("the tail", t)).transpose()?;
    match (j_seq, n_seq) {
        (Some(j), Some(n)) => {
            ParameterSequences::new(j.clone(), n.clone(), tail).map_err(usage)
        }
        (None, None) => match tail {
            Some((j, n)) => ParameterSequences::regular(j, n).map_err(usage),
            None => Err(usage(anyhow!(
                "no space given: pass --regular J N, or --j-seq/--n-seq (optionally with --tail), \
                 or a [space] table in the configuration file"
            ))),
        },
        _ => Err(usage(anyhow!(
            "--j-seq and --n-seq must be given together"
        ))),
    }
}

/// Shared context: parsed file config, resolved seed and output directory.
pub struct Ctx {
    pub file: FileConfig,
    pub seed: u64,
    pub out_dir: PathBuf,
}

impl Ctx {
    pub fn build(
        config_path: Option<&Path>,
        out_dir_flag: Option<PathBuf>,
        jobs_flag: Option<usize>,
        seed_flag: Option<u64>,
    ) -> Result<Self, AppError> {
        let file = match config_path {
            Some(path) => {
                let text = fs::read_to_string(path)
                    .with_context(|| format!("cannot read configuration file {}", path.display()))
                    .map_err(AppError::Usage)?;
                toml::from_str::<FileConfig>(&text)
                    .with_context(|| format!("invalid configuration file {}", path.display()))
                    .map_err(AppError::Usage)?
            }
            None => FileConfig::default(),
        };
        let run = file.run.as_ref();
        let seed = seed_flag
            .or(run.and_then(|r| r.seed))
            .unwrap_or(7);
        let out_dir = out_dir_flag
            .or_else(|| run.and_then(|r| r.output_dir.clone()))
            .or_else(|| std::env::var_os("DHEAT_OUT_DIR").map(PathBuf::from))
            .unwrap_or_else(|| PathBuf::from("."));
        let jobs = jobs_flag.or(run.and_then(|r| r.jobs)).unwrap_or(0);
        if jobs > 0 {
            rayon::ThreadPoolBuilder::new()
                .num_threads(jobs)
                .build_global()
                .context("cannot configure the worker thread pool")
                .map_err(AppError::Run)?;
        }
        Ok(Self { file, seed, out_dir })
    }

    /// Resolve the space: flags (atomically) beat the file's [space] table.
    pub fn space(&self, args: &SpaceArgs) -> Result<ParameterSequences, AppError> {
        if !args.is_empty() {
            return space_from_parts(
                args.regular.as_ref(),
                args.j_seq.as_ref(),
                args.n_seq.as_ref(),
                args.tail.as_ref(),
            );
        }
        match self.file.space.as_ref() {
            Some(table) => space_from_parts(
                table.regular.as_ref(),
                table.j_seq.as_ref(),
                table.n_seq.as_ref(),
                table.tail.as_ref(),
            ),
            None => space_from_parts(None, None, None, None),
        }
    }

    /// Full path of an output artifact: an absolute name is used as given,
    /// a relative one lands in the output directory. Parent directories are
    /// created.
    pub fn artifact_path(
        &self,
        flag: Option<&Path>,
        file: Option<&Path>,
        default_name: &str,
    ) -> Result<PathBuf, AppError> {
        let name = flag
            .or(file)
            .map(Path::to_path_buf)
            .unwrap_or_else(|| PathBuf::from(default_name));
        let full = if name.is_absolute() {
            name
        } else {
            self.out_dir.join(name)
        };
        if let Some(parent) = full.parent() {
            if !parent.as_os_str().is_empty() {
                fs::create_dir_all(parent)
                    .with_context(|| format!("cannot create output directory {}", parent.display()))
                    .map_err(AppError::Run)?;
            }
        }
        Ok(full)
    }
}

/// Merge a repeatable `--t` flag with an optional grid expression; flags
/// beat the file; an empty result falls back to `default`.
pub fn resolve_times(
    flag_t: &[f64],
    flag_grid: Option<&str>,
    file_t: Option<&Vec<f64>>,
    file_grid: Option<&str>,
    default: &[f64],
) -> Result<Vec<f64>, AppError> {
    let mut ts: Vec<f64> = Vec::new();
    if !flag_t.is_empty() || flag_grid.is_some() {
        ts.extend_from_slice(flag_t);
        if let Some(g) = flag_grid {
            ts.extend(crate::grid::parse_time_grid(g).map_err(AppError::Usage)?);
        }
    } else {
        if let Some(t) = file_t {
            ts.extend_from_slice(t);
        }
        if let Some(g) = file_grid {
            ts.extend(crate::grid::parse_time_grid(g).map_err(AppError::Usage)?);
        }
    }
    if ts.is_empty() {
        ts.extend_from_slice(default);
    }
    for &t in &ts {
        if !(t > 0.0 && t.is_finite()) {
            return Err(usage(anyhow!("times must be positive and finite, got {t}")));
        }
    }
    Ok(ts)
}

/// Human-readable space description for summaries.
pub fn describe_space(seq: &ParameterSequences) -> String {
    let prefix = seq.prefix_len();
    let mut parts: Vec<String> = Vec::new();
    if prefix > 0 {
        let js: Vec<String> = (1..=prefix)
            .map(|l| seq.j_at(l).map(|v| v.to_string()).unwrap_or_default())
            .collect();
        let ns: Vec<String> = (1..=prefix)
            .map(|l| seq.n_at(l).map(|v| v.to_string()).unwrap_or_default())
            .collect();
        parts.push(format!("j = [{}], n = [{}]", js.join(","), ns.join(",")));
    }
    match seq.tail() {
        Some((j, n)) if prefix == 0 => parts.push(format!("regular j = {j}, n = {n}")),
        Some((j, n)) => parts.push(format!("tail j = {j}, n = {n}")),
        None => parts.push("finite prefix only".into()),
    }
    parts.join("; ")
}

pub fn bail_usage<T>(msg: impl Into<String>) -> Result<T, AppError> {
    Err(usage(anyhow!(msg.into())))
}

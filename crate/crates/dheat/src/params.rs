//! Branching parameter sequences `{j_l}`, `{n_l}` and everything derived from
//! them alone: cumulative products `J_i`, `N_i`, log-space views that never
//! overflow, and the admissibility probe for the kernel-convergence
//! assumption (`N_i * exp(-J_i^2 t)` must stay bounded for small `t`).
//!
//! Level 0 is the circle and contributes `j_0 = n_0 = 1` by convention; all
//! explicit entries describe levels `1, 2, ...` and must be at least 2. A
//! sequence is either a finite explicit prefix (the space is only defined up
//! to that level) or a prefix plus a regular tail `(j*, n*)` repeated forever.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParamError {
    #[error("parameter {name}_{level} = {value}, but every branching entry must be >= 2")]
    EntryTooSmall {
        name: &'static str,
        level: usize,
        value: u64,
    },
    #[error("j-prefix has {j_len} entries but n-prefix has {n_len}; the prefixes must pair up")]
    PrefixLengthMismatch { j_len: usize, n_len: usize },
    #[error("level {level} is beyond the explicit prefix (length {prefix_len}) and no regular tail is set")]
    UndefinedLevel { level: usize, prefix_len: usize },
    #[error("cumulative product overflows 64-bit integers at level {level}")]
    Overflow { level: usize },
    #[error("probe grid is empty")]
    EmptyGrid,
    #[error("time parameter {t} must be positive and finite")]
    InvalidTime { t: f64 },
    #[error("probe depth {depth} is too shallow to read a trend (need at least {min})")]
    DepthTooShallow { depth: usize, min: usize },
}

/// The two branching sequences defining a generalized diamond fractal.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParameterSequences {
    j: Vec<u64>,
    n: Vec<u64>,
    #[serde(default)]
    tail: Option<(u64, u64)>,
}

impl ParameterSequences {
    /// Explicit prefix plus optional regular tail. Prefixes must have equal
    /// length and every entry (prefix and tail) must be at least 2.
    pub fn new(j: Vec<u64>, n: Vec<u64>, tail: Option<(u64, u64)>) -> Result<Self, ParamError> {
        if j.len() != n.len() {
            return Err(ParamError::PrefixLengthMismatch {
                j_len: j.len(),
                n_len: n.len(),
            });
        }
        for (idx, &v) in j.iter().enumerate() {
            if v < 2 {
                return Err(ParamError::EntryTooSmall {
                    name: "j",
                    level: idx + 1,
                    value: v,
                });
            }
        }
        for (idx, &v) in n.iter().enumerate() {
            if v < 2 {
                return Err(ParamError::EntryTooSmall {
                    name: "n",
                    level: idx + 1,
                    value: v,
                });
            }
        }
        if let Some((js, ns)) = tail {
            if js < 2 {
                return Err(ParamError::EntryTooSmall {
                    name: "j*",
                    level: j.len() + 1,
                    value: js,
                });
            }
            if ns < 2 {
                return Err(ParamError::EntryTooSmall {
                    name: "n*",
                    level: n.len() + 1,
                    value: ns,
                });
            }
        }
        Ok(Self { j, n, tail })
    }

    /// Fully regular sequence: `j_l = j`, `n_l = n` for every level.
    pub fn regular(j: u64, n: u64) -> Result<Self, ParamError> {
        Self::new(Vec::new(), Vec::new(), Some((j, n)))
    }

    pub fn prefix_len(&self) -> usize {
        self.j.len()
    }

    pub fn tail(&self) -> Option<(u64, u64)> {
        self.tail
    }

    /// Deepest level at which the space is defined; `None` means unbounded
    /// (a regular tail is present).
    pub fn max_defined_level(&self) -> Option<usize> {
        match self.tail {
            Some(_) => None,
            None => Some(self.j.len()),
        }
    }

    fn entry_at(&self, prefix: &[u64], tail: u64, has_tail: bool, level: usize) -> Result<u64, ParamError> {
        if level == 0 {
            return Ok(1);
        }
        if level <= prefix.len() {
            return Ok(prefix[level - 1]);
        }
        if has_tail {
            return Ok(tail);
        }
        Err(ParamError::UndefinedLevel {
            level,
            prefix_len: prefix.len(),
        })
    }

    /// Subdivision count `j_l` (with `j_0 = 1`).
    pub fn j_at(&self, level: usize) -> Result<u64, ParamError> {
        let (tj, has) = match self.tail {
            Some((tj, _)) => (tj, true),
            None => (0, false),
        };
        self.entry_at(&self.j, tj, has, level)
    }

    /// Copy count `n_l` (with `n_0 = 1`).
    pub fn n_at(&self, level: usize) -> Result<u64, ParamError> {
        let (tn, has) = match self.tail {
            Some((_, tn)) => (tn, true),
            None => (0, false),
        };
        self.entry_at(&self.n, tn, has, level)
    }

    /// Cumulative products `(J_i, N_i)` with overflow detection.
    pub fn cumulative(&self, i: usize) -> Result<(u64, u64), ParamError> {
        let mut jj: u64 = 1;
        let mut nn: u64 = 1;
        for level in 1..=i {
            jj = jj
                .checked_mul(self.j_at(level)?)
                .ok_or(ParamError::Overflow { level })?;
            nn = nn
                .checked_mul(self.n_at(level)?)
                .ok_or(ParamError::Overflow { level })?;
        }
        Ok((jj, nn))
    }

    /// `(J_i, N_i)` as floats. Exact while the products fit in 53 bits, which
    /// covers every level at which kernel terms are still above underflow.
    pub fn cumulative_f64(&self, i: usize) -> Result<(f64, f64), ParamError> {
        let mut jj = 1.0f64;
        let mut nn = 1.0f64;
        for level in 1..=i {
            jj *= self.j_at(level)? as f64;
            nn *= self.n_at(level)? as f64;
        }
        Ok((jj, nn))
    }

    /// `(ln J_i, ln N_i)`; immune to overflow at any depth.
    pub fn ln_cumulative(&self, i: usize) -> Result<(f64, f64), ParamError> {
        let mut lj = 0.0f64;
        let mut ln = 0.0f64;
        for level in 1..=i {
            lj += (self.j_at(level)? as f64).ln();
            ln += (self.n_at(level)? as f64).ln();
        }
        Ok((lj, ln))
    }
}

/// Outcome of probing the convergence assumption on a finite range of levels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum AssumptionVerdict {
    /// The log-terms decrease strictly over the deepest probed levels.
    Pass,
    /// The log-terms increase strictly over the deepest probed levels.
    Fail,
    /// No clear trend at this depth.
    Inconclusive,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionEntry {
    pub t: f64,
    /// `ln N_i - J_i^2 t` for `i = 0..=depth`.
    pub log_terms: Vec<f64>,
    pub sup_log_term: f64,
    pub verdict: AssumptionVerdict,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AssumptionReport {
    pub depth: usize,
    pub entries: Vec<AssumptionEntry>,
    /// Pass only if every probed time passes; Fail if any probed time fails.
    pub overall: AssumptionVerdict,
}

/// Number of deepest consecutive differences that must share a sign before
/// the probe commits to a verdict.
const TREND_WINDOW: usize = 3;

/// Log-space core of the assumption probe, taking per-level logs directly so
/// that sequences too large for any integer type (the interesting divergent
/// examples are doubly exponential) can still be probed. `ln_j[k]`, `ln_n[k]`
/// describe level `k + 1`.
pub fn assumption_log_terms(ln_j: &[f64], ln_n: &[f64], t: f64) -> Vec<f64> {
    assert_eq!(ln_j.len(), ln_n.len(), "per-level logs must pair up");
    let mut terms = Vec::with_capacity(ln_j.len() + 1);
    let mut acc_ln_j = 0.0f64;
    let mut acc_ln_n = 0.0f64;
    terms.push(-t); // level 0: ln 1 - 1^2 t
    for k in 0..ln_j.len() {
        acc_ln_j += ln_j[k];
        acc_ln_n += ln_n[k];
        // J_i^2 t in log space; saturate instead of overflowing to infinity
        // so that differences of terms stay meaningful.
        let ln_decay = 2.0 * acc_ln_j + t.ln();
        let term = if ln_decay > 700.0 {
            f64::MIN
        } else {
            acc_ln_n - ln_decay.exp()
        };
        terms.push(term);
    }
    terms
}

/// Verdict from a finite sequence of log-terms: strict trend over the last
/// `TREND_WINDOW` differences, otherwise inconclusive.
pub fn assumption_verdict(log_terms: &[f64]) -> AssumptionVerdict {
    if log_terms.len() < TREND_WINDOW + 1 {
        return AssumptionVerdict::Inconclusive;
    }
    let diffs: Vec<f64> = log_terms
        .windows(2)
        .map(|w| w[1] - w[0])
        .collect();
    let tail = &diffs[diffs.len() - TREND_WINDOW..];
    if tail.iter().all(|&d| d < 0.0) {
        AssumptionVerdict::Pass
    } else if tail.iter().all(|&d| d > 0.0) {
        AssumptionVerdict::Fail
    } else {
        AssumptionVerdict::Inconclusive
    }
}

/// Probe `sup_i N_i exp(-J_i^2 t)` over levels `0..=depth` for every `t` in
/// the grid. The verdict describes the probed range only: a deeper probe can
/// upgrade an early `Fail` of a genuinely admissible sequence, but a `Pass`
/// with a strictly decreasing tail is stable under extending `depth` because
/// the decay gain `J_i^2 (j_{i+1}^2 - 1) t` grows with `i` while `ln n_{i+1}`
/// is what it is.
pub fn check_assumption(
    seq: &ParameterSequences,
    t_grid: &[f64],
    depth: usize,
) -> Result<AssumptionReport, ParamError> {
    if t_grid.is_empty() {
        return Err(ParamError::EmptyGrid);
    }
    for &t in t_grid {
        if !(t > 0.0 && t.is_finite()) {
            return Err(ParamError::InvalidTime { t });
        }
    }
    if depth < TREND_WINDOW {
        return Err(ParamError::DepthTooShallow {
            depth,
            min: TREND_WINDOW,
        });
    }
    let mut ln_j = Vec::with_capacity(depth);
    let mut ln_n = Vec::with_capacity(depth);
    for level in 1..=depth {
        ln_j.push((seq.j_at(level)? as f64).ln());
        ln_n.push((seq.n_at(level)? as f64).ln());
    }
    let mut entries = Vec::with_capacity(t_grid.len());
    let mut overall = AssumptionVerdict::Pass;
    for &t in t_grid {
        let log_terms = assumption_log_terms(&ln_j, &ln_n, t);
        let sup = log_terms.iter().cloned().fold(f64::MIN, f64::max);
        let verdict = assumption_verdict(&log_terms);
        match (verdict, overall) {
            (AssumptionVerdict::Fail, _) => overall = AssumptionVerdict::Fail,
            (AssumptionVerdict::Inconclusive, AssumptionVerdict::Pass) => {
                overall = AssumptionVerdict::Inconclusive
            }
            _ => {}
        }
        entries.push(AssumptionEntry {
            t,
            log_terms,
            sup_log_term: sup,
            verdict,
        });
    }
    Ok(AssumptionReport {
        depth,
        entries,
        overall,
    })
}

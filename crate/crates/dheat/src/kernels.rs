//! Heat kernel evaluators with certified truncation error.
//!
//! Every evaluator returns a [`CertifiedValue`]: the number plus a rigorous
//! bound on the truncation error of the series that produced it. The circle
//! kernel has two dual series — a Gaussian image sum that needs O(1) terms at
//! small time and a Fourier sum that needs O(1) terms at large time — and the
//! dispatcher switches between them at an effective-time threshold. Composite
//! objects (interval kernel, level kernels, limit kernel) split their error
//! budget across the circle evaluations they make, so the reported tail bound
//! is an end-to-end certificate.
//!
//! The level-`i` kernel is a circle term plus one correction per level at
//! which the two points still share a bundle; each correction is a scaled
//! difference of circle kernels (a Dirichlet interval kernel in disguise)
//! weighted by how many parallel copies agree or disagree at that level. The
//! limit kernel off the diagonal is the same finite sum (deep levels
//! contribute nothing once the points separate); on the diagonal the sum is
//! infinite and is truncated under a certified geometric domination, which is
//! only available when the admissibility probe passes at the requested time.

use crate::geometry::{self, GeomError, PairClassification, PairDepth, PointAddress};
use crate::params::{check_assumption, AssumptionVerdict, ParamError, ParameterSequences};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum KernelError {
    #[error("time parameter {t} must be positive and finite")]
    InvalidTime { t: f64 },
    #[error("interval length {len} must be positive and finite")]
    InvalidLength { len: f64 },
    #[error("coordinate {value} lies outside the interval [0, {len}]")]
    InvalidCoordinate { value: f64, len: f64 },
    #[error("point has level {point_level} but the kernel was requested at level {level}")]
    LevelMismatch { point_level: usize, level: usize },
    #[error(
        "series truncated at {max_terms} terms with certified error {achieved:e}, above the requested {requested:e}"
    )]
    TruncationFailure {
        achieved: f64,
        requested: f64,
        max_terms: usize,
    },
    #[error(
        "on-diagonal limit kernel at t = {t} needs a passing admissibility probe, got {verdict:?}"
    )]
    AssumptionNotVerified { t: f64, verdict: AssumptionVerdict },
    #[error("{operation} requires a sequence with a regular tail")]
    TailRequired { operation: &'static str },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Numeric result together with a certified bound on its truncation error.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CertifiedValue {
    pub value: f64,
    /// Rigorous upper bound on |value - exact|, truncation only.
    pub tail_bound: f64,
    /// Series terms actually evaluated.
    pub terms: usize,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct KernelEvalConfig {
    /// Absolute truncation-error budget for one kernel evaluation.
    pub tol: f64,
    /// Effective-time threshold between the Gaussian and Fourier series.
    pub rep_switch: f64,
    /// Hard cap on series terms before giving up with a precision failure.
    pub max_terms: usize,
    /// Probe depth for the admissibility check gating the on-diagonal limit
    /// kernel.
    pub assumption_depth: usize,
}

impl Default for KernelEvalConfig {
    fn default() -> Self {
        Self {
            tol: 1e-12,
            rep_switch: 1.0,
            max_terms: 200_000,
            assumption_depth: 16,
        }
    }
}

impl KernelEvalConfig {
    pub fn with_tol(tol: f64) -> Self {
        Self {
            tol,
            ..Self::default()
        }
    }
}

fn validate_time(t: f64) -> Result<(), KernelError> {
    if t > 0.0 && t.is_finite() {
        Ok(())
    } else {
        Err(KernelError::InvalidTime { t })
    }
}

/// Certified evaluation of `sum_{k>=1} exp(-k^2 a)`.
pub fn gauss_sum(a: f64, tol: f64, max_terms: usize) -> Result<CertifiedValue, KernelError> {
    validate_time(a)?;
    let mut sum = 0.0f64;
    let mut k = 0usize;
    loop {
        let c = (k + 1) as f64;
        let tail = (-c * c * a).exp() * (1.0 + 1.0 / (2.0 * c * a));
        if tail <= tol {
            return Ok(CertifiedValue {
                value: sum,
                tail_bound: tail,
                terms: k,
            });
        }
        k += 1;
        let kf = k as f64;
        sum += (-kf * kf * a).exp();
        if k > max_terms {
            return Err(KernelError::TruncationFailure {
                achieved: tail,
                requested: tol,
                max_terms,
            });
        }
    }
}

/// Upper bound `exp(-a) * (1 + 1/(2a))` for `sum_{k>=1} exp(-k^2 a)`: the
/// first term plus the integral comparison
/// `sum_{k>=2} exp(-k^2 a) <= int_1^inf exp(-a x^2) dx <= exp(-a)/(2a)`.
pub fn gauss_sum_upper(a: f64) -> f64 {
    (-a).exp() * (1.0 + 0.5 / a)
}

/// Gaussian image-sum representation of the circle kernel: fold the real-line
/// Gaussian kernel over all `2 pi` shifts. Few terms suffice at small time.
fn gaussian_raw(
    t: f64,
    x: f64,
    y: f64,
    tol: f64,
    max_terms: usize,
) -> Result<CertifiedValue, KernelError> {
    let d0 = (x - y).rem_euclid(TAU);
    let d = d0.min(TAU - d0);
    let pref = 1.0 / (4.0 * PI * t).sqrt();
    let a = PI * PI / (4.0 * t);
    let mut sum = (-d * d / (4.0 * t)).exp();
    let mut m = 0usize;
    loop {
        // Images beyond +-m sit at circle distance >= pi(2m+1); their sum is
        // dominated by a geometric series with ratio exp(-8a(m+1)).
        let lead = (-a * ((2 * m + 1) as f64).powi(2)).exp();
        let tail = 2.0 * lead / (1.0 - (-8.0 * a * (m as f64 + 1.0)).exp());
        if pref * tail <= tol {
            return Ok(CertifiedValue {
                value: pref * sum,
                tail_bound: pref * tail,
                terms: 2 * m + 1,
            });
        }
        m += 1;
        let lo = TAU * m as f64 - d;
        let hi = TAU * m as f64 + d;
        sum += (-lo * lo / (4.0 * t)).exp() + (-hi * hi / (4.0 * t)).exp();
        if 2 * m + 1 > max_terms {
            return Err(KernelError::TruncationFailure {
                achieved: pref * tail,
                requested: tol,
                max_terms,
            });
        }
    }
}

/// Fourier representation of the circle kernel:
/// `1/(2 pi) + (1/pi) sum_{k>=1} exp(-k^2 t) cos(k (x-y))`.
fn fourier_raw(
    t: f64,
    x: f64,
    y: f64,
    tol: f64,
    max_terms: usize,
) -> Result<CertifiedValue, KernelError> {
    let d = x - y;
    let mut sum = 0.0f64;
    let mut k = 0usize;
    loop {
        let c = (k + 1) as f64;
        let tail = (-c * c * t).exp() * (1.0 + 1.0 / (2.0 * c * t)) / PI;
        if tail <= tol {
            return Ok(CertifiedValue {
                value: 1.0 / TAU + sum / PI,
                tail_bound: tail,
                terms: k,
            });
        }
        k += 1;
        let kf = k as f64;
        sum += (-kf * kf * t).exp() * (kf * d).cos();
        if k > max_terms {
            return Err(KernelError::TruncationFailure {
                achieved: tail,
                requested: tol,
                max_terms,
            });
        }
    }
}

fn circle_with_tol(
    t: f64,
    x: f64,
    y: f64,
    tol: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    if t <= cfg.rep_switch {
        gaussian_raw(t, x, y, tol, cfg.max_terms)
    } else {
        fourier_raw(t, x, y, tol, cfg.max_terms)
    }
}

/// Heat kernel on the unit circle at angles `x`, `y` (density with respect to
/// arc length), choosing the series representation by effective time.
pub fn circle_kernel(
    t: f64,
    x: f64,
    y: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    circle_with_tol(t, x, y, cfg.tol, cfg)
}

/// Circle kernel forced through the Gaussian image sum (exposed so the two
/// representations can be compared against each other).
pub fn circle_kernel_gaussian(
    t: f64,
    x: f64,
    y: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    gaussian_raw(t, x, y, cfg.tol, cfg.max_terms)
}

/// Circle kernel forced through the Fourier sum.
pub fn circle_kernel_fourier(
    t: f64,
    x: f64,
    y: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    fourier_raw(t, x, y, cfg.tol, cfg.max_terms)
}

fn interval_with_tol(
    t: f64,
    len: f64,
    a: f64,
    b: f64,
    tol: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    if a == 0.0 || a == len || b == 0.0 || b == len {
        return Ok(CertifiedValue {
            value: 0.0,
            tail_bound: 0.0,
            terms: 0,
        });
    }
    let tau_eff = PI * PI * t / (len * len);
    if tau_eff <= cfg.rep_switch {
        // Reflection identity: the Dirichlet kernel is a scaled difference of
        // circle kernels at mirrored angles, evaluated in the Gaussian
        // representation where small effective time is cheap.
        let u = PI * a / len;
        let v = PI * b / len;
        let scale = PI / len;
        let sub_tol = tol / (2.0 * scale);
        let p1 = gaussian_raw(tau_eff, u, v, sub_tol, cfg.max_terms)?;
        let p2 = gaussian_raw(tau_eff, u, -v, sub_tol, cfg.max_terms)?;
        Ok(CertifiedValue {
            value: scale * (p1.value - p2.value),
            tail_bound: scale * (p1.tail_bound + p2.tail_bound),
            terms: p1.terms + p2.terms,
        })
    } else {
        let mut sum = 0.0f64;
        let mut k = 0usize;
        loop {
            let c = (k + 1) as f64;
            let tail =
                (2.0 / len) * (-c * c * tau_eff).exp() * (1.0 + 1.0 / (2.0 * c * tau_eff));
            if tail <= tol {
                return Ok(CertifiedValue {
                    value: (2.0 / len) * sum,
                    tail_bound: tail,
                    terms: k,
                });
            }
            k += 1;
            let kf = k as f64;
            sum += (-kf * kf * tau_eff).exp()
                * (kf * PI * a / len).sin()
                * (kf * PI * b / len).sin();
            if k > cfg.max_terms {
                return Err(KernelError::TruncationFailure {
                    achieved: tail,
                    requested: tol,
                    max_terms: cfg.max_terms,
                });
            }
        }
    }
}

/// Heat kernel on `[0, len]` with absorbing (Dirichlet) endpoints. Endpoint
/// coordinates give exactly zero.
pub fn interval_kernel_dirichlet(
    t: f64,
    len: f64,
    a: f64,
    b: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    if !(len > 0.0 && len.is_finite()) {
        return Err(KernelError::InvalidLength { len });
    }
    for v in [a, b] {
        if !(0.0..=len).contains(&v) || !v.is_finite() {
            return Err(KernelError::InvalidCoordinate { value: v, len });
        }
    }
    interval_with_tol(t, len, a, b, cfg.tol, cfg)
}

/// Shared closed-formula evaluator: circle term plus one scaled mirrored
/// difference per contributing level. `diag_levels` is how many levels
/// contribute on the diagonal (where the classification carries no deltas).
#[allow(clippy::too_many_arguments)]
fn closed_sum(
    seq: &ParameterSequences,
    t: f64,
    tx: f64,
    ty: f64,
    cls: &PairClassification,
    diag_levels: usize,
    tol: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    let term_count = match cls.depth {
        PairDepth::Diagonal => diag_levels,
        PairDepth::Finite(i_xy) => i_xy,
    };
    let share = tol / (1 + term_count) as f64;
    let base = circle_with_tol(t, tx, ty, share, cfg)?;
    let mut value = base.value;
    let mut tail = base.tail_bound;
    let mut terms = base.terms;
    for l in 1..=term_count {
        let delta = match cls.depth {
            PairDepth::Diagonal => seq.n_at(l)? as i64 - 1,
            PairDepth::Finite(_) => cls.deltas[l - 1],
        };
        let (jf, _) = seq.cumulative_f64(l)?;
        let (_, nf_prev) = seq.cumulative_f64(l - 1)?;
        let coeff = delta as f64 * nf_prev * jf;
        let sub_tol = share / (2.0 * coeff.abs().max(1.0));
        let ts = jf * jf * t;
        let p1 = circle_with_tol(ts, jf * tx, jf * ty, sub_tol, cfg)?;
        let p2 = circle_with_tol(ts, jf * tx, -jf * ty, sub_tol, cfg)?;
        value += coeff * (p1.value - p2.value);
        tail += coeff.abs() * (p1.tail_bound + p2.tail_bound);
        terms += p1.terms + p2.terms;
    }
    Ok(CertifiedValue {
        value,
        tail_bound: tail,
        terms,
    })
}

/// Heat kernel on the level-`level` graph (density with respect to its
/// measure), by the closed formula. Both points must be addressed at exactly
/// that level.
pub fn diamond_kernel_level(
    seq: &ParameterSequences,
    level: usize,
    t: f64,
    x: &PointAddress,
    y: &PointAddress,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    for p in [x, y] {
        if p.level() != level {
            return Err(KernelError::LevelMismatch {
                point_level: p.level(),
                level,
            });
        }
    }
    let cls = geometry::classify_pair(seq, x, y, Some(level))?;
    closed_sum(seq, t, x.theta(), y.theta(), &cls, level, cfg.tol, cfg)
}

fn recursive_impl(
    seq: &ParameterSequences,
    t: f64,
    x: &PointAddress,
    y: &PointAddress,
    i: usize,
    share: f64,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    if i == 0 {
        return circle_with_tol(t, x.theta(), y.theta(), share, cfg);
    }
    let xm = x.view_at(seq, i - 1)?;
    let ym = y.view_at(seq, i - 1)?;
    let base = recursive_impl(seq, t, &xm, &ym, i - 1, share, cfg)?;
    let delta: i64 = match geometry::bundle_case_at(seq, x, y, i)? {
        None => 0,
        Some(true) => seq.n_at(i)? as i64 - 1,
        Some(false) => -1,
    };
    if delta == 0 {
        return Ok(base);
    }
    let (jf, _) = seq.cumulative_f64(i)?;
    let (_, nf_prev) = seq.cumulative_f64(i - 1)?;
    let coeff = delta as f64 * nf_prev * jf;
    let sub_tol = share / (2.0 * coeff.abs().max(1.0));
    let ts = jf * jf * t;
    let p1 = circle_with_tol(ts, jf * x.theta(), jf * y.theta(), sub_tol, cfg)?;
    let p2 = circle_with_tol(ts, jf * x.theta(), -jf * y.theta(), sub_tol, cfg)?;
    Ok(CertifiedValue {
        value: base.value + coeff * (p1.value - p2.value),
        tail_bound: base.tail_bound + coeff.abs() * (p1.tail_bound + p2.tail_bound),
        terms: base.terms + p1.terms + p2.terms,
    })
}

/// Same kernel by the level-peeling recursion (one case decision per level,
/// recursing on the projected points). Exists to cross-check the closed
/// formula through an independent code path.
pub fn diamond_kernel_recursive(
    seq: &ParameterSequences,
    level: usize,
    t: f64,
    x: &PointAddress,
    y: &PointAddress,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    for p in [x, y] {
        if p.level() != level {
            return Err(KernelError::LevelMismatch {
                point_level: p.level(),
                level,
            });
        }
    }
    let share = cfg.tol / (level + 1) as f64;
    recursive_impl(seq, t, x, y, level, share, cfg)
}

/// `ln` of the certified bound on the level-`l` diagonal correction:
/// `(n_l - 1) N_{l-1} J_l (2/pi) sum_k exp(-k^2 J_l^2 t)`, with the sum
/// bounded by [`gauss_sum_upper`]. Computed in log space so gigantic copy
/// counts cannot overflow into NaN.
fn ln_diag_term_bound(seq: &ParameterSequences, l: usize, t: f64) -> Result<f64, KernelError> {
    let n_l = seq.n_at(l)? as f64;
    let (ln_j, ln_n) = seq.ln_cumulative(l)?;
    let ln_n_prev = ln_n - n_l.ln();
    let (jf, _) = seq.cumulative_f64(l)?;
    let a = jf * jf * t;
    let ln_s = -a + (0.5 / a).ln_1p();
    Ok((n_l - 1.0).ln() + ln_n_prev + ln_j + (2.0 / PI).ln() + ln_s)
}

/// Heat kernel on the inverse-limit space. Off the diagonal the correction
/// series terminates at the level where the points separate and no extra
/// hypothesis is needed; on the diagonal the series is infinite and is
/// truncated only once a certified geometric tail fits in the budget, which
/// requires the admissibility probe to pass at this `t`.
pub fn diamond_kernel_limit(
    seq: &ParameterSequences,
    t: f64,
    x: &PointAddress,
    y: &PointAddress,
    cfg: &KernelEvalConfig,
) -> Result<CertifiedValue, KernelError> {
    validate_time(t)?;
    let lmax = x.level().max(y.level());
    let xv = x.view_at(seq, lmax)?;
    let yv = y.view_at(seq, lmax)?;
    if xv != yv {
        let cls = geometry::classify_pair(seq, x, y, None)?;
        return closed_sum(seq, t, xv.theta(), yv.theta(), &cls, 0, cfg.tol, cfg);
    }

    let report = check_assumption(seq, &[t], cfg.assumption_depth)?;
    if report.overall != AssumptionVerdict::Pass {
        return Err(KernelError::AssumptionNotVerified {
            t,
            verdict: report.overall,
        });
    }
    let theta = xv.theta();
    let base = circle_with_tol(t, theta, theta, cfg.tol / 4.0, cfg)?;
    let mut value = base.value;
    let mut tail = base.tail_bound;
    let mut terms = base.terms;
    let mut l = 0usize;
    loop {
        let next = l + 1;
        // Try to stop: beyond the prefix the term bounds shrink by at least
        // n* j* exp(-(j*^2 - 1) J^2 t) per level, so once that ratio is below
        // 1/2 the whole remainder is dominated by a geometric series.
        if next > seq.prefix_len() {
            let (j_star, n_star) = seq.tail().ok_or(KernelError::TailRequired {
                operation: "the on-diagonal limit kernel",
            })?;
            let (jf_next, _) = seq.cumulative_f64(next)?;
            let shrink = ((j_star * j_star - 1) as f64) * jf_next * jf_next * t;
            let ratio = (n_star as f64) * (j_star as f64) * (-shrink).exp();
            if ratio <= 0.5 {
                let b_next = ln_diag_term_bound(seq, next, t)?.exp();
                let dominated = b_next / (1.0 - ratio);
                if dominated <= cfg.tol / 4.0 {
                    tail += dominated;
                    break;
                }
            }
        }
        l = next;
        let delta = seq.n_at(l)? as f64 - 1.0;
        let (jf, _) = seq.cumulative_f64(l)?;
        let (_, nf_prev) = seq.cumulative_f64(l - 1)?;
        let coeff = delta * nf_prev * jf;
        if coeff.is_finite() {
            let sub_tol = cfg.tol / (2.0 * (l * (l + 1)) as f64) / (2.0 * coeff.max(1.0));
            let ts = jf * jf * t;
            let p1 = circle_with_tol(ts, jf * theta, jf * theta, sub_tol, cfg)?;
            let p2 = circle_with_tol(ts, jf * theta, -jf * theta, sub_tol, cfg)?;
            value += coeff * (p1.value - p2.value);
            tail += coeff * (p1.tail_bound + p2.tail_bound);
            terms += p1.terms + p2.terms;
        } else {
            // The coefficient no longer fits in a float; fall back on the
            // certified log-space bound for this single term.
            tail += ln_diag_term_bound(seq, l, t)?.exp();
        }
        if l > cfg.max_terms {
            return Err(KernelError::TruncationFailure {
                achieved: tail,
                requested: cfg.tol,
                max_terms: cfg.max_terms,
            });
        }
    }
    Ok(CertifiedValue {
        value,
        tail_bound: tail,
        terms,
    })
}

/// Which kernel a batch evaluation targets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum KernelTarget {
    Level(usize),
    Limit,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BatchEntry {
    pub t: f64,
    pub x: PointAddress,
    pub y: PointAddress,
    pub value: f64,
    pub tail_bound: f64,
}

/// Evaluate a kernel over the product of a time grid and a pair list. Pure
/// map; the output order is (time-major) independent of evaluation order.
pub fn batch_evaluate(
    seq: &ParameterSequences,
    target: KernelTarget,
    ts: &[f64],
    pairs: &[(PointAddress, PointAddress)],
    cfg: &KernelEvalConfig,
) -> Result<Vec<BatchEntry>, KernelError> {
    use rayon::prelude::*;
    let jobs: Vec<(f64, &(PointAddress, PointAddress))> = ts
        .iter()
        .flat_map(|&t| pairs.iter().map(move |p| (t, p)))
        .collect();
    jobs.par_iter()
        .map(|&(t, pair)| {
            let cv = match target {
                KernelTarget::Level(level) => {
                    diamond_kernel_level(seq, level, t, &pair.0, &pair.1, cfg)?
                }
                KernelTarget::Limit => diamond_kernel_limit(seq, t, &pair.0, &pair.1, cfg)?,
            };
            Ok(BatchEntry {
                t,
                x: pair.0.clone(),
                y: pair.1.clone(),
                value: cv.value,
                tail_bound: cv.tail_bound,
            })
        })
        .collect()
}

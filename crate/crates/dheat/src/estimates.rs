//! Closed-form bounds for the heat kernel and semigroup: spatial Lipschitz
//! constants, uniform (on-diagonal) bounds, the gradient-type continuity
//! constant, logarithmic-correction bounds for regular parameters,
//! ultracontractivity norms, a log-Sobolev constant, and Poincare constants.
//!
//! Every infinite level sum is evaluated as a certified partial sum: all
//! user-supplied prefix levels are added exactly, and once the terms enter
//! the constant-parameter tail regime they are cut off as soon as the
//! current term drops below the tolerance and a provable bound on the
//! next-to-current term ratio falls below 1/2; the remainder is then
//! dominated by a geometric series whose sum is reported as `tail_bound`.

use crate::params::{check_assumption, AssumptionVerdict, ParamError, ParameterSequences};
use serde::Serialize;
use std::f64::consts::{E, LN_2, PI};
use thiserror::Error;

/// Probe depth used when a bound requires the summability trend check.
pub const ASSUMPTION_PROBE_DEPTH: usize = 16;

const MAX_LEVELS: usize = 512;

#[derive(Debug, Error)]
pub enum EstimateError {
    #[error("time parameter must be positive and finite, got {t}")]
    InvalidTime { t: f64 },
    #[error("tolerance must be positive and finite, got {tol}")]
    InvalidTolerance { tol: f64 },
    #[error("summability check did not pass at t = {t} (verdict {verdict:?}); the level sum cannot be certified")]
    AssumptionNotVerified { t: f64, verdict: AssumptionVerdict },
    #[error("{operation} needs parameter sequences with a constant tail")]
    TailRequired { operation: &'static str },
    #[error("{operation} did not converge within {levels} levels")]
    Truncation { operation: &'static str, levels: usize },
    #[error("argument outside the valid regime: {constraint}")]
    RegimeViolation { constraint: String },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// A certified numerical bound together with how it was obtained.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BoundReport {
    pub name: &'static str,
    /// The time or smoothing parameter the bound was evaluated at.
    pub parameter: f64,
    pub value: f64,
    pub terms_used: usize,
    /// Rigorous bound on the truncated remainder (0 for closed forms).
    pub tail_bound: f64,
    /// Human-readable description of the evaluated expression.
    pub formula: &'static str,
    /// Secondary output; its meaning is stated in `formula`.
    pub companion_value: Option<f64>,
}

fn validate_time(t: f64) -> Result<(), EstimateError> {
    if !(t > 0.0 && t.is_finite()) {
        return Err(EstimateError::InvalidTime { t });
    }
    Ok(())
}

fn validate_tol(tol: f64) -> Result<(), EstimateError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(EstimateError::InvalidTolerance { tol });
    }
    Ok(())
}

fn require_assumption(
    seq: &ParameterSequences,
    t: f64,
    operation: &'static str,
) -> Result<(), EstimateError> {
    if seq.tail().is_none() {
        return Err(EstimateError::TailRequired { operation });
    }
    let report = check_assumption(seq, &[t], ASSUMPTION_PROBE_DEPTH)?;
    if report.overall != AssumptionVerdict::Pass {
        return Err(EstimateError::AssumptionNotVerified {
            t,
            verdict: report.overall,
        });
    }
    Ok(())
}

struct LevelSum {
    value: f64,
    terms: usize,
    tail: f64,
}

/// Certified sum over levels `start..` of `term_at(level, J_level, ln
/// N_level)`, which returns the term together with a dominating value whose
/// level-to-level ratio in the constant tail regime is provably at most
/// `ratio_kappa * exp(-J^2 (j*^2 - 1) tau)`.
fn certified_tail_sum(
    seq: &ParameterSequences,
    tau: f64,
    tol: f64,
    start: usize,
    ratio_kappa: f64,
    mut term_at: impl FnMut(usize, f64, f64) -> (f64, f64),
    operation: &'static str,
) -> Result<LevelSum, EstimateError> {
    let (j_star, _) = seq
        .tail()
        .ok_or(EstimateError::TailRequired { operation })?;
    let prefix = seq.prefix_len();
    let js2 = (j_star as f64) * (j_star as f64);
    let mut value = 0.0;
    let mut terms = 0usize;
    // `terms` is a result field, not an index; it counts accepted terms.
    #[allow(clippy::explicit_counter_loop)]
    for l in start..=MAX_LEVELS {
        let (j_f, _) = seq.cumulative_f64(l)?;
        let (_, ln_n) = seq.ln_cumulative(l)?;
        let (term, dominator) = term_at(l, j_f, ln_n);
        value += term;
        terms += 1;
        if l >= prefix {
            // From here on both the next level's parameters and the ratio cap
            // use the constant tail values, so a single cap below 1/2
            // dominates everything that follows geometrically.
            let ratio = ratio_kappa * (-(j_f * j_f) * (js2 - 1.0) * tau).exp();
            if dominator < tol && ratio < 0.5 {
                let tail = dominator * ratio / (1.0 - ratio);
                return Ok(LevelSum { value, terms, tail });
            }
        }
    }
    Err(EstimateError::Truncation {
        operation,
        levels: MAX_LEVELS,
    })
}

fn lipschitz_term(t: f64) -> impl Fn(usize, f64, f64) -> (f64, f64) {
    let c = 0.5 / t;
    move |_l, j, ln_n| {
        let a = j * j * t;
        if !a.is_finite() {
            return (0.0, 0.0);
        }
        let v = (ln_n + (j * j + c).ln() - a).exp();
        (v, v)
    }
}

/// Spatial Lipschitz constant of the limit heat kernel:
/// `(2/pi) sum_{l>=0} N_l (J_l^2 + 1/(2t)) exp(-J_l^2 t)`.
pub fn lipschitz_bound(
    seq: &ParameterSequences,
    t: f64,
    tol: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    validate_tol(tol)?;
    require_assumption(seq, t, "lipschitz_bound")?;
    let inner_tol = tol * PI / 2.0;
    let sum = certified_tail_sum(
        seq,
        t,
        inner_tol,
        0,
        {
            let (j_star, n_star) = seq.tail().expect("checked above");
            n_star as f64 * (j_star as f64) * (j_star as f64)
        },
        lipschitz_term(t),
        "lipschitz_bound",
    )?;
    Ok(BoundReport {
        name: "lipschitz",
        parameter: t,
        value: sum.value * 2.0 / PI,
        terms_used: sum.terms,
        tail_bound: sum.tail * 2.0 / PI,
        formula: "(2/pi) sum_{l>=0} N_l (J_l^2 + 1/(2t)) exp(-J_l^2 t)",
        companion_value: None,
    })
}

/// Finite-level spatial Lipschitz constant: the partial sum over levels
/// `0..=i` of the same terms (exact, no tail).
pub fn lipschitz_bound_level(
    seq: &ParameterSequences,
    i: usize,
    t: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    let term = lipschitz_term(t);
    let mut value = 0.0;
    for l in 0..=i {
        let (j_f, _) = seq.cumulative_f64(l)?;
        let (_, ln_n) = seq.ln_cumulative(l)?;
        value += term(l, j_f, ln_n).0;
    }
    Ok(BoundReport {
        name: "lipschitz_level",
        parameter: t,
        value: value * 2.0 / PI,
        terms_used: i + 1,
        tail_bound: 0.0,
        formula: "(2/pi) sum_{l=0..=i} N_l (J_l^2 + 1/(2t)) exp(-J_l^2 t)",
        companion_value: None,
    })
}

fn uniform_term(t: f64, corrected: bool) -> impl Fn(usize, f64, f64) -> (f64, f64) {
    move |_l, j, ln_n| {
        let a = j * j * t;
        let first = (ln_n - 0.5 * (PI * t).ln()).exp();
        let second = if !a.is_finite() {
            0.0
        } else if corrected {
            (ln_n + (2.0 * j / PI).ln() + (0.5 / a).ln_1p() - a).exp()
        } else {
            (ln_n + (2.0 / (j * PI * t)).ln() - a).exp()
        };
        (first.min(second), second)
    }
}

const UNIFORM_FORMULA_PRINTED: &str =
    "1/(2 pi) + 1/sqrt(4 pi t) + sum_{l>=1} N_l min{1/sqrt(pi t), (2/(J_l pi t)) exp(-J_l^2 t)}; companion: value with the alternative exponential branch when the two differ beyond tol";
const UNIFORM_FORMULA_CORRECTED: &str =
    "1/(2 pi) + 1/sqrt(4 pi t) + sum_{l>=1} N_l min{1/sqrt(pi t), (2 J_l/pi)(1 + 1/(2 J_l^2 t)) exp(-J_l^2 t)}; companion: value with the alternative exponential branch when the two differ beyond tol";

fn uniform_leading(t: f64) -> f64 {
    1.0 / (2.0 * PI) + 1.0 / (4.0 * PI * t).sqrt()
}

fn uniform_sum(
    seq: &ParameterSequences,
    t: f64,
    tol: f64,
    corrected: bool,
) -> Result<LevelSum, EstimateError> {
    let (j_star, n_star) = seq.tail().ok_or(EstimateError::TailRequired {
        operation: "uniform_bound",
    })?;
    certified_tail_sum(
        seq,
        t,
        tol,
        1,
        n_star as f64 * j_star as f64,
        uniform_term(t, corrected),
        "uniform_bound",
    )
}

/// Uniform (sup) bound on the limit heat kernel. The exponential branch of
/// each level term exists in two variants: `corrected = false` evaluates the
/// min with `(2/(J_l pi t)) exp(-J_l^2 t)`, while `corrected = true` uses the
/// larger, provably valid `(2 J_l/pi)(1 + 1/(2 J_l^2 t)) exp(-J_l^2 t)`
/// obtained from the verified series comparison (see the brute-force check in
/// the verification suite). When the two variants differ by more than `tol`,
/// the other variant's value is reported as the companion.
pub fn uniform_bound(
    seq: &ParameterSequences,
    t: f64,
    tol: f64,
    corrected: bool,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    validate_tol(tol)?;
    let leading = uniform_leading(t);
    let main = uniform_sum(seq, t, tol, corrected)?;
    let other = uniform_sum(seq, t, tol, !corrected)?;
    let value = leading + main.value;
    let other_value = leading + other.value;
    let companion = if (value - other_value).abs() > tol {
        Some(other_value)
    } else {
        None
    };
    Ok(BoundReport {
        name: if corrected {
            "uniform_corrected"
        } else {
            "uniform_printed"
        },
        parameter: t,
        value,
        terms_used: main.terms,
        tail_bound: main.tail,
        formula: if corrected {
            UNIFORM_FORMULA_CORRECTED
        } else {
            UNIFORM_FORMULA_PRINTED
        },
        companion_value: companion,
    })
}

/// Finite-level uniform bound: leading circle part plus levels `1..=i`.
pub fn uniform_bound_level(
    seq: &ParameterSequences,
    i: usize,
    t: f64,
    corrected: bool,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    let term = uniform_term(t, corrected);
    let mut value = uniform_leading(t);
    for l in 1..=i {
        let (j_f, _) = seq.cumulative_f64(l)?;
        let (_, ln_n) = seq.ln_cumulative(l)?;
        value += term(l, j_f, ln_n).0;
    }
    Ok(BoundReport {
        name: "uniform_level",
        parameter: t,
        value,
        terms_used: i,
        tail_bound: 0.0,
        formula: "1/(2 pi) + 1/sqrt(4 pi t) + sum_{l=1..=i} N_l min{...}",
        companion_value: None,
    })
}

/// Continuity constant `C(t)` in the gradient-type semigroup estimate
/// `|P_t f(x) - P_t f(y)| <= C(t) d(x,y) ||f||_inf`:
/// `2 sum_{l>=0} min{2/sqrt(pi t), (J_l + 1/(2 J_l t)) exp(-J_l^2 t)}`.
/// The sum involves only the subdivision counts `J`, never the copy counts.
pub fn wbe_constant(
    seq: &ParameterSequences,
    t: f64,
    tol: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    validate_tol(tol)?;
    let (j_star, _) = seq.tail().ok_or(EstimateError::TailRequired {
        operation: "wbe_constant",
    })?;
    let inner_tol = tol / 2.0;
    let sum = certified_tail_sum(
        seq,
        t,
        inner_tol,
        0,
        j_star as f64,
        move |_l, j, _ln_n| {
            let a = j * j * t;
            let first = 2.0 / (PI * t).sqrt();
            let second = if !a.is_finite() {
                0.0
            } else {
                ((j + 0.5 / (j * t)).ln() - a).exp()
            };
            (first.min(second), second)
        },
        "wbe_constant",
    )?;
    Ok(BoundReport {
        name: "wbe_constant",
        parameter: t,
        value: 2.0 * sum.value,
        terms_used: sum.terms,
        tail_bound: 2.0 * sum.tail,
        formula: "2 sum_{l>=0} min{2/sqrt(pi t), (J_l + 1/(2 J_l t)) exp(-J_l^2 t)}",
        companion_value: None,
    })
}

/// The constant multiplying `(d/sqrt(t)) ln(d/sqrt(t))` in the
/// logarithmically corrected continuity bound for constant subdivision
/// parameter `j` and diameter `diam`:
/// `6/ln j + sqrt(pi) diam/(ln j ln 2) + 2 diam/(e ln j ln 2)`.
pub fn regular_log_constant(j: u64, diam: f64) -> Result<f64, EstimateError> {
    if j < 2 {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("subdivision parameter j >= 2 required, got {j}"),
        });
    }
    if !(diam > 0.0 && diam.is_finite()) {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("diameter must be positive and finite, got {diam}"),
        });
    }
    let lj = (j as f64).ln();
    Ok(6.0 / lj + PI.sqrt() * diam / (lj * LN_2) + 2.0 * diam / (E * lj * LN_2))
}

/// Logarithmically corrected oscillation bound for constant subdivision
/// parameter: returns `C (d/sqrt(t)) ln(d/sqrt(t))` with `C` from
/// [`regular_log_constant`]. Valid in the small-time regime `0 < t < d/2`
/// with `d/sqrt(t) > 2`. The companion value is the sharper three-term bound
/// on `C(t)` itself:
/// `(6/(sqrt(t) ln j)) ln(d/sqrt(t)) + (sqrt(pi)/ln j + 2/(e ln j)) d/sqrt(t)`.
// Negated comparisons are deliberate: they reject NaN inputs, which would
// slip through the direct `>=`/`<=` forms.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn regular_log_bound(
    j: u64,
    diam: f64,
    t: f64,
    d: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    let c = regular_log_constant(j, diam)?;
    if !(d > 0.0 && d.is_finite()) {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("distance must be positive and finite, got {d}"),
        });
    }
    if !(t < d / 2.0) {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("small-time regime requires t < d/2, got t = {t}, d = {d}"),
        });
    }
    let ratio = d / t.sqrt();
    if !(ratio > 2.0) {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("regime requires d/sqrt(t) > 2, got {ratio}"),
        });
    }
    let lj = (j as f64).ln();
    let intermediate =
        6.0 / (t.sqrt() * lj) * ratio.ln() + (PI.sqrt() / lj + 2.0 / (E * lj)) * ratio;
    Ok(BoundReport {
        name: "regular_log",
        parameter: t,
        value: c * ratio * ratio.ln(),
        terms_used: 3,
        tail_bound: 0.0,
        formula: "C (d/sqrt(t)) ln(d/sqrt(t)) with C = 6/ln j + sqrt(pi) diam/(ln j ln 2) + 2 diam/(e ln j ln 2); companion: three-term bound on C(t)",
        companion_value: Some(intermediate),
    })
}

/// Operator norm bound from mean-square to uniform:
/// `1/sqrt(2 pi) + (1/sqrt(2 t)) (1 + sum_{l>=1} 2 N_l min{1, (2/(J_l sqrt(pi t))) exp(-J_l^2 t)})`.
pub fn ultracontractivity_bound(
    seq: &ParameterSequences,
    t: f64,
    tol: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(t)?;
    validate_tol(tol)?;
    let (_, n_star) = seq.tail().ok_or(EstimateError::TailRequired {
        operation: "ultracontractivity_bound",
    })?;
    let scale = 1.0 / (2.0 * t).sqrt();
    let inner_tol = tol / scale;
    let sum = certified_tail_sum(
        seq,
        t,
        inner_tol,
        1,
        n_star as f64,
        move |_l, j, ln_n| {
            let a = j * j * t;
            let cap = (LN_2 + ln_n).exp();
            let second = if !a.is_finite() {
                0.0
            } else {
                (LN_2 + ln_n + (2.0 / (j * (PI * t).sqrt())).ln() - a).exp()
            };
            (cap.min(second), second)
        },
        "ultracontractivity_bound",
    )?;
    Ok(BoundReport {
        name: "ultracontractivity",
        parameter: t,
        value: 1.0 / (2.0 * PI).sqrt() + scale * (1.0 + sum.value),
        terms_used: sum.terms,
        tail_bound: scale * sum.tail,
        formula: "1/sqrt(2 pi) + (1/sqrt(2 t))(1 + sum_{l>=1} 2 N_l min{1, (2/(J_l sqrt(pi t))) exp(-J_l^2 t)})",
        companion_value: None,
    })
}

/// Closed-form constant `C(j, n)` in the small-time bound
/// `||P_t||_{1 -> inf} <= C(j, n)/t` for constant parameters:
/// `1/(2 pi) + 1/sqrt(4 pi) + 2/pi + 2/(pi j ln j)` when `j = n`, and
/// `1/(2 pi) + 1/sqrt(4 pi) + 2 n/(pi j) + 2 j/(pi n ln(j/n))` otherwise.
pub fn regular_1_to_inf_constant(j: u64, n: u64) -> Result<f64, EstimateError> {
    if j < 2 || n < 2 {
        return Err(EstimateError::RegimeViolation {
            constraint: format!("parameters j, n >= 2 required, got j = {j}, n = {n}"),
        });
    }
    let jf = j as f64;
    let nf = n as f64;
    let lead = 1.0 / (2.0 * PI) + 1.0 / (4.0 * PI).sqrt();
    let value = if j == n {
        lead + 2.0 / PI + 2.0 / (PI * jf * jf.ln())
    } else {
        lead + 2.0 * nf / (PI * jf) + 2.0 * jf / (PI * nf * (jf / nf).ln())
    };
    Ok(value)
}

/// Log-Sobolev constant
/// `M(d) = 2 d + ln(1/(2 pi) + 1/sqrt(4 pi d) + pi sum_{l>=1} N_l min{1, (2/(J_l sqrt(pi d))) exp(-J_l^2 d)})`.
/// The companion value is the grid point minimizing `M` over a log-spaced
/// probe grid, for convenience when optimizing the inequality.
pub fn logsob_constant(
    seq: &ParameterSequences,
    delta: f64,
    tol: f64,
) -> Result<BoundReport, EstimateError> {
    validate_time(delta)?;
    validate_tol(tol)?;
    require_assumption(seq, delta, "logsob_constant")?;
    let (value, terms, tail) = logsob_value(seq, delta, tol)?;
    // Convenience: locate the minimizing delta on a log grid.
    let mut best = (delta, value);
    let (lo, hi) = (1e-2f64, 10.0f64);
    let steps = 96;
    for k in 0..=steps {
        let g = lo * (hi / lo).powf(k as f64 / steps as f64);
        if let Ok((m, _, _)) = logsob_value(seq, g, tol) {
            if m < best.1 {
                best = (g, m);
            }
        }
    }
    Ok(BoundReport {
        name: "logsob",
        parameter: delta,
        value,
        terms_used: terms,
        tail_bound: tail,
        formula: "2 d + ln(1/(2 pi) + 1/sqrt(4 pi d) + pi sum_{l>=1} N_l min{1, (2/(J_l sqrt(pi d))) exp(-J_l^2 d)}); companion: grid argmin of the same expression",
        companion_value: Some(best.0),
    })
}

fn logsob_value(
    seq: &ParameterSequences,
    delta: f64,
    tol: f64,
) -> Result<(f64, usize, f64), EstimateError> {
    let (_, n_star) = seq.tail().ok_or(EstimateError::TailRequired {
        operation: "logsob_constant",
    })?;
    let leading = 1.0 / (2.0 * PI) + 1.0 / (4.0 * PI * delta).sqrt();
    // ln(x + e) - ln(x) <= e/x, so an inner tail of tol*leading/pi keeps the
    // final tail below tol.
    let inner_tol = tol * leading / PI;
    let sum = certified_tail_sum(
        seq,
        delta,
        inner_tol,
        1,
        n_star as f64,
        move |_l, j, ln_n| {
            let a = j * j * delta;
            let cap = ln_n.exp();
            let second = if !a.is_finite() {
                0.0
            } else {
                (ln_n + (2.0 / (j * (PI * delta).sqrt())).ln() - a).exp()
            };
            (cap.min(second), second)
        },
        "logsob_constant",
    )?;
    let value = 2.0 * delta + (leading + PI * sum.value).ln();
    let tail = PI * sum.tail / leading;
    Ok((value, sum.terms, tail))
}

/// The two Poincare-type constants at level `i`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PoincareConstants {
    /// Spectral gap of the limit space; equals 1 for every parameter choice.
    pub lambda_1: f64,
    /// Local constant scaling linearly with the cell width: `2/J_i`.
    pub local_linear: f64,
    /// Local constant scaling quadratically with the cell width: `4/J_i^2`,
    /// the reciprocal of the smallest mixed-boundary eigenvalue on a
    /// half-branch. The spectral verification suite measures which of the two
    /// scalings the discretized operator actually exhibits.
    pub local_quadratic: f64,
}

pub fn poincare_constants(
    seq: &ParameterSequences,
    i: usize,
) -> Result<PoincareConstants, EstimateError> {
    if i == 0 {
        return Err(EstimateError::RegimeViolation {
            constraint: "local constants need level i >= 1".into(),
        });
    }
    let (j_i, _) = seq.cumulative_f64(i)?;
    Ok(PoincareConstants {
        lambda_1: 1.0,
        local_linear: 2.0 / j_i,
        local_quadratic: 4.0 / (j_i * j_i),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernels::{circle_kernel, KernelEvalConfig};

    fn seq22() -> ParameterSequences {
        ParameterSequences::regular(2, 2).unwrap()
    }

    #[test]
    fn lipschitz_matches_direct_summation() {
        let seq = seq22();
        let r = lipschitz_bound(&seq, 1.0, 1e-9).unwrap();
        // Independent direct summation with explicit powers.
        let mut s = 0.0;
        for l in 0..=8u32 {
            let j = if l == 0 { 1.0 } else { 2f64.powi(l as i32) };
            let n = j;
            s += n * (j * j + 0.5) * (-j * j).exp();
        }
        s *= 2.0 / PI;
        assert!((r.value - s).abs() < 1e-12, "{} vs {s}", r.value);
        assert!((r.value - 0.45624).abs() < 1e-5);
        assert!(r.tail_bound <= 1e-9);
    }

    #[test]
    fn lipschitz_decays_monotonically_in_time() {
        let seq = seq22();
        let grid = [1.0, 2.0, 5.0, 10.0, 50.0, 100.0];
        let mut prev = f64::INFINITY;
        for &t in &grid {
            let v = lipschitz_bound(&seq, t, 1e-10).unwrap().value;
            assert!(v < prev, "not decreasing at t = {t}");
            prev = v;
        }
        assert!(prev < 1e-40);
    }

    #[test]
    fn level_lipschitz_increases_to_the_limit() {
        let seq = seq22();
        let t = 0.7;
        let limit = lipschitz_bound(&seq, t, 1e-12).unwrap();
        let mut prev = 0.0;
        for i in 0..=8 {
            let v = lipschitz_bound_level(&seq, i, t).unwrap().value;
            assert!(v >= prev);
            prev = v;
        }
        assert!((limit.value - prev).abs() <= limit.tail_bound + 1e-15);
    }

    #[test]
    fn lipschitz_requires_a_passing_trend_check() {
        // Large copy counts with slow subdivision growth keep the level terms
        // rising throughout the probe depth at tiny times.
        let seq = ParameterSequences::new(
            vec![2; 18],
            vec![1_000_000_000_000; 18],
            Some((2, 2)),
        )
        .unwrap();
        match lipschitz_bound(&seq, 1e-9, 1e-6) {
            Err(EstimateError::AssumptionNotVerified { verdict, .. }) => {
                assert_eq!(verdict, AssumptionVerdict::Fail);
            }
            other => panic!("expected a failed trend check, got {other:?}"),
        }
    }

    #[test]
    fn uniform_bound_matches_direct_summation_and_reports_companion() {
        let seq = seq22();
        let t = 1.0;
        let r = uniform_bound(&seq, t, 1e-9, true).unwrap();
        let lead = 1.0 / (2.0 * PI) + 1.0 / (4.0 * PI).sqrt();
        let mut s = lead;
        for l in 1..=6u32 {
            let j = 2f64.powi(l as i32);
            let n = j;
            let first = n / PI.sqrt();
            let second = n * (2.0 * j / PI) * (1.0 + 0.5 / (j * j)) * (-j * j).exp();
            s += first.min(second);
        }
        assert!((r.value - s).abs() < 1e-12, "{} vs {s}", r.value);
        // The two exponential-branch variants disagree at this time scale.
        let printed = uniform_bound(&seq, t, 1e-9, false).unwrap();
        assert!(r.companion_value.is_some());
        assert!((r.companion_value.unwrap() - printed.value).abs() < 1e-12);
        assert!(printed.value < r.value);
    }

    #[test]
    fn level_zero_uniform_bound_dominates_the_circle_kernel() {
        let seq = seq22();
        let level0 = uniform_bound_level(&seq, 0, 1.0, true).unwrap();
        assert!((level0.value - 0.44125).abs() < 1e-5);
        let diag = circle_kernel(1.0, 0.0, 0.0, &KernelEvalConfig::default()).unwrap();
        assert!(level0.value > diag.value);
        assert!((diag.value - 0.28212).abs() < 1e-5);
    }

    #[test]
    fn wbe_constant_matches_direct_summation_and_decreases() {
        let seq = seq22();
        let r = wbe_constant(&seq, 1.0, 1e-9).unwrap();
        let mut s = 0.0;
        for l in 0..=6u32 {
            let j = if l == 0 { 1.0 } else { 2f64.powi(l as i32) };
            let first = 2.0 / PI.sqrt();
            let second = (j + 0.5 / j) * (-j * j).exp();
            s += first.min(second);
        }
        s *= 2.0;
        assert!((r.value - s).abs() < 1e-12, "{} vs {s}", r.value);
        assert!((r.value - 1.1860596).abs() < 1e-6);
        let mut prev = f64::INFINITY;
        for &t in &[0.01, 0.1, 0.5, 1.0, 5.0, 10.0] {
            let v = wbe_constant(&seq, t, 1e-10).unwrap().value;
            assert!(v <= prev, "increased at t = {t}");
            prev = v;
        }
    }

    #[test]
    fn wbe_constant_ignores_copy_counts() {
        let a = wbe_constant(&ParameterSequences::regular(2, 2).unwrap(), 0.3, 1e-10).unwrap();
        let b = wbe_constant(&ParameterSequences::regular(2, 3).unwrap(), 0.3, 1e-10).unwrap();
        assert_eq!(a.value, b.value);
        assert_eq!(a.terms_used, b.terms_used);
        // Sanity rails.
        assert!(a.value >= 0.0);
        assert!(a.value <= 2.0 * (a.terms_used as f64) * 2.0 / (PI * 0.3).sqrt() + a.tail_bound);
    }

    #[test]
    fn regular_log_constant_and_bound_are_consistent() {
        let c = regular_log_constant(2, PI).unwrap();
        let lj = LN_2;
        let oracle = 6.0 / lj + PI.sqrt() * PI / (lj * LN_2) + 2.0 * PI / (E * lj * LN_2);
        assert!((c - oracle).abs() < 1e-12);
        assert!((c - 25.0569).abs() < 2e-3, "constant {c}");
        // Scaling collapse: value/((d/sqrt t) ln(d/sqrt t)) is the constant.
        for &(d, t) in &[(0.5, 0.01), (1.0, 0.04), (2.0, 0.09)] {
            let r = regular_log_bound(2, PI, t, d).unwrap();
            let ratio = d / t.sqrt();
            assert!((r.value / (ratio * ratio.ln()) - c).abs() < 1e-9 * c);
        }
        // The log-corrected bound dominates the linear-in-distance bound.
        let seq = seq22();
        for &(d, t) in &[(0.5, 0.01), (1.0, 0.02), (2.0, 0.05)] {
            let r = regular_log_bound(2, PI, t, d).unwrap();
            let c_t = wbe_constant(&seq, t, 1e-10).unwrap().value;
            assert!(r.value >= c_t * d, "log bound below linear bound at d={d}, t={t}");
            assert!(r.companion_value.unwrap() >= c_t);
        }
    }

    #[test]
    fn regular_log_bound_rejects_regime_violations() {
        // t >= d/2.
        assert!(matches!(
            regular_log_bound(2, PI, 0.3, 0.5),
            Err(EstimateError::RegimeViolation { .. })
        ));
        // d/sqrt(t) <= 2.
        assert!(matches!(
            regular_log_bound(2, PI, 0.2, 0.5),
            Err(EstimateError::RegimeViolation { .. })
        ));
        assert!(matches!(
            regular_log_constant(1, PI),
            Err(EstimateError::RegimeViolation { .. })
        ));
    }

    #[test]
    fn ultracontractivity_matches_direct_summation() {
        let seq = seq22();
        let r = ultracontractivity_bound(&seq, 1.0, 1e-9).unwrap();
        let mut s = 0.0;
        for l in 1..=6u32 {
            let j = 2f64.powi(l as i32);
            let n = j;
            let inner = (2.0 / (j * PI.sqrt())) * (-j * j).exp();
            s += 2.0 * n * inner.min(1.0);
        }
        let oracle = 1.0 / (2.0 * PI).sqrt() + (1.0 / 2f64.sqrt()) * (1.0 + s);
        assert!((r.value - oracle).abs() < 1e-12, "{} vs {oracle}", r.value);
        assert!((r.value - 1.1352774).abs() < 1e-6);
    }

    #[test]
    fn one_to_inf_constants_match_the_closed_forms() {
        let c22 = regular_1_to_inf_constant(2, 2).unwrap();
        let oracle22 =
            1.0 / (2.0 * PI) + 1.0 / (4.0 * PI).sqrt() + 2.0 / PI + 2.0 / (PI * 2.0 * LN_2);
        assert!((c22 - oracle22).abs() < 1e-14);
        assert!((c22 - 1.5371).abs() < 1e-4);
        let c42 = regular_1_to_inf_constant(4, 2).unwrap();
        let oracle42 = 1.0 / (2.0 * PI)
            + 1.0 / (4.0 * PI).sqrt()
            + 2.0 * 2.0 / (PI * 4.0)
            + 2.0 * 4.0 / (PI * 2.0 * (4.0f64 / 2.0).ln());
        assert!((c42 - oracle42).abs() < 1e-14);
        assert!(matches!(
            regular_1_to_inf_constant(1, 2),
            Err(EstimateError::RegimeViolation { .. })
        ));
    }

    #[test]
    fn logsob_constant_matches_direct_summation_and_has_interior_minimum() {
        let seq = seq22();
        let r = logsob_constant(&seq, 1.0, 1e-8).unwrap();
        let mut s = 0.0;
        for l in 1..=6u32 {
            let j = 2f64.powi(l as i32);
            let n = j;
            let inner = (2.0 / (j * PI.sqrt())) * (-j * j).exp();
            s += n * inner.min(1.0);
        }
        let oracle = 2.0 + (1.0 / (2.0 * PI) + 1.0 / (4.0 * PI).sqrt() + PI * s).ln();
        assert!((r.value - oracle).abs() < 1e-10, "{} vs {oracle}", r.value);
        assert!((r.value - 1.3192).abs() < 1e-3);
        // The probe-grid minimizer is interior and does better than delta = 1.
        let best = r.companion_value.unwrap();
        assert!(best > 1e-2 && best < 10.0);
        let at_best = logsob_constant(&seq, best, 1e-8).unwrap().value;
        assert!(at_best <= r.value);
        // Blow-up at both ends of the range.
        let small = logsob_constant(&seq, 1e-4, 1e-8).unwrap().value;
        let large = logsob_constant(&seq, 50.0, 1e-8).unwrap().value;
        assert!(small > at_best + 1.0);
        assert!(large > at_best + 1.0);
    }

    #[test]
    fn logsob_argument_is_decreasing_in_delta() {
        let seq = seq22();
        let mut prev = f64::INFINITY;
        for &d in &[0.05, 0.1, 0.3, 1.0, 3.0, 10.0] {
            let m = logsob_constant(&seq, d, 1e-8).unwrap().value;
            let arg = (m - 2.0 * d).exp();
            assert!(arg < prev, "log argument increased at delta = {d}");
            prev = arg;
        }
    }

    #[test]
    fn poincare_constants_follow_the_subdivision_count() {
        let seq = seq22();
        let p = poincare_constants(&seq, 1).unwrap();
        assert_eq!(p.lambda_1, 1.0);
        assert!((p.local_linear - 1.0).abs() < 1e-15);
        assert!((p.local_quadratic - 1.0).abs() < 1e-15);
        let seq32 = ParameterSequences::new(vec![3, 2], vec![2, 2], None).unwrap();
        let p2 = poincare_constants(&seq32, 2).unwrap();
        assert_eq!(p2.lambda_1, 1.0);
        assert!((p2.local_linear - 1.0 / 3.0).abs() < 1e-15);
        assert!((p2.local_quadratic - 1.0 / 9.0).abs() < 1e-15);
        assert!(matches!(
            poincare_constants(&seq, 0),
            Err(EstimateError::RegimeViolation { .. })
        ));
    }

    #[test]
    fn reports_are_reproducible_bit_for_bit() {
        let seq = seq22();
        for &t in &[0.05, 0.3, 1.0, 4.0] {
            let a = lipschitz_bound(&seq, t, 1e-10).unwrap();
            let b = lipschitz_bound(&seq, t, 1e-10).unwrap();
            assert_eq!(a, b);
            let u1 = uniform_bound(&seq, t, 1e-10, true).unwrap();
            let u2 = uniform_bound(&seq, t, 1e-10, true).unwrap();
            assert_eq!(u1, u2);
            let w1 = wbe_constant(&seq, t, 1e-10).unwrap();
            let w2 = wbe_constant(&seq, t, 1e-10).unwrap();
            assert_eq!(w1, w2);
        }
    }

    #[test]
    fn invalid_arguments_are_rejected() {
        let seq = seq22();
        assert!(matches!(
            lipschitz_bound(&seq, 0.0, 1e-8),
            Err(EstimateError::InvalidTime { .. })
        ));
        assert!(matches!(
            wbe_constant(&seq, 1.0, 0.0),
            Err(EstimateError::InvalidTolerance { .. })
        ));
        let no_tail = ParameterSequences::new(vec![2, 2], vec![2, 2], None).unwrap();
        assert!(matches!(
            wbe_constant(&no_tail, 1.0, 1e-8),
            Err(EstimateError::TailRequired { .. })
        ));
    }
}

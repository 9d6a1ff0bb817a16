//! Points, projections, pair combinatorics, and exact geodesic distances on
//! the level-`i` graphs.
//!
//! A point of `F_i` is an angle `theta` on the circle plus copy labels
//! `w_1..w_i` (which parallel copy was taken at each level). Junction points
//! (angles that are multiples of `pi/J_b` for some `b <= i`) are shared by
//! every copy at levels `>= b`, so their labels at positions `>= b` carry no
//! information; the canonical representative stores 1 there. Two addresses
//! are the same point of `F_i` exactly when their canonical forms are equal.
//!
//! Distances are computed exactly, not by graph search: inside a branch the
//! metric is the angle difference; otherwise a geodesic exits each endpoint's
//! branch through one of its two boundary junctions, and between junctions
//! the only obstruction is the deepest label position on which they disagree.
//! Changing the label at position `p` requires touching an angle that is a
//! multiple of `pi/J_p`, every path's length is at least its total angular
//! variation (branches project isometrically to circle arcs), and every
//! (interval, label) combination is realized by a branch, so the infimum over
//! those lattice touch points is attained and exact. The shortest-path oracle
//! in `verify` double-checks this reasoning on discretized graphs.

use crate::params::{ParamError, ParameterSequences};
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;
use thiserror::Error;

const TAU: f64 = 2.0 * PI;

/// Angles closer than this to a junction angle are snapped onto it. Branch
/// widths at plausible working depths are at least ~1e-5, so the tolerance is
/// far below geometry scales yet far above accumulated rounding.
pub const JUNCTION_ANGLE_TOL: f64 = 1e-12;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum GeomError {
    #[error("angle {theta} is not finite")]
    InvalidAngle { theta: f64 },
    #[error("label w_{position} = {label} is out of range 1..={max}")]
    InvalidLabel { position: usize, label: u32, max: u64 },
    #[error("point has level {have} but the operation needs level {need}")]
    LevelMismatch { have: usize, need: usize },
    #[error("tolerance {tol} must be positive and finite")]
    InvalidTolerance { tol: f64 },
    #[error("cannot certify tolerance {tol}: {reason}")]
    InsufficientDepth { tol: f64, reason: String },
    #[error(transparent)]
    Param(#[from] ParamError),
}

/// Canonical address of a point on `F_i` (`i` = number of labels).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PointAddress {
    theta: f64,
    labels: Vec<u32>,
}

impl PointAddress {
    /// Build and canonicalize. The angle is reduced to `[0, 2*pi)`, labels
    /// are validated against the copy counts, junction angles are snapped
    /// exactly onto the lattice, and sentinel labels are installed beyond the
    /// junction's birth level.
    pub fn new(
        seq: &ParameterSequences,
        theta: f64,
        labels: Vec<u32>,
    ) -> Result<Self, GeomError> {
        if !theta.is_finite() {
            return Err(GeomError::InvalidAngle { theta });
        }
        let mut theta = theta.rem_euclid(TAU);
        if (TAU - theta).abs() <= JUNCTION_ANGLE_TOL {
            theta = 0.0;
        }
        let level = labels.len();
        let mut labels = labels;
        for (idx, &w) in labels.iter().enumerate() {
            let max = seq.n_at(idx + 1)?;
            if w == 0 || u64::from(w) > max {
                return Err(GeomError::InvalidLabel {
                    position: idx + 1,
                    label: w,
                    max,
                });
            }
        }
        if let Some((birth, snapped)) = junction_snap(seq, theta, level)? {
            theta = snapped;
            for p in birth.max(1)..=level {
                labels[p - 1] = 1;
            }
        }
        Ok(Self { theta, labels })
    }

    pub fn theta(&self) -> f64 {
        self.theta
    }

    pub fn labels(&self) -> &[u32] {
        &self.labels
    }

    pub fn level(&self) -> usize {
        self.labels.len()
    }

    /// Label at 1-indexed position, with the canonical value 1 beyond the
    /// explicit address length.
    pub fn label_at(&self, position: usize) -> u32 {
        debug_assert!(position >= 1);
        self.labels.get(position - 1).copied().unwrap_or(1)
    }

    /// Birth level of the junction this point sits on, if any: the smallest
    /// `b <= level` with `theta` on the lattice `pi/J_b`.
    pub fn birth_level(
        &self,
        seq: &ParameterSequences,
        level: usize,
    ) -> Result<Option<usize>, GeomError> {
        Ok(junction_snap(seq, self.theta, level)?.map(|(b, _)| b))
    }

    /// The same point viewed on `F_level`: labels are truncated, or extended
    /// with the canonical value 1 (a finite address denotes the thread that
    /// keeps picking copy 1 forever).
    pub fn view_at(
        &self,
        seq: &ParameterSequences,
        level: usize,
    ) -> Result<PointAddress, GeomError> {
        let mut labels = self.labels.clone();
        labels.resize(level, 1);
        PointAddress::new(seq, self.theta, labels)
    }
}

/// Projection `F_i -> F_k` for `k <= i` (drop the deepest labels).
pub fn project(
    seq: &ParameterSequences,
    x: &PointAddress,
    k: usize,
) -> Result<PointAddress, GeomError> {
    if k > x.level() {
        return Err(GeomError::LevelMismatch {
            have: x.level(),
            need: k,
        });
    }
    x.view_at(seq, k)
}

/// Locate `theta` on the junction lattice: smallest `b <= level` such that
/// `theta` is within tolerance of `k*pi/J_b`, together with the exact lattice
/// angle. Uses float cumulative products; exact for any depth of interest.
fn junction_snap(
    seq: &ParameterSequences,
    theta: f64,
    level: usize,
) -> Result<Option<(usize, f64)>, GeomError> {
    let mut jf = 1.0f64;
    for b in 0..=level {
        if b > 0 {
            jf *= seq.j_at(b)? as f64;
        }
        let width = PI / jf;
        let k = (theta / width).round();
        if (theta - k * width).abs() <= JUNCTION_ANGLE_TOL {
            let two_j = 2.0 * jf;
            let k = if k >= two_j { k - two_j } else { k };
            return Ok(Some((b, k * width)));
        }
    }
    Ok(None)
}

/// How deep two distinct points stay in a common bundle, and what sign each
/// level contributes to the kernel's correction sum.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PairDepth {
    /// `i_xy`: the deepest level at which the points share a bundle
    /// (0 when they already part ways at level 1).
    Finite(usize),
    /// Identical points: every level contributes.
    Diagonal,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PairClassification {
    pub depth: PairDepth,
    /// At level `i_xy` itself: same branch (`true`) or merely same bundle.
    pub same_branch_at_top: bool,
    /// `delta_xy(n_l)` for `l = 1..=i_xy`: `n_l - 1` below the top, and
    /// `n_l - 1` or `-1` at the top depending on `same_branch_at_top`.
    pub deltas: Vec<i64>,
}

/// Interval indices a point occupies at a given level. Interior points have
/// one; junction points lie on a boundary and belong to both neighbors.
fn interval_indices(
    seq: &ParameterSequences,
    p: &PointAddress,
    level: usize,
) -> Result<(i64, Option<i64>), GeomError> {
    let (jf, _) = seq.cumulative_f64(level)?;
    let width = PI / jf;
    let two_j = (2.0 * jf) as i64;
    match junction_snap(seq, p.theta, level)? {
        Some((_, angle)) => {
            let k = (angle / width).round() as i64;
            let k = k.rem_euclid(two_j);
            Ok((((k - 1).rem_euclid(two_j)), Some(k)))
        }
        None => {
            let k = ((p.theta / width).floor() as i64).clamp(0, two_j - 1);
            Ok((k, None))
        }
    }
}

fn intervals_intersect(a: (i64, Option<i64>), b: (i64, Option<i64>)) -> bool {
    let list_a = [Some(a.0), a.1];
    let list_b = [Some(b.0), b.1];
    list_a
        .iter()
        .flatten()
        .any(|ka| list_b.iter().flatten().any(|kb| ka == kb))
}

/// Labels compatible strictly below `position_end` (exclusive), treating
/// positions at or above a junction's birth level as wildcards.
fn labels_compatible_below(
    x: &PointAddress,
    birth_x: Option<usize>,
    y: &PointAddress,
    birth_y: Option<usize>,
    position_end: usize,
) -> bool {
    for p in 1..position_end {
        let wild_x = birth_x.is_some_and(|b| p >= b);
        let wild_y = birth_y.is_some_and(|b| p >= b);
        if !wild_x && !wild_y && x.label_at(p) != y.label_at(p) {
            return false;
        }
    }
    true
}

/// Do the points share a bundle at `level`: same junction interval there and
/// compatible labels below it.
fn same_bundle_at(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    level: usize,
) -> Result<bool, GeomError> {
    let ix = interval_indices(seq, x, level)?;
    let iy = interval_indices(seq, y, level)?;
    if !intervals_intersect(ix, iy) {
        return Ok(false);
    }
    let bx = junction_snap(seq, x.theta, level)?.map(|(b, _)| b);
    let by = junction_snap(seq, y.theta, level)?.map(|(b, _)| b);
    Ok(labels_compatible_below(x, bx, y, by, level))
}

/// Single-level case analysis for the level-peeling kernel recursion:
/// `None` when the points sit in different bundles at `level`, otherwise
/// `Some(same_branch)`.
pub(crate) fn bundle_case_at(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    level: usize,
) -> Result<Option<bool>, GeomError> {
    if !same_bundle_at(seq, x, y, level)? {
        return Ok(None);
    }
    Ok(Some(share_branch(seq, x, y, level)?))
}

/// Classify a pair of points for the kernel formulas. `cap` bounds the scan
/// (use the graph level for level kernels; `None` scans until the bundles
/// separate, which for distinct points always happens at finite depth).
pub fn classify_pair(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    cap: Option<usize>,
) -> Result<PairClassification, GeomError> {
    let max_level = x.level().max(y.level());
    let xv = x.view_at(seq, max_level)?;
    let yv = y.view_at(seq, max_level)?;
    if xv == yv {
        return Ok(PairClassification {
            depth: PairDepth::Diagonal,
            same_branch_at_top: true,
            deltas: Vec::new(),
        });
    }
    let mut i_xy = 0usize;
    let mut level = 1usize;
    loop {
        if let Some(c) = cap {
            if level > c {
                break;
            }
        }
        // Distinct points always separate at finite depth, but two angles one
        // float apart cannot be told apart once the branch width drops below
        // float resolution; stop there (kernel terms at such depths are far
        // below underflow anyway).
        let (jf, _) = seq.cumulative_f64(level)?;
        if jf > 1e18 {
            break;
        }
        if same_bundle_at(seq, &xv, &yv, level)? {
            i_xy = level;
            level += 1;
        } else {
            break;
        }
    }
    let same_branch_at_top = if i_xy == 0 {
        false
    } else {
        let bx = junction_snap(seq, xv.theta, i_xy)?.map(|(b, _)| b);
        let by = junction_snap(seq, yv.theta, i_xy)?.map(|(b, _)| b);
        labels_compatible_below(&xv, bx, &yv, by, i_xy + 1)
    };
    let mut deltas = Vec::with_capacity(i_xy);
    for l in 1..=i_xy {
        let n_l = seq.n_at(l)? as i64;
        if l < i_xy || same_branch_at_top {
            deltas.push(n_l - 1);
        } else {
            deltas.push(-1);
        }
    }
    Ok(PairClassification {
        depth: PairDepth::Finite(i_xy),
        same_branch_at_top,
        deltas,
    })
}

fn circle_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).rem_euclid(TAU);
    d.min(TAU - d)
}

/// Exact distance between two junction points. With no label conflict below
/// both birth levels the circle distance is achievable; otherwise the path
/// must touch the lattice `pi/J_{p*}` of the shallowest conflicting position
/// `p*`, and the optimum over touch points sits next to a breakpoint of the
/// piecewise-linear objective.
fn junction_distance(
    seq: &ParameterSequences,
    z1: &PointAddress,
    b1: usize,
    z2: &PointAddress,
    b2: usize,
) -> Result<f64, GeomError> {
    let mut conflict = None;
    for p in 1..b1.min(b2) {
        if z1.label_at(p) != z2.label_at(p) {
            conflict = Some(p);
            break;
        }
    }
    let alpha = z1.theta;
    let beta = z2.theta;
    let Some(p_star) = conflict else {
        return Ok(circle_distance(alpha, beta));
    };
    let (jf, _) = seq.cumulative_f64(p_star)?;
    let lattice = PI / jf;
    let mut best = f64::INFINITY;
    for breakpoint in [alpha, alpha + PI, beta, beta + PI] {
        let k = (breakpoint / lattice).floor();
        for m in [k * lattice, (k + 1.0) * lattice] {
            let via = circle_distance(alpha, m) + circle_distance(m, beta);
            best = best.min(via);
        }
    }
    Ok(best)
}

/// Branch-exit junctions of a point at `level`, each with the within-branch
/// cost of reaching it. A junction point is its own (free) exit.
fn exits(
    seq: &ParameterSequences,
    p: &PointAddress,
    level: usize,
) -> Result<Vec<(PointAddress, usize, f64)>, GeomError> {
    if let Some(b) = junction_snap(seq, p.theta, level)?.map(|(b, _)| b) {
        return Ok(vec![(p.clone(), b, 0.0)]);
    }
    let (jf, _) = seq.cumulative_f64(level)?;
    let width = PI / jf;
    let k = (p.theta / width).floor();
    let mut out = Vec::with_capacity(2);
    for (angle, cost) in [
        (k * width, p.theta - k * width),
        ((k + 1.0) * width, (k + 1.0) * width - p.theta),
    ] {
        let z = PointAddress::new(seq, angle, p.labels.clone())?;
        let b = z
            .birth_level(seq, level)?
            .expect("lattice angle is a junction");
        out.push((z, b, cost));
    }
    Ok(out)
}

/// Do the two points lie on (the closure of) a common branch of `F_level`?
fn share_branch(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    level: usize,
) -> Result<bool, GeomError> {
    let ix = interval_indices(seq, x, level)?;
    let iy = interval_indices(seq, y, level)?;
    if !intervals_intersect(ix, iy) {
        return Ok(false);
    }
    let bx = junction_snap(seq, x.theta, level)?.map(|(b, _)| b);
    let by = junction_snap(seq, y.theta, level)?.map(|(b, _)| b);
    Ok(labels_compatible_below(x, bx, y, by, level + 1))
}

/// Geodesic distance on `F_i`. Points of other levels are first viewed on
/// `F_i` (truncation or canonical extension).
pub fn distance_level(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    i: usize,
) -> Result<f64, GeomError> {
    let xv = x.view_at(seq, i)?;
    let yv = y.view_at(seq, i)?;
    if xv == yv {
        return Ok(0.0);
    }
    if i == 0 {
        return Ok(circle_distance(xv.theta, yv.theta));
    }
    if share_branch(seq, &xv, &yv, i)? {
        return Ok((xv.theta - yv.theta).abs());
    }
    let ex = exits(seq, &xv, i)?;
    let ey = exits(seq, &yv, i)?;
    let mut best = f64::INFINITY;
    for (zx, bx, cx) in &ex {
        for (zy, by, cy) in &ey {
            let mid = if zx == zy {
                0.0
            } else {
                junction_distance(seq, zx, *bx, zy, *by)?
            };
            best = best.min(cx + mid + cy);
        }
    }
    Ok(best)
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LimitDistance {
    pub value: f64,
    /// Level at which the approximation was evaluated.
    pub level: usize,
    /// Certified bound on `d_infty - value` (the approximation from below).
    pub tail_bound: f64,
}

/// Distance on the inverse limit: `d_i` evaluated at the first level whose
/// metric tail `sum_{k>i} 2*pi/J_k` drops below `tol`. Requires a regular
/// tail; a finite prefix leaves the deeper geometry undefined, so no
/// tolerance can be certified from it.
pub fn distance_limit(
    seq: &ParameterSequences,
    x: &PointAddress,
    y: &PointAddress,
    tol: f64,
) -> Result<LimitDistance, GeomError> {
    if !(tol > 0.0 && tol.is_finite()) {
        return Err(GeomError::InvalidTolerance { tol });
    }
    let Some((j_star, _)) = seq.tail() else {
        return Err(GeomError::InsufficientDepth {
            tol,
            reason: "sequence has no regular tail, so the metric tail beyond the prefix is undefined".into(),
        });
    };
    let prefix = seq.prefix_len();
    let mut level = 0usize;
    let mut jf = 1.0f64;
    loop {
        level += 1;
        jf *= seq.j_at(level)? as f64;
        let mut tail = 0.0f64;
        let mut jcur = jf;
        for k in (level + 1)..=prefix {
            jcur *= seq.j_at(k)? as f64;
            tail += 1.0 / jcur;
        }
        tail += 1.0 / (jcur * (j_star - 1) as f64);
        let tail = TAU * tail;
        if tail < tol {
            let value = distance_level(seq, x, y, level)?;
            return Ok(LimitDistance {
                value,
                level,
                tail_bound: tail,
            });
        }
        if level > 4096 {
            return Err(GeomError::InsufficientDepth {
                tol,
                reason: "tolerance below what float geometry can certify".into(),
            });
        }
    }
}

//! Grid functions on the level-`i` graphs and the quadrature realization of
//! the heat semigroup, together with the fiber operators (average over
//! parallel copies, lift to deeper levels, symmetric/antisymmetric parts),
//! the discrete Dirichlet energy, and the entropy functional.
//!
//! A [`GridFunction`] samples one value per grid node on every branch: the
//! branch set at level `i` is (junction interval `k` in `0..2 J_i`) x (copy
//! labels `w_1..w_i`), each branch carrying a uniform grid of `m` points
//! including both endpoint junctions. The measure weights every branch by
//! `1/N_i` per unit length, so the whole space has measure `2 pi` at every
//! level. Junction nodes are shared between incident branches; functions
//! sampled from point functions are automatically continuous there.

use crate::geometry::{GeomError, PointAddress};
use crate::kernels::{
    self, interval_kernel_dirichlet, KernelError, KernelEvalConfig,
};
use crate::params::{ParamError, ParameterSequences};
use rayon::prelude::*;
use std::f64::consts::PI;
use thiserror::Error;

const TAU: f64 = 2.0 * PI;

#[derive(Debug, Error)]
pub enum SemigroupError {
    #[error(transparent)]
    Kernel(#[from] KernelError),
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error("grid functions are not compatible: {what}")]
    GridMismatch { what: String },
    #[error("invalid grid parameter: {reason}")]
    InvalidGrid { reason: String },
    #[error("sample value {value} is negative beyond the entropy floor")]
    NegativeSample { value: f64 },
    #[error("entropy floor {floor} must be positive and finite")]
    InvalidFloor { floor: f64 },
}

/// Quadrature rule used on each branch.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureRule {
    /// Composite trapezoid; endpoints carry half weight, which matches the
    /// shared-junction sampling convention.
    Trapezoid,
    /// Composite Simpson; needs an odd number of points per branch.
    Simpson,
}

fn quad_weights(rule: QuadratureRule, m: usize) -> Result<Vec<f64>, SemigroupError> {
    match rule {
        QuadratureRule::Trapezoid => {
            let mut w = vec![1.0; m];
            w[0] = 0.5;
            w[m - 1] = 0.5;
            Ok(w)
        }
        QuadratureRule::Simpson => {
            if m < 3 || m.is_multiple_of(2) {
                return Err(SemigroupError::InvalidGrid {
                    reason: format!("Simpson quadrature needs an odd point count >= 3, got {m}"),
                });
            }
            let mut w = vec![0.0; m];
            for (idx, entry) in w.iter_mut().enumerate() {
                *entry = if idx == 0 || idx == m - 1 {
                    1.0 / 3.0
                } else if idx % 2 == 1 {
                    4.0 / 3.0
                } else {
                    2.0 / 3.0
                };
            }
            Ok(w)
        }
    }
}

/// Uniformly sampled function on the level-`level` graph.
#[derive(Debug, Clone)]
pub struct GridFunction {
    seq: ParameterSequences,
    level: usize,
    /// Points per branch, endpoints included.
    m: usize,
    j_total: u64,
    n_total: u64,
    /// Branch-major storage; branch index = interval * N + label rank with
    /// `w_1` the fastest-moving digit.
    values: Vec<f64>,
}

impl GridFunction {
    fn layout(
        seq: &ParameterSequences,
        level: usize,
        m: usize,
    ) -> Result<(u64, u64), SemigroupError> {
        if m < 2 {
            return Err(SemigroupError::InvalidGrid {
                reason: format!("need at least 2 points per branch, got {m}"),
            });
        }
        let (j_total, n_total) = seq.cumulative(level)?;
        Ok((j_total, n_total))
    }

    /// Sample a point function on every grid node (canonical addresses, so
    /// shared junctions automatically receive consistent values).
    pub fn sample(
        seq: &ParameterSequences,
        level: usize,
        m: usize,
        f: impl Fn(&PointAddress) -> f64,
    ) -> Result<Self, SemigroupError> {
        let (j_total, n_total) = Self::layout(seq, level, m)?;
        let branches = 2 * j_total as usize * n_total as usize;
        let mut values = Vec::with_capacity(branches * m);
        let mut out = Self {
            seq: seq.clone(),
            level,
            m,
            j_total,
            n_total,
            values: Vec::new(),
        };
        for b in 0..branches {
            for idx in 0..m {
                let x = out.point_address_in(b, idx)?;
                values.push(f(&x));
            }
        }
        out.values = values;
        Ok(out)
    }

    /// Build from explicit per-branch value arrays (branch order: interval
    /// major, label rank minor with `w_1` fastest).
    pub fn from_branch_values(
        seq: &ParameterSequences,
        level: usize,
        m: usize,
        branch_values: Vec<Vec<f64>>,
    ) -> Result<Self, SemigroupError> {
        let (j_total, n_total) = Self::layout(seq, level, m)?;
        let branches = 2 * j_total as usize * n_total as usize;
        if branch_values.len() != branches {
            return Err(SemigroupError::GridMismatch {
                what: format!(
                    "expected {branches} branches at level {level}, got {}",
                    branch_values.len()
                ),
            });
        }
        let mut values = Vec::with_capacity(branches * m);
        for (b, row) in branch_values.into_iter().enumerate() {
            if row.len() != m {
                return Err(SemigroupError::GridMismatch {
                    what: format!("branch {b} has {} samples, expected {m}", row.len()),
                });
            }
            values.extend_from_slice(&row);
        }
        Ok(Self {
            seq: seq.clone(),
            level,
            m,
            j_total,
            n_total,
            values,
        })
    }

    pub fn constant(
        seq: &ParameterSequences,
        level: usize,
        m: usize,
        c: f64,
    ) -> Result<Self, SemigroupError> {
        Self::sample(seq, level, m, |_| c)
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn points_per_branch(&self) -> usize {
        self.m
    }

    pub fn branch_count(&self) -> usize {
        2 * self.j_total as usize * self.n_total as usize
    }

    pub fn sequences(&self) -> &ParameterSequences {
        &self.seq
    }

    /// Grid step along every branch.
    pub fn step(&self) -> f64 {
        (PI / self.j_total as f64) / (self.m - 1) as f64
    }

    pub fn value(&self, branch: usize, idx: usize) -> f64 {
        self.values[branch * self.m + idx]
    }

    pub fn branch_values(&self, branch: usize) -> &[f64] {
        &self.values[branch * self.m..(branch + 1) * self.m]
    }

    pub fn flat_values(&self) -> &[f64] {
        &self.values
    }

    /// Copy labels of a branch (decoded from its index).
    pub fn branch_labels(&self, branch: usize) -> Vec<u32> {
        let rank = branch % self.n_total as usize;
        self.decode_rank(rank)
    }

    /// Junction interval index of a branch.
    pub fn branch_interval(&self, branch: usize) -> usize {
        branch / self.n_total as usize
    }

    fn decode_rank(&self, rank: usize) -> Vec<u32> {
        let mut labels = Vec::with_capacity(self.level);
        let mut r = rank as u64;
        for l in 1..=self.level {
            let n_l = self
                .seq
                .n_at(l)
                .expect("level validated at construction");
            labels.push((r % n_l) as u32 + 1);
            r /= n_l;
        }
        labels
    }

    fn point_address_in(&self, branch: usize, idx: usize) -> Result<PointAddress, SemigroupError> {
        let k = self.branch_interval(branch);
        let labels = self.branch_labels(branch);
        let width = PI / self.j_total as f64;
        let theta = width * (k as f64 + idx as f64 / (self.m - 1) as f64);
        Ok(PointAddress::new(&self.seq, theta, labels)?)
    }

    /// Canonical address of a grid node.
    pub fn point_address(&self, branch: usize, idx: usize) -> Result<PointAddress, SemigroupError> {
        if branch >= self.branch_count() || idx >= self.m {
            return Err(SemigroupError::GridMismatch {
                what: format!("node ({branch}, {idx}) outside the grid"),
            });
        }
        self.point_address_in(branch, idx)
    }

    pub fn map(&self, g: impl Fn(f64) -> f64) -> Self {
        let mut out = self.clone();
        for v in out.values.iter_mut() {
            *v = g(*v);
        }
        out
    }

    fn check_compatible(&self, other: &Self) -> Result<(), SemigroupError> {
        if self.level != other.level || self.m != other.m || self.seq != other.seq {
            return Err(SemigroupError::GridMismatch {
                what: "level, resolution, and parameter sequences must all match".into(),
            });
        }
        Ok(())
    }

    pub fn zip_with(
        &self,
        other: &Self,
        g: impl Fn(f64, f64) -> f64,
    ) -> Result<Self, SemigroupError> {
        self.check_compatible(other)?;
        let mut out = self.clone();
        for (v, w) in out.values.iter_mut().zip(&other.values) {
            *v = g(*v, *w);
        }
        Ok(out)
    }

    /// Total measure of the level-`level` space (`2 pi` at every level).
    pub fn total_measure(&self) -> f64 {
        TAU
    }

    /// Quadrature integral against the level measure.
    pub fn integral_with(&self, rule: QuadratureRule) -> Result<f64, SemigroupError> {
        let w = quad_weights(rule, self.m)?;
        let h = self.step();
        let scale = h / self.n_total as f64;
        let mut acc = 0.0;
        for b in 0..self.branch_count() {
            let row = self.branch_values(b);
            let mut s = 0.0;
            for (v, wq) in row.iter().zip(&w) {
                s += v * wq;
            }
            acc += s * scale;
        }
        Ok(acc)
    }

    pub fn integral(&self) -> f64 {
        self.integral_with(QuadratureRule::Trapezoid)
            .expect("trapezoid weights exist for every valid grid")
    }

    /// Measure-weighted inner product.
    pub fn inner(&self, other: &Self) -> Result<f64, SemigroupError> {
        self.zip_with(other, |a, b| a * b)?
            .integral_with(QuadratureRule::Trapezoid)
    }

    pub fn l2_norm(&self) -> f64 {
        self.inner(self).expect("self is compatible with itself").sqrt()
    }

    pub fn sup_norm(&self) -> f64 {
        self.values.iter().fold(0.0f64, |m, v| m.max(v.abs()))
    }

    /// Largest discrepancy between values stored for the same junction node
    /// by different incident branches (0 for functions on the actual space).
    pub fn max_junction_mismatch(&self) -> Result<f64, SemigroupError> {
        use std::collections::HashMap;
        let mut seen: HashMap<String, f64> = HashMap::new();
        let mut worst = 0.0f64;
        for b in 0..self.branch_count() {
            for idx in [0, self.m - 1] {
                let p = self.point_address_in(b, idx)?;
                let key = format!("{:x}:{:?}", p.theta().to_bits(), p.labels());
                let v = self.value(b, idx);
                match seen.get(&key) {
                    Some(&prev) => worst = worst.max((prev - v).abs()),
                    None => {
                        seen.insert(key, v);
                    }
                }
            }
        }
        Ok(worst)
    }
}

/// Apply the level heat semigroup by quadrature:
/// `(P_t f)(x) = integral p_t(x, y) f(y) dmu(y)`.
pub fn apply_semigroup(
    f: &GridFunction,
    t: f64,
    rule: QuadratureRule,
    cfg: &KernelEvalConfig,
) -> Result<GridFunction, SemigroupError> {
    let m = f.m;
    let w = quad_weights(rule, m)?;
    let h = f.step();
    let scale = h / f.n_total as f64;
    let branches = f.branch_count();
    // Materialize source nodes once.
    let mut sources = Vec::with_capacity(branches * m);
    for b in 0..branches {
        for (idx, &wi) in w.iter().enumerate() {
            sources.push((f.point_address_in(b, idx)?, f.value(b, idx) * wi * scale));
        }
    }
    let level = f.level;
    let seq = &f.seq;
    let targets: Vec<(usize, usize)> = (0..branches)
        .flat_map(|b| (0..m).map(move |idx| (b, idx)))
        .collect();
    let values: Result<Vec<f64>, SemigroupError> = targets
        .par_iter()
        .map(|&(b, idx)| {
            let x = f.point_address_in(b, idx)?;
            let mut acc = 0.0;
            for (y, fw) in &sources {
                if *fw == 0.0 {
                    continue;
                }
                let p = kernels::diamond_kernel_level(seq, level, t, &x, y, cfg)?;
                acc += p.value * fw;
            }
            Ok(acc)
        })
        .collect();
    let mut out = f.clone();
    out.values = values?;
    Ok(out)
}

/// Average over the `n_i` parallel copies at the deepest level: produces a
/// function one level down, on the concatenated finer grid (`j_i (m-1) + 1`
/// points per coarser branch, same grid step).
pub fn integrate_fibers(f: &GridFunction) -> Result<GridFunction, SemigroupError> {
    if f.level == 0 {
        return Err(SemigroupError::InvalidGrid {
            reason: "level-0 functions have no fibers to integrate".into(),
        });
    }
    let level = f.level;
    let j_i = f.seq.j_at(level)? as usize;
    let n_i = f.seq.n_at(level)? as usize;
    let (j_prev, n_prev) = f.seq.cumulative(level - 1)?;
    let m_out = j_i * (f.m - 1) + 1;
    let out_branches = 2 * j_prev as usize * n_prev as usize;
    let mut rows = Vec::with_capacity(out_branches);
    for b_out in 0..out_branches {
        let k_out = b_out / n_prev as usize;
        let rank_prev = b_out % n_prev as usize;
        let mut row = Vec::with_capacity(m_out);
        for g in 0..m_out {
            // Locate the fine sub-branch and local index for this node.
            let (r, local) = if g == m_out - 1 {
                (j_i - 1, f.m - 1)
            } else {
                (g / (f.m - 1), g % (f.m - 1))
            };
            let k_in = k_out * j_i + r;
            let mut acc = 0.0;
            for w in 0..n_i {
                let rank_in = rank_prev + w * n_prev as usize;
                let b_in = k_in * f.n_total as usize + rank_in;
                acc += f.value(b_in, local);
            }
            row.push(acc / n_i as f64);
        }
        rows.push(row);
    }
    GridFunction::from_branch_values(&f.seq, level - 1, m_out, rows)
}

/// Lift a level-`k` function to level `target` by copying values (the lifted
/// function is constant across fibers). The source resolution must slice
/// evenly: `(m - 1)` divisible by `J_target / J_k`.
pub fn lift(f: &GridFunction, target: usize) -> Result<GridFunction, SemigroupError> {
    if target < f.level {
        return Err(SemigroupError::InvalidGrid {
            reason: format!("cannot lift from level {} down to {target}", f.level),
        });
    }
    if target == f.level {
        return Ok(f.clone());
    }
    let (j_t, n_t) = f.seq.cumulative(target)?;
    let ratio = (j_t / f.j_total) as usize;
    if !(f.m - 1).is_multiple_of(ratio) {
        return Err(SemigroupError::InvalidGrid {
            reason: format!(
                "grid with {} intervals per branch cannot be sliced into {ratio} sub-branches",
                f.m - 1
            ),
        });
    }
    let m_out = (f.m - 1) / ratio + 1;
    let out_branches = 2 * j_t as usize * n_t as usize;
    let mut rows = Vec::with_capacity(out_branches);
    for b_out in 0..out_branches {
        let q = b_out / n_t as usize;
        let rank_t = b_out % n_t as usize;
        let rank_src = rank_t % f.n_total as usize;
        let k_src = q / ratio;
        let r = q % ratio;
        let b_src = k_src * f.n_total as usize + rank_src;
        let base = r * (m_out - 1);
        let src = f.branch_values(b_src);
        rows.push(src[base..base + m_out].to_vec());
    }
    GridFunction::from_branch_values(&f.seq, target, m_out, rows)
}

/// Symmetric part: average over the deepest fibers, lifted back. Acts as the
/// orthogonal projection onto functions constant across level-`i` copies.
pub fn project_sym(f: &GridFunction) -> Result<GridFunction, SemigroupError> {
    lift(&integrate_fibers(f)?, f.level)
}

/// Antisymmetric part `f - project_sym(f)`; vanishes at every junction node.
pub fn project_antisym(f: &GridFunction) -> Result<GridFunction, SemigroupError> {
    f.zip_with(&project_sym(f)?, |a, b| a - b)
}

/// Evolve each branch independently under the Dirichlet interval kernel
/// (absorbing junctions). This is the motion of the antisymmetric part in the
/// one-level decomposition of the semigroup.
pub fn dirichlet_branch_evolution(
    f: &GridFunction,
    t: f64,
    rule: QuadratureRule,
    cfg: &KernelEvalConfig,
) -> Result<GridFunction, SemigroupError> {
    let m = f.m;
    let w = quad_weights(rule, m)?;
    let h = f.step();
    let len = (f.m - 1) as f64 * h;
    let mut out = f.clone();
    for b in 0..f.branch_count() {
        let src = f.branch_values(b).to_vec();
        for idx in 0..m {
            let x = idx as f64 * h;
            let x = if idx == m - 1 { len } else { x };
            let mut acc = 0.0;
            for (jdx, (v, wq)) in src.iter().zip(&w).enumerate() {
                let y = if jdx == m - 1 { len } else { jdx as f64 * h };
                let p = interval_kernel_dirichlet(t, len, x, y, cfg)?;
                acc += p.value * v * wq * h;
            }
            out.values[b * m + idx] = acc;
        }
    }
    Ok(out)
}

/// Discrete Dirichlet energy: per-branch sum of squared difference quotients
/// (the exact energy of the piecewise-linear interpolant), weighted by
/// `1/N_i`. Exactly invariant under `lift`.
pub fn dirichlet_energy(f: &GridFunction) -> Result<f64, SemigroupError> {
    if f.m < 3 {
        return Err(SemigroupError::InvalidGrid {
            reason: format!("energy needs at least 3 points per branch, got {}", f.m),
        });
    }
    let h = f.step();
    let mut acc = 0.0;
    for b in 0..f.branch_count() {
        let row = f.branch_values(b);
        let mut s = 0.0;
        for pair in row.windows(2) {
            let d = (pair[1] - pair[0]) / h;
            s += d * d * h;
        }
        acc += s / f.n_total as f64;
    }
    Ok(acc)
}

/// Entropy of a nonnegative function relative to its own mean:
/// `integral f ln f dmu - (integral f) ln(integral f / mu(F))`.
/// Samples below `floor` contribute zero to `f ln f`.
pub fn entropy(f: &GridFunction, floor: f64) -> Result<f64, SemigroupError> {
    if !(floor > 0.0 && floor.is_finite()) {
        return Err(SemigroupError::InvalidFloor { floor });
    }
    for &v in &f.values {
        if v < -floor {
            return Err(SemigroupError::NegativeSample { value: v });
        }
    }
    let phi = f.map(|v| if v < floor { 0.0 } else { v * v.ln() });
    let a = phi.integral();
    let mass = f.integral();
    if mass <= floor {
        return Ok(0.0);
    }
    Ok(a - mass * (mass / f.total_measure()).ln())
}

/// Default entropy floor relative to the largest sample.
pub fn default_entropy_floor(f: &GridFunction) -> f64 {
    1e-12 * f.sup_norm().max(1.0)
}

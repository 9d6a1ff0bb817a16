//! Finite-difference discretization of the level graphs as weighted cable
//! systems, with an exact-arithmetic-free but certified eigensolver.
//!
//! Nodes are the shared junction vertices plus per-branch interior grid
//! points. The stiffness operator applies the second difference along each
//! branch with conductance `1/(N_i h)` and balances fluxes at junctions
//! (natural vertex conditions); the lumped mass gives interior nodes weight
//! `h/N_i` and junctions the half-weights of every incident branch end. The
//! generalized problem `K psi = lambda M psi` is solved either densely (small
//! node counts) or by shift-inverted subspace iteration on the
//! branch-tridiagonal-plus-junction structure; in the sparse case the count
//! of eigenvalues below the reported threshold is certified by the inertia of
//! an `L D L^T` factorization, so no eigenvalue can be silently missed.

use crate::geometry::{GeomError, PointAddress};
use crate::params::{ParamError, ParameterSequences};
use crate::semigroup::SemigroupError;
use nalgebra::{DMatrix, DVector};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::collections::HashMap;
use std::f64::consts::PI;
use thiserror::Error;

/// Largest node count still sent to the full dense eigensolver; beyond this
/// the structured shift-invert path takes over.
const DENSE_NODE_LIMIT: usize = 380;

/// Eigendecomposition of a symmetric matrix by cyclic Jacobi rotations,
/// returned ascending. Slower than Householder tridiagonalization but
/// unconditionally robust on clustered and degenerate spectra, which the
/// cable operators have in abundance (branch copies produce eigenvalues of
/// high multiplicity).
fn jacobi_eigen(mut a: DMatrix<f64>) -> Result<(Vec<f64>, DMatrix<f64>), VerifyError> {
    let n = a.nrows();
    let mut v = DMatrix::<f64>::identity(n, n);
    if n == 0 {
        return Ok((Vec::new(), v));
    }
    let mut d: Vec<f64> = (0..n).map(|i| a[(i, i)]).collect();
    let mut b = d.clone();
    let mut z = vec![0.0f64; n];
    let scale: f64 = d.iter().map(|x| x.abs()).sum::<f64>().max(1e-300);
    for sweep in 0..100 {
        let mut sm = 0.0;
        for p in 0..n - 1 {
            for q in p + 1..n {
                sm += a[(p, q)].abs();
            }
        }
        if sm == 0.0 || sm <= 1e-15 * scale {
            let mut order: Vec<usize> = (0..n).collect();
            order.sort_by(|&i, &j| d[i].total_cmp(&d[j]));
            let vals: Vec<f64> = order.iter().map(|&i| d[i]).collect();
            let mut vecs = DMatrix::<f64>::zeros(n, n);
            for (col, &i) in order.iter().enumerate() {
                vecs.set_column(col, &v.column(i));
            }
            return Ok((vals, vecs));
        }
        let thresh = if sweep < 4 {
            0.2 * sm / (n * n) as f64
        } else {
            0.0
        };
        for p in 0..n - 1 {
            for q in p + 1..n {
                let g = 100.0 * a[(p, q)].abs();
                if sweep > 4 && d[p].abs() + g == d[p].abs() && d[q].abs() + g == d[q].abs() {
                    a[(p, q)] = 0.0;
                } else if a[(p, q)].abs() > thresh {
                    let mut h = d[q] - d[p];
                    let t = if h.abs() + g == h.abs() {
                        a[(p, q)] / h
                    } else {
                        let theta = 0.5 * h / a[(p, q)];
                        let mut t = 1.0 / (theta.abs() + (1.0 + theta * theta).sqrt());
                        if theta < 0.0 {
                            t = -t;
                        }
                        t
                    };
                    let c = 1.0 / (1.0 + t * t).sqrt();
                    let s = t * c;
                    let tau = s / (1.0 + c);
                    h = t * a[(p, q)];
                    z[p] -= h;
                    z[q] += h;
                    d[p] -= h;
                    d[q] += h;
                    a[(p, q)] = 0.0;
                    let rot = |a: &mut DMatrix<f64>, i: usize, j: usize, k: usize, l: usize| {
                        let gg = a[(i, j)];
                        let hh = a[(k, l)];
                        a[(i, j)] = gg - s * (hh + gg * tau);
                        a[(k, l)] = hh + s * (gg - hh * tau);
                    };
                    for j in 0..p {
                        rot(&mut a, j, p, j, q);
                    }
                    for j in p + 1..q {
                        rot(&mut a, p, j, j, q);
                    }
                    for j in q + 1..n {
                        rot(&mut a, p, j, q, j);
                    }
                    for j in 0..n {
                        let gg = v[(j, p)];
                        let hh = v[(j, q)];
                        v[(j, p)] = gg - s * (hh + gg * tau);
                        v[(j, q)] = hh + s * (gg - hh * tau);
                    }
                }
            }
        }
        for i in 0..n {
            b[i] += z[i];
            d[i] = b[i];
            z[i] = 0.0;
        }
    }
    Err(VerifyError::Eigensolver {
        reason: "Jacobi sweeps did not converge".into(),
    })
}

#[derive(Debug, Error)]
pub enum VerifyError {
    #[error("invalid discretization: {reason}")]
    Discretization { reason: String },
    #[error("eigensolver failed: {reason}")]
    Eigensolver { reason: String },
    #[error(transparent)]
    Geometry(#[from] GeomError),
    #[error(transparent)]
    Param(#[from] ParamError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
}

/// Discretized level graph: shared junction nodes first, then per-branch
/// interior nodes in branch-major order (matching the grid-function layout).
pub struct CableDiscretization {
    seq: ParameterSequences,
    level: usize,
    m: usize,
    h: f64,
    conductance: f64,
    n_total: u64,
    branch_count: usize,
    junction_count: usize,
    node_count: usize,
    branch_ends: Vec<(usize, usize)>,
    pub mass: Vec<f64>,
    node_points: Vec<PointAddress>,
    junction_index: HashMap<(u64, Vec<u32>), usize>,
}

fn point_key(p: &PointAddress) -> (u64, Vec<u32>) {
    (p.theta().to_bits(), p.labels().to_vec())
}

impl CableDiscretization {
    pub fn new(
        seq: &ParameterSequences,
        level: usize,
        m: usize,
    ) -> Result<Self, VerifyError> {
        if m < 3 {
            return Err(VerifyError::Discretization {
                reason: format!("need at least 3 points per branch, got {m}"),
            });
        }
        let (j_total, n_total) = seq.cumulative(level)?;
        let branch_count = 2 * j_total as usize * n_total as usize;
        let width = PI / j_total as f64;
        let h = width / (m - 1) as f64;
        let conductance = 1.0 / (n_total as f64 * h);
        let interior = m - 2;

        // First pass: junction nodes (deduplicated by canonical address).
        let mut junction_index = HashMap::new();
        let mut node_points = Vec::new();
        let mut branch_ends = Vec::with_capacity(branch_count);
        for b in 0..branch_count {
            let k = b / n_total as usize;
            let labels = decode_labels(seq, level, b % n_total as usize)?;
            let mut ends = [0usize; 2];
            for (side, idx) in [(0usize, 0usize), (1, m - 1)] {
                let theta = width * (k as f64 + idx as f64 / (m - 1) as f64);
                let p = PointAddress::new(seq, theta, labels.clone())?;
                let key = point_key(&p);
                let next = junction_index.len();
                let id = *junction_index.entry(key).or_insert(next);
                if id == node_points.len() {
                    node_points.push(p);
                }
                ends[side] = id;
            }
            branch_ends.push((ends[0], ends[1]));
        }
        let junction_count = junction_index.len();

        // Second pass: interior nodes, branch-major.
        for b in 0..branch_count {
            let k = b / n_total as usize;
            let labels = decode_labels(seq, level, b % n_total as usize)?;
            for idx in 1..m - 1 {
                let theta = width * (k as f64 + idx as f64 / (m - 1) as f64);
                node_points.push(PointAddress::new(seq, theta, labels.clone())?);
            }
        }
        let node_count = junction_count + branch_count * interior;

        let mut mass = vec![0.0; node_count];
        let m_int = h / n_total as f64;
        for b in 0..branch_count {
            let (l, r) = branch_ends[b];
            mass[l] += 0.5 * m_int;
            mass[r] += 0.5 * m_int;
            for idx in 0..interior {
                mass[junction_count + b * interior + idx] = m_int;
            }
        }

        Ok(Self {
            seq: seq.clone(),
            level,
            m,
            h,
            conductance,
            n_total,
            branch_count,
            junction_count,
            node_count,
            branch_ends,
            mass,
            node_points,
            junction_index,
        })
    }

    pub fn node_count(&self) -> usize {
        self.node_count
    }

    pub fn junction_count(&self) -> usize {
        self.junction_count
    }

    pub fn branch_count(&self) -> usize {
        self.branch_count
    }

    pub fn points_per_branch(&self) -> usize {
        self.m
    }

    pub fn step(&self) -> f64 {
        self.h
    }

    pub fn level(&self) -> usize {
        self.level
    }

    pub fn sequences(&self) -> &ParameterSequences {
        &self.seq
    }

    pub fn point_of(&self, node: usize) -> &PointAddress {
        &self.node_points[node]
    }

    /// Node id of grid sample `idx` on branch `b` (same layout as grid
    /// functions: interval-major branch order, `w_1` fastest label digit).
    pub fn node_of_grid(&self, branch: usize, idx: usize) -> usize {
        if idx == 0 {
            self.branch_ends[branch].0
        } else if idx == self.m - 1 {
            self.branch_ends[branch].1
        } else {
            self.junction_count + branch * (self.m - 2) + (idx - 1)
        }
    }

    /// Locate the node carrying exactly this canonical address, if any.
    pub fn node_at(&self, p: &PointAddress) -> Option<usize> {
        if let Some(&id) = self.junction_index.get(&point_key(p)) {
            return Some(id);
        }
        let (j_total, _) = self.seq.cumulative(self.level).ok()?;
        let width = PI / j_total as f64;
        let pos = p.theta() / width;
        let k = (pos.floor() as usize).min(2 * j_total as usize - 1);
        let frac = pos - k as f64;
        let idx = (frac * (self.m - 1) as f64).round() as usize;
        if idx == 0 || idx >= self.m - 1 {
            return None;
        }
        let theta_node = width * (k as f64 + idx as f64 / (self.m - 1) as f64);
        if (theta_node - p.theta()).abs() > 1e-9 {
            return None;
        }
        let mut rank = 0usize;
        let mut mult = 1usize;
        for l in 1..=self.level {
            let n_l = self.seq.n_at(l).ok()? as usize;
            let w = p.label_at(l) as usize;
            rank += (w - 1) * mult;
            mult *= n_l;
        }
        Some(self.junction_count + (k * self.n_total as usize + rank) * (self.m - 2) + idx - 1)
    }

    /// Stiffness operator: second differences along branches with flux
    /// balance at junctions. Row sums vanish.
    pub fn matvec_k(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        let c = self.conductance;
        let interior = self.m - 2;
        for b in 0..self.branch_count {
            let (l, r) = self.branch_ends[b];
            let base = self.junction_count + b * interior;
            let mut prev = l;
            for idx in 0..interior {
                let cur = base + idx;
                let d = x[prev] - x[cur];
                out[prev] += c * d;
                out[cur] -= c * d;
                prev = cur;
            }
            let d = x[prev] - x[r];
            out[prev] += c * d;
            out[r] -= c * d;
        }
    }

    pub fn neighbors(&self) -> Vec<Vec<usize>> {
        let mut adj = vec![Vec::new(); self.node_count];
        let interior = self.m - 2;
        for b in 0..self.branch_count {
            let (l, r) = self.branch_ends[b];
            let base = self.junction_count + b * interior;
            let mut prev = l;
            for idx in 0..interior {
                let cur = base + idx;
                adj[prev].push(cur);
                adj[cur].push(prev);
                prev = cur;
            }
            adj[prev].push(r);
            adj[r].push(prev);
        }
        adj
    }

    fn dense_k(&self) -> DMatrix<f64> {
        let n = self.node_count;
        let mut k = DMatrix::zeros(n, n);
        let c = self.conductance;
        let interior = self.m - 2;
        let add_edge = |a: usize, b: usize, k: &mut DMatrix<f64>| {
            k[(a, a)] += c;
            k[(b, b)] += c;
            k[(a, b)] -= c;
            k[(b, a)] -= c;
        };
        for b in 0..self.branch_count {
            let (l, r) = self.branch_ends[b];
            let base = self.junction_count + b * interior;
            let mut prev = l;
            for idx in 0..interior {
                let cur = base + idx;
                add_edge(prev, cur, &mut k);
                prev = cur;
            }
            add_edge(prev, r, &mut k);
        }
        k
    }

    /// Full dense eigendecomposition (every eigenpair, certified trivially).
    /// Intended for small node counts; larger problems should go through
    /// [`CableDiscretization::eigen_lowest`].
    pub fn eigen_dense(&self) -> Result<Spectrum, VerifyError> {
        let n = self.node_count;
        let mut a = self.dense_k();
        let inv_sqrt: Vec<f64> = self.mass.iter().map(|&m| 1.0 / m.sqrt()).collect();
        for i in 0..n {
            for j in 0..n {
                a[(i, j)] *= inv_sqrt[i] * inv_sqrt[j];
            }
        }
        let (lambdas, vecs) = jacobi_eigen(a)?;
        let vectors = (0..n)
            .map(|k| {
                let col = vecs.column(k);
                (0..n).map(|v| col[v] * inv_sqrt[v]).collect()
            })
            .collect();
        Ok(Spectrum {
            lambdas,
            vectors,
            certified_below: f64::INFINITY,
        })
    }

    /// Count of eigenvalues strictly below `lambda` via the inertia of
    /// `K - lambda M` (exact by Sylvester's law, up to the factorization's
    /// floating-point conditioning).
    pub fn eigen_count_below(&self, lambda: f64) -> Result<usize, VerifyError> {
        let f = self.factor(lambda)?;
        Ok(f.negative_pivots)
    }

    fn factor(&self, shift: f64) -> Result<CableFactorization, VerifyError> {
        let c = self.conductance;
        let interior = self.m - 2;
        let nj = self.junction_count;
        let diag_int = 2.0 * c - shift * (self.h / self.n_total as f64);
        let mut negative = 0usize;
        let mut branch_d = Vec::with_capacity(self.branch_count);
        let mut branch_l = Vec::with_capacity(self.branch_count);
        let mut branch_ul = Vec::with_capacity(self.branch_count);
        let mut branch_ur = Vec::with_capacity(self.branch_count);
        let mut schur = DMatrix::zeros(nj, nj);
        for j in 0..nj {
            schur[(j, j)] -= shift * self.mass[j];
        }
        for b in 0..self.branch_count {
            let (l, r) = self.branch_ends[b];
            schur[(l, l)] += c;
            schur[(r, r)] += c;
            // LDL^T of the interior tridiagonal block (diag `diag_int`,
            // off-diagonal `-c`).
            let mut d = vec![0.0; interior];
            let mut sub = vec![0.0; interior];
            for i in 0..interior {
                let mut di = diag_int;
                if i > 0 {
                    sub[i] = -c / d[i - 1];
                    di -= c * c / d[i - 1];
                }
                if di.abs() < 1e-300 {
                    return Err(VerifyError::Eigensolver {
                        reason: format!("singular pivot at shift {shift}"),
                    });
                }
                if di < 0.0 {
                    negative += 1;
                }
                d[i] = di;
            }
            // Columns of T^{-1} * (c e_first) and T^{-1} * (c e_last).
            let ul = tridiag_solve(&d, &sub, &unit_rhs(interior, 0, c));
            let ur = tridiag_solve(&d, &sub, &unit_rhs(interior, interior - 1, c));
            schur[(l, l)] -= c * ul[0];
            schur[(r, r)] -= c * ur[interior - 1];
            let cross = c * ur[0];
            schur[(l, r)] -= cross;
            if l != r {
                schur[(r, l)] -= cross;
            }
            branch_d.push(d);
            branch_l.push(sub);
            branch_ul.push(ul);
            branch_ur.push(ur);
        }
        let (schur_vals, schur_vecs) = jacobi_eigen(schur)?;
        let scale = schur_vals.iter().fold(0.0f64, |a, v| a.max(v.abs()));
        for &v in &schur_vals {
            if v.abs() < 1e-13 * scale.max(1e-300) {
                return Err(VerifyError::Eigensolver {
                    reason: format!("near-singular junction block at shift {shift}"),
                });
            }
            if v < 0.0 {
                negative += 1;
            }
        }
        Ok(CableFactorization {
            branch_d,
            branch_l,
            branch_ul,
            branch_ur,
            schur_vals,
            schur_vecs,
            negative_pivots: negative,
        })
    }

    fn solve_with(&self, f: &CableFactorization, b: &[f64], out: &mut [f64]) {
        let c = self.conductance;
        let interior = self.m - 2;
        let nj = self.junction_count;
        let mut reduced = DVector::from_column_slice(&b[..nj]);
        let mut ws: Vec<Vec<f64>> = Vec::with_capacity(self.branch_count);
        for br in 0..self.branch_count {
            let (l, r) = self.branch_ends[br];
            let base = nj + br * interior;
            let w = tridiag_solve(
                &f.branch_d[br],
                &f.branch_l[br],
                &b[base..base + interior],
            );
            reduced[l] += c * w[0];
            reduced[r] += c * w[interior - 1];
            ws.push(w);
        }
        // Junction solve through the eigendecomposition of the Schur block.
        let tmp = f.schur_vecs.transpose() * &reduced;
        let mut scaled = tmp;
        for (v, e) in scaled.iter_mut().zip(f.schur_vals.iter()) {
            *v /= e;
        }
        let xj = &f.schur_vecs * scaled;
        out[..nj].copy_from_slice(xj.as_slice());
        for (br, wsb) in ws.iter().enumerate() {
            let (l, r) = self.branch_ends[br];
            let base = nj + br * interior;
            for i in 0..interior {
                out[base + i] = wsb[i] + f.branch_ul[br][i] * xj[l] + f.branch_ur[br][i] * xj[r];
            }
        }
    }

    /// All eigenpairs with eigenvalue below `lambda_max`, certified complete
    /// by an inertia count. Vectors are orthonormal in the mass inner
    /// product.
    pub fn eigen_lowest(&self, lambda_max: f64, seed: u64) -> Result<Spectrum, VerifyError> {
        let n = self.node_count;
        if n <= DENSE_NODE_LIMIT {
            let full = self.eigen_dense()?;
            let cut = full
                .lambdas
                .iter()
                .position(|&l| l >= lambda_max)
                .unwrap_or(full.lambdas.len());
            return Ok(Spectrum {
                lambdas: full.lambdas[..cut].to_vec(),
                vectors: full.vectors[..cut].to_vec(),
                certified_below: lambda_max,
            });
        }
        // Weyl-type estimate of how many eigenvalues to expect (total edge
        // length is 2 pi N_i).
        let (_, n_total) = self.seq.cumulative_f64(self.level)?;
        let total_len = 2.0 * PI * n_total;
        let expect =
            (total_len * lambda_max.max(1.0).sqrt() / PI).ceil() as usize + self.junction_count + 8;
        let mut block = expect + expect / 4 + 8;
        let shift = -1.0;
        let factor = self.factor(shift)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _attempt in 0..4 {
            block = block.min(n);
            let mut x: Vec<Vec<f64>> = (0..block)
                .map(|_| (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect())
                .collect();
            self.m_orthonormalize(&mut x);
            let mut prev_vals: Vec<f64> = Vec::new();
            let mut converged = false;
            for _iter in 0..400 {
                // Shift-inverted power step: Y = (K + M)^{-1} M X.
                let mut y = vec![vec![0.0; n]; block];
                let mut rhs = vec![0.0; n];
                for (xi, yi) in x.iter().zip(y.iter_mut()) {
                    for v in 0..n {
                        rhs[v] = xi[v] * self.mass[v];
                    }
                    self.solve_with(&factor, &rhs, yi);
                }
                self.m_orthonormalize(&mut y);
                // Rayleigh-Ritz on the subspace.
                let (vals, vecs) = self.rayleigh_ritz(&y)?;
                x = vecs;
                let wanted = vals.iter().take_while(|&&v| v < lambda_max).count();
                let stable = !prev_vals.is_empty()
                    && prev_vals.len() == vals.len()
                    && vals
                        .iter()
                        .take(wanted.min(vals.len()))
                        .zip(&prev_vals)
                        .all(|(a, b)| (a - b).abs() <= 1e-11 * (1.0 + a.abs()));
                prev_vals = vals.clone();
                if stable && wanted < vals.len() {
                    // Check residuals of the wanted pairs.
                    let ok = (0..wanted).all(|k| {
                        let mut kx = vec![0.0; n];
                        self.matvec_k(&x[k], &mut kx);
                        let mut num = 0.0;
                        for v in 0..n {
                            let r = kx[v] - vals[k] * self.mass[v] * x[k][v];
                            num += r * r / self.mass[v];
                        }
                        num.sqrt() <= 1e-8 * (1.0 + vals[k])
                    });
                    if ok {
                        // Certify completeness via inertia.
                        let below = self.eigen_count_below(lambda_max)?;
                        if below == wanted {
                            let lambdas = vals[..wanted].to_vec();
                            let vectors = x[..wanted].to_vec();
                            return Ok(Spectrum {
                                lambdas,
                                vectors,
                                certified_below: lambda_max,
                            });
                        }
                        // Too few Ritz values below the threshold: enlarge.
                        converged = true;
                        break;
                    }
                }
            }
            block = block * 2 + 8;
            if !converged && block > 4 * n {
                break;
            }
        }
        Err(VerifyError::Eigensolver {
            reason: format!(
                "subspace iteration did not resolve all eigenvalues below {lambda_max}"
            ),
        })
    }

    fn m_inner(&self, a: &[f64], b: &[f64]) -> f64 {
        a.iter()
            .zip(b)
            .zip(&self.mass)
            .map(|((x, y), m)| x * y * m)
            .sum()
    }

    fn m_orthonormalize(&self, x: &mut Vec<Vec<f64>>) {
        let mut kept: Vec<Vec<f64>> = Vec::with_capacity(x.len());
        for mut v in x.drain(..) {
            for _ in 0..2 {
                for u in &kept {
                    let proj = self.m_inner(&v, u);
                    v.iter_mut().zip(u).for_each(|(a, b)| *a -= proj * b);
                }
            }
            let norm = self.m_inner(&v, &v).sqrt();
            if norm > 1e-12 {
                v.iter_mut().for_each(|a| *a /= norm);
                kept.push(v);
            }
        }
        *x = kept;
    }

    fn rayleigh_ritz(&self, y: &[Vec<f64>]) -> Result<(Vec<f64>, Vec<Vec<f64>>), VerifyError> {
        let p = y.len();
        let n = self.node_count;
        let mut gk = DMatrix::zeros(p, p);
        let mut ky = vec![vec![0.0; n]; p];
        for (i, yi) in y.iter().enumerate() {
            self.matvec_k(yi, &mut ky[i]);
        }
        for i in 0..p {
            for j in i..p {
                let v: f64 = y[i].iter().zip(&ky[j]).map(|(a, b)| a * b).sum();
                gk[(i, j)] = v;
                gk[(j, i)] = v;
            }
        }
        // y is M-orthonormal, so the mass Gram matrix is the identity.
        let (rvals, rvecs) = jacobi_eigen(gk)?;
        let mut vals = Vec::with_capacity(p);
        let mut vecs = Vec::with_capacity(p);
        for k in 0..p {
            vals.push(rvals[k]);
            let mut v = vec![0.0; n];
            for (i, yi) in y.iter().enumerate() {
                let w = rvecs[(i, k)];
                v.iter_mut().zip(yi).for_each(|(a, b)| *a += w * b);
            }
            vecs.push(v);
        }
        Ok((vals, vecs))
    }
}

/// Eigenpairs of a cable discretization, mass-orthonormal, sorted ascending.
pub struct Spectrum {
    pub lambdas: Vec<f64>,
    pub vectors: Vec<Vec<f64>>,
    /// Every eigenvalue below this threshold is present in `lambdas`.
    pub certified_below: f64,
}

impl Spectrum {
    /// Heat kernel density between two nodes plus a rigorous bound on the
    /// truncated spectral tail.
    pub fn kernel_at(
        &self,
        disc: &CableDiscretization,
        t: f64,
        x: usize,
        y: usize,
    ) -> (f64, f64) {
        let mut v = 0.0;
        for (l, psi) in self.lambdas.iter().zip(&self.vectors) {
            v += (-l * t).exp() * psi[x] * psi[y];
        }
        let tail = if self.certified_below.is_finite() {
            (-self.certified_below * t).exp() / (disc.mass[x] * disc.mass[y]).sqrt()
        } else {
            0.0
        };
        (v, tail)
    }
}

struct CableFactorization {
    branch_d: Vec<Vec<f64>>,
    branch_l: Vec<Vec<f64>>,
    branch_ul: Vec<Vec<f64>>,
    branch_ur: Vec<Vec<f64>>,
    schur_vals: Vec<f64>,
    schur_vecs: DMatrix<f64>,
    negative_pivots: usize,
}

fn unit_rhs(n: usize, pos: usize, scale: f64) -> Vec<f64> {
    let mut v = vec![0.0; n];
    v[pos] = scale;
    v
}

/// Solve `T x = b` given the `L D L^T` factors of a symmetric tridiagonal
/// block (`d` diagonal of D, `sub[i]` the multiplier tying row i to i-1).
fn tridiag_solve(d: &[f64], sub: &[f64], b: &[f64]) -> Vec<f64> {
    let n = d.len();
    let mut x = b.to_vec();
    for i in 1..n {
        let carry = sub[i] * x[i - 1];
        x[i] -= carry;
    }
    for i in 0..n {
        x[i] /= d[i];
    }
    for i in (0..n - 1).rev() {
        let carry = sub[i + 1] * x[i + 1];
        x[i] -= carry;
    }
    x
}

pub(crate) fn decode_labels(
    seq: &ParameterSequences,
    level: usize,
    rank: usize,
) -> Result<Vec<u32>, ParamError> {
    let mut labels = Vec::with_capacity(level);
    let mut r = rank as u64;
    for l in 1..=level {
        let n_l = seq.n_at(l)?;
        labels.push((r % n_l) as u32 + 1);
        r /= n_l;
    }
    Ok(labels)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::semigroup::GridFunction;

    fn seq22() -> ParameterSequences {
        ParameterSequences::regular(2, 2).unwrap()
    }

    #[test]
    fn node_layout_matches_grid_functions_and_mass_sums_to_the_measure() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 2, 9).unwrap();
        assert_eq!(disc.branch_count(), 32);
        assert_eq!(disc.junction_count(), 12);
        let f = GridFunction::constant(&seq, 2, 9, 0.0).unwrap();
        for b in 0..f.branch_count() {
            for idx in 0..f.points_per_branch() {
                let node = disc.node_of_grid(b, idx);
                let p = f.point_address(b, idx).unwrap();
                assert_eq!(disc.point_of(node), &p, "branch {b} idx {idx}");
                assert_eq!(disc.node_at(&p), Some(node));
            }
        }
        let total: f64 = disc.mass.iter().sum();
        assert!((total - 2.0 * PI).abs() < 1e-12);
    }

    #[test]
    fn stiffness_is_symmetric_conservative_and_nonnegative() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 12).unwrap();
        let n = disc.node_count();
        let ones = vec![1.0; n];
        let mut out = vec![0.0; n];
        disc.matvec_k(&ones, &mut out);
        assert!(out.iter().all(|v| v.abs() < 1e-12));
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let x: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut kx = vec![0.0; n];
        let mut ky = vec![0.0; n];
        disc.matvec_k(&x, &mut kx);
        disc.matvec_k(&y, &mut ky);
        let a: f64 = y.iter().zip(&kx).map(|(p, q)| p * q).sum();
        let b: f64 = x.iter().zip(&ky).map(|(p, q)| p * q).sum();
        assert!((a - b).abs() < 1e-9 * a.abs().max(1.0));
        let quad: f64 = x.iter().zip(&kx).map(|(p, q)| p * q).sum();
        assert!(quad >= -1e-12);
    }

    #[test]
    fn circle_spectrum_matches_squares_of_integers() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 0, 400).unwrap();
        let spectrum = disc.eigen_lowest(27.0, 5).unwrap();
        assert!(spectrum.lambdas[0].abs() < 1e-10);
        // Nonzero eigenvalues come in pairs 1,1,4,4,9,9,...
        for (i, want) in [(1, 1.0), (2, 1.0), (3, 4.0), (4, 4.0), (5, 9.0), (6, 9.0), (7, 16.0), (8, 16.0), (9, 25.0), (10, 25.0)] {
            let got = spectrum.lambdas[i];
            assert!(
                (got - want).abs() < 0.01 * want,
                "eigenvalue {i}: got {got}, want {want}"
            );
        }
    }

    #[test]
    fn sparse_and_dense_eigen_agree() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 40).unwrap();
        let dense = disc.eigen_dense().unwrap();
        // Force the sparse path by calling the internals directly on a
        // grid small enough to compare.
        let n = disc.node_count();
        assert!(n <= DENSE_NODE_LIMIT, "test setup expects the dense shortcut range");
        // Use the factorization machinery through eigen_count_below.
        for &cut in &[0.5, 3.0, 10.0, 26.0] {
            let count = disc.eigen_count_below(cut).unwrap();
            let want = dense.lambdas.iter().filter(|&&l| l < cut).count();
            assert_eq!(count, want, "inertia mismatch at {cut}");
        }
    }

    #[test]
    fn subspace_iteration_matches_dense_on_a_forced_sparse_run() {
        let seq = seq22();
        // Large enough to route around the dense shortcut.
        let disc = CableDiscretization::new(&seq, 1, 60).unwrap();
        assert!(disc.node_count() > DENSE_NODE_LIMIT);
        let sparse = disc.eigen_lowest(12.0, 42).unwrap();
        let dense = disc.eigen_dense().unwrap();
        let want = dense.lambdas.iter().filter(|&&l| l < 12.0).count();
        assert_eq!(sparse.lambdas.len(), want);
        for (a, b) in sparse.lambdas.iter().zip(dense.lambdas.iter()) {
            assert!((a - b).abs() < 1e-7 * (1.0 + b), "{a} vs {b}");
        }
        // Vectors are M-orthonormal.
        for i in 0..sparse.lambdas.len() {
            for j in i..sparse.lambdas.len() {
                let g = disc.m_inner(&sparse.vectors[i], &sparse.vectors[j]);
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-8, "gram ({i},{j}) = {g}");
            }
        }
    }

    #[test]
    fn factorization_solves_the_shifted_system() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 25).unwrap();
        let n = disc.node_count();
        let f = disc.factor(-1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let b: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let mut x = vec![0.0; n];
        disc.solve_with(&f, &b, &mut x);
        // Check (K + M) x = b.
        let mut kx = vec![0.0; n];
        disc.matvec_k(&x, &mut kx);
        for v in 0..n {
            let lhs = kx[v] + disc.mass[v] * x[v];
            assert!((lhs - b[v]).abs() < 1e-9, "node {v}: {lhs} vs {}", b[v]);
        }
    }
}

//! Independent numerical oracles used to cross-examine the analytic code
//! paths: a spectral heat-kernel evaluator built on the cable eigenproblem,
//! a continuous-time random walk sampler, and a shortest-path solver on the
//! discretized graph. None of these share formulas with the kernel or
//! estimate modules.

use super::cable::{CableDiscretization, Spectrum, VerifyError};
use crate::geometry::PointAddress;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::cmp::Reverse;
use std::collections::BinaryHeap;

/// Spectral heat-kernel value between two grid nodes, with the certified
/// truncation tail. Probe points must lie exactly on grid nodes.
pub fn kernel_spectral(
    disc: &CableDiscretization,
    spectrum: &Spectrum,
    t: f64,
    x: &PointAddress,
    y: &PointAddress,
) -> Result<(f64, f64), VerifyError> {
    let nx = disc.node_at(x).ok_or_else(|| VerifyError::Discretization {
        reason: format!("probe point at angle {} is not a grid node", x.theta()),
    })?;
    let ny = disc.node_at(y).ok_or_else(|| VerifyError::Discretization {
        reason: format!("probe point at angle {} is not a grid node", y.theta()),
    })?;
    Ok(spectrum.kernel_at(disc, t, nx, ny))
}

/// Spectral threshold sufficient for an absolute tail below `tail_tol` at
/// time `t` for any pair of nodes of this discretization.
pub fn spectral_cutoff(disc: &CableDiscretization, t: f64, tail_tol: f64) -> f64 {
    let min_mass = disc
        .mass
        .iter()
        .fold(f64::INFINITY, |a, &b| a.min(b))
        .max(1e-300);
    ((1.0 / (tail_tol * min_mass)).ln() / t).max(2.0)
}

/// Empirical node-occupation distribution of the continuous-time walk whose
/// generator is the (mass-normalized) cable operator, started at `start`,
/// observed at time `t`. Returns probabilities per node.
pub fn walk_distribution(
    disc: &CableDiscretization,
    t: f64,
    start: usize,
    samples: usize,
    seed: u64,
) -> Vec<f64> {
    let adj = disc.neighbors();
    let c = 1.0 / (disc.sequences().cumulative_f64(disc.level()).unwrap().1 * disc.step());
    // Jump rate out of node v: (sum of incident conductances) / mass_v;
    // each neighbor is equally likely because conductances are uniform.
    let rates: Vec<f64> = adj
        .iter()
        .enumerate()
        .map(|(v, nb)| nb.len() as f64 * c / disc.mass[v])
        .collect();
    let mut counts = vec![0u64; disc.node_count()];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for _ in 0..samples {
        let mut node = start;
        let mut clock = 0.0;
        loop {
            let hold = -rng.gen::<f64>().max(f64::MIN_POSITIVE).ln() / rates[node];
            clock += hold;
            if clock >= t {
                break;
            }
            let nb = &adj[node];
            node = nb[rng.gen_range(0..nb.len())];
        }
        counts[node] += 1;
    }
    counts
        .into_iter()
        .map(|cnt| cnt as f64 / samples as f64)
        .collect()
}

/// Node-occupation probabilities predicted by the spectral solution,
/// i.e. the kernel row against the lumped mass weights.
pub fn spectral_distribution(
    disc: &CableDiscretization,
    spectrum: &Spectrum,
    t: f64,
    start: usize,
) -> Vec<f64> {
    (0..disc.node_count())
        .map(|y| {
            let (v, _) = spectrum.kernel_at(disc, t, start, y);
            (v * disc.mass[y]).max(0.0)
        })
        .collect()
}

pub fn total_variation(p: &[f64], q: &[f64]) -> f64 {
    0.5 * p
        .iter()
        .zip(q)
        .map(|(a, b)| (a - b).abs())
        .sum::<f64>()
}

#[derive(PartialEq)]
struct HeapState {
    dist: f64,
    node: usize,
}

impl Eq for HeapState {}

impl Ord for HeapState {
    fn cmp(&self, other: &Self) -> std::cmp::Ordering {
        self.dist
            .total_cmp(&other.dist)
            .then(self.node.cmp(&other.node))
    }
}

impl PartialOrd for HeapState {
    fn partial_cmp(&self, other: &Self) -> Option<std::cmp::Ordering> {
        Some(self.cmp(other))
    }
}

/// Shortest path distance between two nodes along the discretized graph
/// (all edges have length `h`). Standard heap-based Dijkstra.
pub fn dijkstra_distance(disc: &CableDiscretization, a: usize, b: usize) -> f64 {
    if a == b {
        return 0.0;
    }
    let adj = disc.neighbors();
    let h = disc.step();
    let mut dist = vec![f64::INFINITY; disc.node_count()];
    dist[a] = 0.0;
    let mut heap = BinaryHeap::new();
    heap.push(Reverse(HeapState { dist: 0.0, node: a }));
    while let Some(Reverse(state)) = heap.pop() {
        if state.node == b {
            return state.dist;
        }
        if state.dist > dist[state.node] {
            continue;
        }
        for &nb in &adj[state.node] {
            let cand = state.dist + h;
            if cand < dist[nb] {
                dist[nb] = cand;
                heap.push(Reverse(HeapState {
                    dist: cand,
                    node: nb,
                }));
            }
        }
    }
    f64::INFINITY
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::distance_level;
    use crate::kernels::{diamond_kernel_level, KernelEvalConfig};
    use crate::params::ParameterSequences;
    use std::f64::consts::PI;

    fn seq22() -> ParameterSequences {
        ParameterSequences::regular(2, 2).unwrap()
    }

    #[test]
    fn spectral_oracle_reproduces_the_circle_kernel() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 0, 400).unwrap();
        let cutoff = spectral_cutoff(&disc, 1.0, 1e-13);
        let spectrum = disc.eigen_lowest(cutoff, 5).unwrap();
        let cfg = KernelEvalConfig::default();
        let x = PointAddress::new(&seq, 0.3 * PI, vec![]).unwrap();
        // Snap to the nearest node to probe exactly on the grid.
        let node = (0..disc.node_count())
            .min_by(|&a, &b| {
                let da = (disc.point_of(a).theta() - x.theta()).abs();
                let db = (disc.point_of(b).theta() - x.theta()).abs();
                da.total_cmp(&db)
            })
            .unwrap();
        let p = disc.point_of(node).clone();
        let (got, tail) = kernel_spectral(&disc, &spectrum, 1.0, &p, &p).unwrap();
        let want = diamond_kernel_level(&seq, 0, 1.0, &p, &p, &cfg).unwrap().value;
        assert!(tail < 1e-12);
        assert!((got - want).abs() < 1e-3, "{got} vs {want}");
    }

    #[test]
    fn spectral_oracle_matches_the_level_one_kernel_on_grid_nodes() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 200).unwrap();
        let spectrum = disc.eigen_lowest(40.0, 11).unwrap();
        let cfg = KernelEvalConfig::default();
        let mut worst = 0.0f64;
        for (b, idx) in [(0usize, 37usize), (1, 120), (5, 70), (3, 0), (6, 199)] {
            let node = disc.node_of_grid(b, idx);
            let p = disc.point_of(node).clone();
            for (b2, idx2) in [(2usize, 50usize), (4, 150)] {
                let node2 = disc.node_of_grid(b2, idx2);
                let q = disc.point_of(node2).clone();
                let (got, tail) = kernel_spectral(&disc, &spectrum, 1.0, &p, &q).unwrap();
                let want = diamond_kernel_level(&seq, 1, 1.0, &p, &q, &cfg)
                    .unwrap()
                    .value;
                assert!(tail < 1e-9, "tail {tail}");
                worst = worst.max((got - want).abs());
            }
        }
        assert!(worst < 2e-3, "worst deviation {worst}");
    }

    #[test]
    fn walk_approaches_the_spectral_distribution() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 12).unwrap();
        let spectrum = disc.eigen_dense().unwrap();
        let start = disc.node_of_grid(0, 6);
        let reference = spectral_distribution(&disc, &spectrum, 1.0, start);
        let emp_small = walk_distribution(&disc, 1.0, start, 1_000, 99);
        let emp_big = walk_distribution(&disc, 1.0, start, 40_000, 99);
        let tv_small = total_variation(&emp_small, &reference);
        let tv_big = total_variation(&emp_big, &reference);
        assert!(tv_big < 0.05, "tv at 4e4 samples: {tv_big}");
        assert!(tv_big < tv_small, "{tv_big} !< {tv_small}");
    }

    #[test]
    fn walk_is_symmetric_under_copy_relabeling() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 1, 10).unwrap();
        // Start at a junction shared by all copies; mirrored interior nodes
        // (same interval and offset, different label) must receive equal
        // mass in distribution.
        let start = disc.node_of_grid(0, 0);
        let emp = walk_distribution(&disc, 0.7, start, 60_000, 5);
        let mut asym = 0.0f64;
        let mut mirrored = Vec::new();
        for idx in 1..9 {
            let a = disc.node_of_grid(0, idx); // interval 0, label 1
            let b = disc.node_of_grid(1, idx); // interval 0, label 2
            mirrored.push((emp[a], emp[b]));
            asym += (emp[a] - emp[b]).abs();
        }
        let total: f64 = mirrored.iter().map(|(a, b)| a + b).sum();
        assert!(asym < 0.05 * total.max(0.05), "asymmetry {asym} of {total}");
    }

    #[test]
    fn dijkstra_agrees_with_the_exact_metric_between_grid_nodes() {
        let seq = seq22();
        let disc = CableDiscretization::new(&seq, 2, 17).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(21);
        for _ in 0..25 {
            let a = rng.gen_range(0..disc.node_count());
            let b = rng.gen_range(0..disc.node_count());
            let got = dijkstra_distance(&disc, a, b);
            let want =
                distance_level(&seq, disc.point_of(a), disc.point_of(b), 2).unwrap();
            assert!(
                (got - want).abs() < 1e-9,
                "nodes {a},{b}: dijkstra {got}, metric {want}"
            );
        }
    }
}

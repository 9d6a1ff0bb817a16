//! Cross-examination suite: every analytic code path (kernels, semigroup
//! quadrature, bound constants) is tested against an independent witness —
//! a spectral solver on the discretized graph, a random-walk sampler, a
//! shortest-path solver, or a brute-force series — and every structural
//! identity (symmetry, mass conservation, semigroup law, intertwining,
//! energy invariance) is measured at pinned tolerances.
//!
//! Each check produces a [`CheckResult`]; a check that exercises a known
//! limitation rather than a correctness requirement reports
//! [`CheckStatus::Info`] and never fails a run.

pub mod cable;
pub mod oracles;

pub use cable::{CableDiscretization, Spectrum, VerifyError};
pub use oracles::{
    dijkstra_distance, kernel_spectral, spectral_cutoff, spectral_distribution, total_variation,
    walk_distribution,
};

use crate::estimates::{self, ASSUMPTION_PROBE_DEPTH};
use crate::geometry::{distance_level, PointAddress};
use crate::kernels::{
    self, diamond_kernel_level, diamond_kernel_recursive, gauss_sum, gauss_sum_upper,
    interval_kernel_dirichlet, KernelEvalConfig,
};
use crate::params::{check_assumption, AssumptionVerdict, ParameterSequences};
use crate::semigroup::{
    self, apply_semigroup, dirichlet_branch_evolution, dirichlet_energy, integrate_fibers, lift,
    project_antisym, project_sym, GridFunction, QuadratureRule,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CheckStatus {
    Pass,
    Fail,
    /// Informational finding: reported, but never fails a run.
    Info,
}

impl std::fmt::Display for CheckStatus {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CheckStatus::Pass => write!(f, "PASS"),
            CheckStatus::Fail => write!(f, "FAIL"),
            CheckStatus::Info => write!(f, "INFO"),
        }
    }
}

/// Outcome of one verification check.
#[derive(Debug, Clone, Serialize)]
pub struct CheckResult {
    pub name: String,
    pub status: CheckStatus,
    /// The quantity the check measured (deviation, ratio, eigenvalue, ...).
    pub measured: f64,
    /// The threshold it was held against.
    pub bound: f64,
    /// Slack added on top of the threshold.
    pub tolerance: f64,
    pub notes: String,
    pub seed: u64,
}

impl CheckResult {
    pub fn passed(&self) -> bool {
        self.status != CheckStatus::Fail
    }

    /// Gate of the form `measured <= bound + tolerance`.
    fn le(name: &str, measured: f64, bound: f64, tolerance: f64, notes: String, seed: u64) -> Self {
        let status = if measured <= bound + tolerance && measured.is_finite() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            name: name.into(),
            status,
            measured,
            bound,
            tolerance,
            notes,
            seed,
        }
    }

    /// Gate of the form `measured >= bound - tolerance`.
    fn ge(name: &str, measured: f64, bound: f64, tolerance: f64, notes: String, seed: u64) -> Self {
        let status = if measured >= bound - tolerance && measured.is_finite() {
            CheckStatus::Pass
        } else {
            CheckStatus::Fail
        };
        Self {
            name: name.into(),
            status,
            measured,
            bound,
            tolerance,
            notes,
            seed,
        }
    }

    fn info(name: &str, measured: f64, bound: f64, notes: String, seed: u64) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Info,
            measured,
            bound,
            tolerance: 0.0,
            notes,
            seed,
        }
    }

    fn failure(name: &str, err: String, seed: u64) -> Self {
        Self {
            name: name.into(),
            status: CheckStatus::Fail,
            measured: f64::NAN,
            bound: 0.0,
            tolerance: 0.0,
            notes: format!("check aborted: {err}"),
            seed,
        }
    }
}

/// Sizes and seed of a verification run. Defaults match the gates used in
/// the acceptance tests at moderate runtime.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SuiteConfig {
    /// Samples per branch for quadrature-based checks.
    pub grid_points: usize,
    /// Samples per branch for the spectral/graph discretizations.
    pub oracle_points: usize,
    /// Number of random probe pairs (or triples) per check.
    pub pairs: usize,
    /// Random-walk sample count.
    pub walk_samples: usize,
    /// Seed for every randomized choice in the suite.
    pub seed: u64,
}

impl Default for SuiteConfig {
    fn default() -> Self {
        Self {
            grid_points: 101,
            oracle_points: 200,
            pairs: 24,
            walk_samples: 30_000,
            seed: 7,
        }
    }
}

/// True when no non-informational check failed.
pub fn suite_passed(results: &[CheckResult]) -> bool {
    results.iter().all(CheckResult::passed)
}

fn random_point(
    rng: &mut ChaCha8Rng,
    seq: &ParameterSequences,
    level: usize,
) -> Result<PointAddress, String> {
    let theta = rng.gen_range(0.0..2.0 * PI);
    let mut labels = Vec::with_capacity(level);
    for l in 1..=level {
        let n_l = seq.n_at(l).map_err(|e| e.to_string())?;
        labels.push(rng.gen_range(1..=n_l) as u32);
    }
    PointAddress::new(seq, theta, labels).map_err(|e| e.to_string())
}

fn default_t_grid(t_grid: &[f64]) -> Vec<f64> {
    let cleaned: Vec<f64> = t_grid
        .iter()
        .copied()
        .filter(|t| t.is_finite() && *t > 0.0)
        .collect();
    if cleaned.is_empty() {
        vec![0.1, 0.5, 1.0]
    } else {
        cleaned
    }
}

fn run_check(
    name: &str,
    seed: u64,
    body: impl FnOnce() -> Result<Vec<CheckResult>, String>,
) -> Vec<CheckResult> {
    match body() {
        Ok(results) => results,
        Err(e) => vec![CheckResult::failure(name, e, seed)],
    }
}

/// Run the full verification suite for the given parameter sequences,
/// exercising levels `0..=levels` where a check is level-dependent.
pub fn run_suite(
    seq: &ParameterSequences,
    levels: usize,
    t_grid: &[f64],
    cfg: &SuiteConfig,
) -> Vec<CheckResult> {
    let ts = default_t_grid(t_grid);
    let lk = levels
        .min(2)
        .min(seq.max_defined_level().unwrap_or(usize::MAX));
    let mut out = Vec::new();

    out.extend(run_check("circle_representations", cfg.seed, || {
        check_circle_representations(&ts, cfg)
    }));
    out.extend(run_check("interval_representations", cfg.seed, || {
        check_interval_representations(&ts, cfg)
    }));
    out.extend(run_check("closed_vs_recursive", cfg.seed, || {
        check_closed_vs_recursive(seq, lk, &ts, cfg)
    }));
    out.extend(run_check("spectral_oracle", cfg.seed, || {
        check_spectral_oracle(seq, lk, cfg)
    }));
    out.extend(run_check("spectral_convergence_order", cfg.seed, || {
        check_spectral_convergence_order(seq, lk, cfg)
    }));
    out.extend(run_check("kernel_symmetry", cfg.seed, || {
        check_kernel_symmetry_positivity(seq, lk, &ts, cfg)
    }));
    out.extend(run_check("stochastic_completeness", cfg.seed, || {
        check_stochastic_completeness(seq, lk, &ts)
    }));
    out.extend(run_check("chapman_kolmogorov", cfg.seed, || {
        check_chapman_kolmogorov(seq, lk, cfg)
    }));
    out.extend(run_check("semigroup_self_adjoint", cfg.seed, || {
        check_self_adjoint_markov(seq, lk, cfg)
    }));
    out.extend(run_check("lipschitz_ratio", cfg.seed, || {
        check_lipschitz_ratio(seq, lk, &ts, cfg)
    }));
    out.extend(run_check("tv_vs_distance", cfg.seed, || {
        check_tv_vs_distance(seq, lk, &ts, cfg)
    }));
    out.extend(run_check("intertwining", cfg.seed, || {
        check_intertwining(seq, lk, cfg)
    }));
    out.extend(run_check("decomposition", cfg.seed, || {
        check_decomposition(seq, cfg)
    }));
    out.extend(run_check("energy_lift", cfg.seed, || {
        check_energy_lift(seq, lk, cfg)
    }));
    out.extend(run_check("spectral_gap", cfg.seed, || {
        check_spectral_gap(seq, lk, cfg)
    }));
    out.extend(run_check("local_poincare", cfg.seed, || {
        check_local_poincare(seq, lk, cfg)
    }));
    out.extend(run_check("logsob_entropy", cfg.seed, || {
        check_logsob_entropy(seq, cfg)
    }));
    out.extend(run_check("series_bound", cfg.seed, || {
        check_series_bounds(cfg)
    }));
    out.extend(run_check("assumption_sweep", cfg.seed, || {
        check_assumption_sweep(seq, &ts, cfg)
    }));
    out.extend(run_check("metric_vs_graph", cfg.seed, || {
        check_metric_vs_graph(seq, lk, cfg)
    }));
    out.extend(run_check("walk_oracle", cfg.seed, || {
        check_walk(seq, cfg)
    }));
    out
}

// ---------------------------------------------------------------------------
// Individual checks
// ---------------------------------------------------------------------------

fn check_circle_representations(
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x01);
    let mut worst = 0.0f64;
    for _ in 0..cfg.pairs.max(8) {
        let x = rng.gen_range(0.0..2.0 * PI);
        let y = rng.gen_range(0.0..2.0 * PI);
        for &t in ts {
            let t = t.clamp(0.05, 10.0);
            let a = kernels::circle_kernel_gaussian(t, x, y, &kc).map_err(|e| e.to_string())?;
            let b = kernels::circle_kernel_fourier(t, x, y, &kc).map_err(|e| e.to_string())?;
            worst = worst.max((a.value - b.value).abs());
        }
    }
    Ok(vec![CheckResult::le(
        "circle_representations",
        worst,
        1e-10,
        0.0,
        "sup |image-sum - mode-sum| over random angle pairs and times".into(),
        cfg.seed,
    )])
}

fn check_interval_representations(
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    // Force the two representations by biasing the switch point.
    let mut reflect = KernelEvalConfig::with_tol(1e-13);
    reflect.rep_switch = f64::INFINITY;
    let mut sine = KernelEvalConfig::with_tol(1e-13);
    sine.rep_switch = 0.0;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x02);
    let len = PI / 2.0;
    let mut worst = 0.0f64;
    for _ in 0..cfg.pairs.max(8) {
        let a = rng.gen_range(0.0..len);
        let b = rng.gen_range(0.0..len);
        for &t in ts {
            let t = t.clamp(0.01, 10.0);
            let u = interval_kernel_dirichlet(t, len, a, b, &reflect).map_err(|e| e.to_string())?;
            let v = interval_kernel_dirichlet(t, len, a, b, &sine).map_err(|e| e.to_string())?;
            worst = worst.max((u.value - v.value).abs());
        }
    }
    Ok(vec![CheckResult::le(
        "interval_representations",
        worst,
        1e-9,
        0.0,
        "sup |reflection form - mode form| of the absorbing interval kernel".into(),
        cfg.seed,
    )])
}

fn check_closed_vs_recursive(
    seq: &ParameterSequences,
    lk: usize,
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x03);
    let mut worst = 0.0f64;
    for level in 1..=lk.max(1) {
        for _ in 0..cfg.pairs {
            let x = random_point(&mut rng, seq, level)?;
            let y = random_point(&mut rng, seq, level)?;
            for &t in ts {
                let t = t.clamp(0.05, 10.0);
                let a = diamond_kernel_level(seq, level, t, &x, &y, &kc)
                    .map_err(|e| e.to_string())?;
                let b = diamond_kernel_recursive(seq, level, t, &x, &y, &kc)
                    .map_err(|e| e.to_string())?;
                worst = worst.max((a.value - b.value).abs());
            }
        }
    }
    Ok(vec![CheckResult::le(
        "closed_vs_recursive",
        worst,
        1e-9,
        0.0,
        format!("levels 1..={}, {} pairs per level", lk.max(1), cfg.pairs),
        cfg.seed,
    )])
}

fn spectral_probe_error(
    seq: &ParameterSequences,
    level: usize,
    m: usize,
    t: f64,
    pairs: usize,
    seed: u64,
) -> Result<f64, String> {
    let disc = CableDiscretization::new(seq, level, m).map_err(|e| e.to_string())?;
    let cutoff = spectral_cutoff(&disc, t, 1e-7);
    let spectrum = disc
        .eigen_lowest(cutoff, seed)
        .map_err(|e| e.to_string())?;
    let kc = KernelEvalConfig::with_tol(1e-12);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x04);
    let mut worst = 0.0f64;
    for _ in 0..pairs {
        let a = rng.gen_range(0..disc.node_count());
        let b = rng.gen_range(0..disc.node_count());
        let (got, tail) = spectrum.kernel_at(&disc, t, a, b);
        let want = diamond_kernel_level(seq, level, t, disc.point_of(a), disc.point_of(b), &kc)
            .map_err(|e| e.to_string())?;
        worst = worst.max((got - want.value).abs() - tail);
    }
    Ok(worst)
}

fn check_spectral_oracle(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let t = 1.0;
    let m = cfg.oracle_points.max(50);
    let mut out = Vec::new();
    for level in 0..=lk {
        let worst = spectral_probe_error(seq, level, m, t, cfg.pairs.max(12), cfg.seed ^ 0x05)?;
        // Gate pinned at 3e-3 for 400 points per branch, scaled by the
        // second-order accuracy of the discretization.
        let scale = (399.0 / (m - 1) as f64).powi(2);
        out.push(CheckResult::le(
            &format!("spectral_oracle_level_{level}"),
            worst,
            3e-3 * scale,
            0.0,
            format!("sup |analytic - spectral| at t={t}, {m} points per branch"),
            cfg.seed,
        ));
    }
    Ok(out)
}

fn check_spectral_convergence_order(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let t = 1.0;
    let mut out = Vec::new();
    for level in 0..=lk.min(1) {
        let coarse = spectral_probe_error(seq, level, 100, t, 16, cfg.seed ^ 0x06)?;
        let fine = spectral_probe_error(seq, level, 200, t, 16, cfg.seed ^ 0x06)?;
        let order = (coarse / fine).ln() / (199.0f64 / 99.0).ln();
        out.push(CheckResult::ge(
            &format!("spectral_convergence_order_level_{level}"),
            order,
            1.7,
            0.0,
            format!("error {coarse:.3e} at 100 pts, {fine:.3e} at 200 pts"),
            cfg.seed,
        ));
    }
    Ok(out)
}

fn check_kernel_symmetry_positivity(
    seq: &ParameterSequences,
    lk: usize,
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x07);
    let mut asym = 0.0f64;
    let mut min_val = f64::INFINITY;
    for _ in 0..cfg.pairs.max(16) {
        let x = random_point(&mut rng, seq, lk)?;
        let y = random_point(&mut rng, seq, lk)?;
        for &t in ts {
            let t = t.clamp(0.02, 10.0);
            let a = diamond_kernel_level(seq, lk, t, &x, &y, &kc).map_err(|e| e.to_string())?;
            let b = diamond_kernel_level(seq, lk, t, &y, &x, &kc).map_err(|e| e.to_string())?;
            asym = asym.max((a.value - b.value).abs());
            min_val = min_val.min(a.value);
        }
    }
    Ok(vec![
        CheckResult::le(
            "kernel_symmetry",
            asym,
            1e-12,
            0.0,
            "sup |p(x,y) - p(y,x)| over random pairs".into(),
            cfg.seed,
        ),
        CheckResult::ge(
            "kernel_positivity",
            min_val,
            0.0,
            1e-10,
            "min sampled kernel value".into(),
            cfg.seed,
        ),
    ])
}

fn check_stochastic_completeness(
    seq: &ParameterSequences,
    lk: usize,
    ts: &[f64],
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-12);
    let m = 201;
    let mut rng = ChaCha8Rng::seed_from_u64(0x08);
    let x = random_point(&mut rng, seq, lk)?;
    let mut worst = 0.0f64;
    for &t in ts.iter().take(2) {
        let t = t.clamp(0.05, 10.0);
        let row = kernel_row(seq, lk, m, t, &x, &kc)?;
        let integral = row
            .integral_with(QuadratureRule::Simpson)
            .map_err(|e| e.to_string())?;
        worst = worst.max((integral - 1.0).abs());
    }
    Ok(vec![CheckResult::le(
        "stochastic_completeness",
        worst,
        1e-5,
        0.0,
        format!("|integral of p_t(x,.) - 1| with {m}-point Simpson rows"),
        0,
    )])
}

fn kernel_row(
    seq: &ParameterSequences,
    level: usize,
    m: usize,
    t: f64,
    x: &PointAddress,
    kc: &KernelEvalConfig,
) -> Result<GridFunction, String> {
    let template = GridFunction::constant(seq, level, m, 0.0).map_err(|e| e.to_string())?;
    let mut rows = Vec::with_capacity(template.branch_count());
    for b in 0..template.branch_count() {
        let mut row = Vec::with_capacity(m);
        for idx in 0..m {
            let y = template.point_address(b, idx).map_err(|e| e.to_string())?;
            let p = diamond_kernel_level(seq, level, t, x, &y, kc).map_err(|e| e.to_string())?;
            row.push(p.value);
        }
        rows.push(row);
    }
    GridFunction::from_branch_values(seq, level, m, rows).map_err(|e| e.to_string())
}

fn smooth_test_function(
    seq: &ParameterSequences,
    level: usize,
    m: usize,
    coeffs: (f64, f64, f64, f64),
) -> Result<GridFunction, String> {
    let (a, b, c, d) = coeffs;
    let j1 = if level >= 1 {
        seq.j_at(1).map_err(|e| e.to_string())? as f64
    } else {
        1.0
    };
    GridFunction::sample(seq, level, m, |p| {
        let th = p.theta();
        let sgn = if level >= 1 && p.label_at(1) % 2 == 0 {
            -1.0
        } else {
            1.0
        };
        a + b * th.cos() + c * th.sin() + d * sgn * (j1 * th).sin()
    })
    .map_err(|e| e.to_string())
}

fn check_chapman_kolmogorov(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let level = lk.min(1);
    let m = cfg.grid_points.max(41);
    let kc = KernelEvalConfig::with_tol(1e-12);
    let f = smooth_test_function(seq, level, m, (0.4, 1.0, 0.0, 0.3))?;
    let (t, s) = (0.5, 0.5);
    let two_step = apply_semigroup(
        &apply_semigroup(&f, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?,
        s,
        QuadratureRule::Trapezoid,
        &kc,
    )
    .map_err(|e| e.to_string())?;
    let one_step =
        apply_semigroup(&f, t + s, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let diff = two_step
        .zip_with(&one_step, |a, b| a - b)
        .map_err(|e| e.to_string())?;
    let scale = (199.0 / (m - 1) as f64).powi(2);
    Ok(vec![CheckResult::le(
        "chapman_kolmogorov",
        diff.sup_norm(),
        1e-4 * scale.max(1.0),
        0.0,
        format!("sup |P_t P_s f - P_(t+s) f| at t=s={t}, {m} points per branch"),
        cfg.seed,
    )])
}

fn check_self_adjoint_markov(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let level = lk.min(1);
    let m = cfg.grid_points.clamp(41, 121);
    let kc = KernelEvalConfig::with_tol(1e-12);
    let t = 0.5;
    let f = smooth_test_function(seq, level, m, (0.2, 0.8, 0.1, 0.4))?;
    let g = smooth_test_function(seq, level, m, (0.5, -0.3, 0.7, -0.2))?;
    let ptf = apply_semigroup(&f, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let ptg = apply_semigroup(&g, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let lhs = ptf.inner(&g).map_err(|e| e.to_string())?;
    let rhs = f.inner(&ptg).map_err(|e| e.to_string())?;
    let sa = (lhs - rhs).abs() / lhs.abs().max(1.0);

    let ones = GridFunction::constant(seq, level, m, 1.0).map_err(|e| e.to_string())?;
    let evolved =
        apply_semigroup(&ones, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let markov = evolved
        .flat_values()
        .iter()
        .fold(0.0f64, |a, &v| a.max((v - 1.0).abs()));
    let scale = ((199.0 / (m - 1) as f64).powi(2)).max(1.0);
    Ok(vec![
        CheckResult::le(
            "semigroup_self_adjoint",
            sa,
            1e-6 * scale,
            0.0,
            "relative |<P_t f, g> - <f, P_t g>|".into(),
            cfg.seed,
        ),
        CheckResult::le(
            "markov_conservation",
            markov,
            1e-4 * scale,
            0.0,
            "sup |P_t 1 - 1| (quadrature-level mass conservation)".into(),
            cfg.seed,
        ),
    ])
}

fn check_lipschitz_ratio(
    seq: &ParameterSequences,
    lk: usize,
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-13);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x09);
    let mut worst_ratio = 0.0f64;
    for &t in ts {
        let t = t.clamp(0.05, 10.0);
        let bound = estimates::lipschitz_bound(seq, t, 1e-9)
            .map_err(|e| e.to_string())?
            .value;
        for _ in 0..cfg.pairs {
            let x = random_point(&mut rng, seq, lk)?;
            let y = random_point(&mut rng, seq, lk)?;
            // Perturb y along its own branch to get a nearby third point.
            let eps = rng.gen_range(1e-4..0.05);
            let yp = PointAddress::new(seq, y.theta() + eps, y.labels().to_vec())
                .map_err(|e| e.to_string())?;
            let d = distance_level(seq, &y, &yp, lk).map_err(|e| e.to_string())?;
            if d < 1e-12 {
                continue;
            }
            let a = diamond_kernel_level(seq, lk, t, &x, &y, &kc).map_err(|e| e.to_string())?;
            let b = diamond_kernel_level(seq, lk, t, &x, &yp, &kc).map_err(|e| e.to_string())?;
            worst_ratio = worst_ratio.max((a.value - b.value).abs() / d / bound);
        }
    }
    Ok(vec![CheckResult::le(
        "lipschitz_ratio",
        worst_ratio,
        1.0,
        1e-9,
        "max |p(x,y)-p(x,y')| / (d(y,y') C_L(t)) over random triples".into(),
        cfg.seed,
    )])
}

fn check_tv_vs_distance(
    seq: &ParameterSequences,
    lk: usize,
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-11);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0a);
    let m = 61;
    let mut worst = 0.0f64;
    let pairs = cfg.pairs.clamp(4, 12);
    for &t in ts.iter().take(3) {
        let t = t.clamp(0.05, 2.0);
        let c = estimates::wbe_constant(seq, t, 1e-9)
            .map_err(|e| e.to_string())?
            .value;
        for _ in 0..pairs {
            let x = random_point(&mut rng, seq, lk)?;
            let y = random_point(&mut rng, seq, lk)?;
            let d = distance_level(seq, &x, &y, lk).map_err(|e| e.to_string())?;
            if d < 1e-9 {
                continue;
            }
            let row_x = kernel_row(seq, lk, m, t, &x, &kc)?;
            let row_y = kernel_row(seq, lk, m, t, &y, &kc)?;
            let diff = row_x
                .zip_with(&row_y, |a, b| (a - b).abs())
                .map_err(|e| e.to_string())?;
            let tv = diff.integral();
            worst = worst.max(tv * t.sqrt() / (c * d));
        }
    }
    Ok(vec![CheckResult::le(
        "tv_vs_distance",
        worst,
        1.0,
        1e-9,
        "max over pairs of TV(p_t(x,.), p_t(y,.)) sqrt(t) / (C(t) d(x,y))".into(),
        cfg.seed,
    )])
}

fn check_intertwining(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let kc = KernelEvalConfig::with_tol(1e-12);
    let t = 1.0;
    let mut out = Vec::new();
    for target in 1..=lk.max(1) {
        // Keep the target grid small enough that the level quadrature stays
        // affordable; the gate scales with the grid accordingly.
        let m_t = if target >= 2 {
            51
        } else {
            cfg.grid_points.clamp(41, 121)
        };
        let ratio = seq.j_at(target).map_err(|e| e.to_string())? as usize;
        let m_s = ratio * (m_t - 1) + 1;
        let coarse = smooth_test_function(seq, target - 1, m_s, (0.3, 1.0, 0.4, 0.0))?;
        let lifted = lift(&coarse, target).map_err(|e| e.to_string())?;
        let lhs = apply_semigroup(&lifted, t, QuadratureRule::Trapezoid, &kc)
            .map_err(|e| e.to_string())?;
        let evolved =
            apply_semigroup(&coarse, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
        let rhs = lift(&evolved, target).map_err(|e| e.to_string())?;
        let diff = lhs.zip_with(&rhs, |a, b| a - b).map_err(|e| e.to_string())?;
        let scale = ((199.0 / (m_t - 1) as f64).powi(2)).max(1.0);
        out.push(CheckResult::le(
            &format!("intertwining_level_{target}"),
            diff.sup_norm(),
            1e-4 * scale,
            0.0,
            format!("sup |P_t(lift f) - lift(P_t f)| onto level {target}, {m_t} points"),
            cfg.seed,
        ));
    }
    Ok(out)
}

fn check_decomposition(
    seq: &ParameterSequences,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    // Lowest level with bundle structure; higher levels add cost, not coverage.
    let level = 1;
    let m = cfg.grid_points.clamp(41, 201);
    let kc = KernelEvalConfig::with_tol(1e-12);
    let t = 0.5;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0b);
    let f = smooth_test_function(
        seq,
        level,
        m,
        (
            rng.gen_range(0.2..0.6),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-0.5..0.5),
        ),
    )?;
    let direct = apply_semigroup(&f, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let sym = project_sym(&f).map_err(|e| e.to_string())?;
    let anti = project_antisym(&f).map_err(|e| e.to_string())?;
    let coarse = integrate_fibers(&f).map_err(|e| e.to_string())?;
    let coarse_evolved =
        apply_semigroup(&coarse, t, QuadratureRule::Trapezoid, &kc).map_err(|e| e.to_string())?;
    let sym_evolved = lift(&coarse_evolved, level).map_err(|e| e.to_string())?;
    let anti_evolved = dirichlet_branch_evolution(&anti, t, QuadratureRule::Trapezoid, &kc)
        .map_err(|e| e.to_string())?;
    let recomposed = sym_evolved
        .zip_with(&anti_evolved, |a, b| a + b)
        .map_err(|e| e.to_string())?;
    let diff = direct
        .zip_with(&recomposed, |a, b| a - b)
        .map_err(|e| e.to_string())?;
    // Also confirm the projections split f exactly.
    let resum = sym.zip_with(&anti, |a, b| a + b).map_err(|e| e.to_string())?;
    let split = resum
        .zip_with(&f, |a, b| a - b)
        .map_err(|e| e.to_string())?
        .sup_norm();
    let scale = ((199.0 / (m - 1) as f64).powi(2)).max(1.0);
    Ok(vec![
        CheckResult::le(
            "decomposition",
            diff.sup_norm(),
            1e-4 * scale,
            0.0,
            format!("sup |P_t f - (lift P_t I f + Dirichlet-evolved antisym)| at t={t}"),
            cfg.seed,
        ),
        CheckResult::le(
            "projection_split",
            split,
            1e-12,
            0.0,
            "sup |sym + antisym - f|".into(),
            cfg.seed,
        ),
    ])
}

fn check_energy_lift(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let m0 = 481;
    let f0 = GridFunction::sample(seq, 0, m0, |p| p.theta().cos()).map_err(|e| e.to_string())?;
    let e0 = dirichlet_energy(&f0).map_err(|e| e.to_string())?;
    let mut worst = 0.0f64;
    let mut f = f0;
    for level in 1..=lk.max(1) {
        let ratio = seq.j_at(level).map_err(|e| e.to_string())? as usize;
        if (f.points_per_branch() - 1) % ratio != 0 {
            return Err(format!(
                "grid {} not divisible for lift onto level {level}",
                f.points_per_branch()
            ));
        }
        f = lift(&f, level).map_err(|e| e.to_string())?;
        let e = dirichlet_energy(&f).map_err(|e| e.to_string())?;
        worst = worst.max((e - e0).abs() / e0);
    }
    Ok(vec![CheckResult::le(
        "energy_lift",
        worst,
        1e-10,
        0.0,
        format!("relative energy drift of cos lifted through levels 1..={}", lk.max(1)),
        cfg.seed,
    )])
}

fn check_spectral_gap(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let mut out = Vec::new();
    let m = cfg.oracle_points.clamp(60, 150);
    for level in 1..=lk.max(1) {
        let disc = CableDiscretization::new(seq, level, m).map_err(|e| e.to_string())?;
        let spectrum = disc
            .eigen_lowest(1.5, cfg.seed ^ 0x0c)
            .map_err(|e| e.to_string())?;
        let gap = spectrum
            .lambdas
            .iter()
            .find(|&&l| l > 1e-6)
            .copied()
            .ok_or_else(|| format!("no nonzero eigenvalue below 1.5 at level {level}"))?;
        out.push(CheckResult::le(
            &format!("spectral_gap_level_{level}"),
            (gap - 1.0).abs(),
            5e-3,
            0.0,
            format!("smallest nonzero eigenvalue {gap:.6} ({m} points per branch)"),
            cfg.seed,
        ));
    }
    Ok(out)
}

/// Measurements of the odd quarter-wave mode around a newest-generation
/// junction: the candidate minimizer behind the local Poincaré constant.
#[derive(Debug, Clone, Serialize)]
pub struct LocalPoincareProbe {
    pub level: usize,
    /// Rayleigh quotient of the discretized profile.
    pub lambda_measured: f64,
    /// The continuum eigenvalue `J_i^2 / 4` of the mode.
    pub lambda_target: f64,
    /// Relative eigen-residual of the profile under the discrete operator.
    pub eigen_residual: f64,
    /// |mean| of the profile relative to its L2 norm (exactly zero in the
    /// continuum by oddness).
    pub mean_rel: f64,
    /// `int h^2 / E(h,h)`: the local constant this mode realizes.
    pub optimal_constant: f64,
    /// The quadratic-scaling reference `4 / J_i^2`.
    pub quadratic_reference: f64,
    /// The linear-scaling reference `2 / J_i`, reported for comparison.
    pub linear_reference: f64,
}

/// Assemble the ball around a level-`level` junction (the 2 n_i incident
/// branches of length `pi/J_i`) with `m` nodes per branch, install the odd
/// quarter-wave profile `h(s) = sin((J_i/2) s)` — absorbing at the center,
/// reflecting at the outer junctions, alternating sign across the center —
/// and measure its mean, eigen-residual, Rayleigh quotient, and the local
/// constant it realizes.
pub fn local_poincare_probe(
    seq: &ParameterSequences,
    level: usize,
    m: usize,
) -> Result<LocalPoincareProbe, VerifyError> {
    if level == 0 || m < 3 {
        return Err(VerifyError::Discretization {
            reason: format!("the junction ball needs level >= 1 and m >= 3, got level {level}, m {m}"),
        });
    }
    let (j_f, n_f) = seq.cumulative_f64(level)?;
    let n_i = seq.n_at(level)? as usize;
    let r = PI / j_f;
    let h = r / (m - 1) as f64;
    let c = 1.0 / (n_f * h);
    let lambda_exact = j_f * j_f / 4.0;
    // Ball nodes: 0 = center junction, 1 = left outer, 2 = right outer,
    // then interiors of the 2 n_i branches.
    let interior = m - 2;
    let n_nodes = 3 + 2 * n_i * interior;
    let mut mass = vec![0.0; n_nodes];
    let mut values = vec![0.0; n_nodes];
    let m_int = h / n_f;
    mass[0] = 2.0 * n_i as f64 * 0.5 * m_int;
    mass[1] = n_i as f64 * 0.5 * m_int;
    mass[2] = n_i as f64 * 0.5 * m_int;
    // h(s) = sin((J/2) s), s signed offset from the center.
    let profile = |s: f64| (0.5 * j_f * s).sin();
    let mut edges: Vec<(usize, usize)> = Vec::new();
    for branch in 0..2 * n_i {
        let side = if branch < n_i { -1.0 } else { 1.0 };
        let outer = if branch < n_i { 1 } else { 2 };
        let base = 3 + branch * interior;
        // Chain from the center (s=0) out to the outer junction (|s|=r).
        let mut prev = 0usize;
        for k in 0..interior {
            let node = base + k;
            mass[node] = m_int;
            values[node] = profile(side * (k + 1) as f64 * h);
            edges.push((prev, node));
            prev = node;
        }
        edges.push((prev, outer));
        values[outer] = profile(side * r);
    }
    let kmat = |x: &[f64], out: &mut [f64]| {
        out.iter_mut().for_each(|v| *v = 0.0);
        for &(a, b) in &edges {
            let d = x[a] - x[b];
            out[a] += c * d;
            out[b] -= c * d;
        }
    };
    let mut kh = vec![0.0; n_nodes];
    kmat(&values, &mut kh);
    let hmh: f64 = values.iter().zip(&mass).map(|(v, m)| v * v * m).sum();
    let hkh: f64 = values.iter().zip(&kh).map(|(v, k)| v * k).sum();
    let mean: f64 = values.iter().zip(&mass).map(|(v, m)| v * m).sum();
    let lambda_meas = hkh / hmh;
    let residual: f64 = kh
        .iter()
        .zip(&values)
        .zip(&mass)
        .map(|((k, v), m)| {
            let r = k - lambda_meas * m * v;
            r * r / m
        })
        .sum::<f64>()
        .sqrt()
        / ((1.0 + lambda_meas) * hmh.sqrt());
    Ok(LocalPoincareProbe {
        level,
        lambda_measured: lambda_meas,
        lambda_target: lambda_exact,
        eigen_residual: residual,
        mean_rel: mean.abs() / hmh.sqrt(),
        optimal_constant: hmh / hkh,
        quadratic_reference: 4.0 / (j_f * j_f),
        linear_reference: 2.0 / j_f,
    })
}

fn check_local_poincare(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let mut out = Vec::new();
    let m = cfg.grid_points.clamp(61, 201);
    for level in 1..=lk.max(1) {
        let p = local_poincare_probe(seq, level, m).map_err(|e| e.to_string())?;
        let lambda_rel = (p.lambda_measured / p.lambda_target - 1.0).abs();
        let const_rel = (p.optimal_constant / p.quadratic_reference - 1.0).abs();
        let pass = p.mean_rel <= 1e-6
            && p.eigen_residual <= 1e-2
            && lambda_rel <= 0.02
            && const_rel <= 0.02;
        out.push(CheckResult {
            name: format!("local_poincare_level_{level}"),
            status: if pass { CheckStatus::Pass } else { CheckStatus::Fail },
            measured: p.optimal_constant,
            bound: p.quadratic_reference,
            tolerance: 0.02 * p.quadratic_reference,
            notes: format!(
                "mode eigenvalue {:.6} (target {:.6}), residual {:.2e}, \
                 mean {:.2e}; measured constant {:.6} matches the quadratic scaling \
                 {:.6}, not the linear one {:.6}",
                p.lambda_measured,
                p.lambda_target,
                p.eigen_residual,
                p.mean_rel,
                p.optimal_constant,
                p.quadratic_reference,
                p.linear_reference
            ),
            seed: cfg.seed,
        });
    }
    Ok(out)
}

fn check_logsob_entropy(
    seq: &ParameterSequences,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    // Lowest level with bundle structure; higher levels add cost, not coverage.
    let level = 1;
    let m = cfg.grid_points.clamp(61, 201);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0d);
    let deltas = [0.5, 1.0, 2.0];
    let mut worst_excess = f64::NEG_INFINITY;
    let mut detail = String::new();
    for k in 0..20 {
        let f = smooth_test_function(
            seq,
            level,
            m,
            (
                rng.gen_range(0.4..1.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.6..0.6),
                rng.gen_range(-0.4..0.4),
            ),
        )?;
        let sq = f.map(|v| v * v);
        let floor = semigroup::default_entropy_floor(&sq);
        let normalized = semigroup::entropy(&sq, floor).map_err(|e| e.to_string())?;
        let mass = sq.integral();
        // Plain entropy against the un-normalized mass.
        let ent = normalized - mass * (2.0 * PI).ln();
        let energy = dirichlet_energy(&f).map_err(|e| e.to_string())?;
        for &delta in &deltas {
            let mconst = estimates::logsob_constant(seq, delta, 1e-9)
                .map_err(|e| e.to_string())?
                .value;
            let excess = ent - mconst * energy;
            if excess > worst_excess {
                worst_excess = excess;
                detail = format!(
                    "tightest case: sample {k}, delta {delta}: Ent {ent:.6}, M(delta) E {:.6}",
                    mconst * energy
                );
            }
        }
    }
    Ok(vec![CheckResult::le(
        "logsob_entropy",
        worst_excess,
        0.0,
        1e-9,
        format!("max of Ent(f^2) - M(delta) E(f,f) over 20 samples; {detail}"),
        cfg.seed,
    )])
}

fn check_series_bounds(cfg: &SuiteConfig) -> Result<Vec<CheckResult>, String> {
    let mut printed_worst = 0.0f64;
    let mut printed_at = 0.0f64;
    let mut corrected_worst = 0.0f64;
    let steps = 40;
    for k in 0..=steps {
        let a = 0.01 * (100.0f64 / 0.01).powf(k as f64 / steps as f64);
        let brute = gauss_sum(a, 1e-15, 2_000_000)
            .map_err(|e| e.to_string())?
            .value;
        let printed = (PI.sqrt() / (2.0 * a.sqrt())).min((1.0 / a) * (-a).exp());
        let corrected = gauss_sum_upper(a);
        if brute / printed > printed_worst {
            printed_worst = brute / printed;
            printed_at = a;
        }
        corrected_worst = corrected_worst.max(brute / corrected);
    }
    Ok(vec![
        CheckResult::info(
            "series_bound_printed",
            printed_worst,
            1.0,
            format!(
                "max ratio (series / min-form bound) = {printed_worst:.6} at a = {printed_at:.4}; \
                 a ratio above 1 means the min-form is not a valid majorant there"
            ),
            cfg.seed,
        ),
        CheckResult::le(
            "series_bound_corrected",
            corrected_worst,
            1.0,
            1e-12,
            "max ratio (series / exp(-a)(1 + 1/(2a))) over a log grid in [0.01, 100]".into(),
            cfg.seed,
        ),
    ])
}

fn check_assumption_sweep(
    seq: &ParameterSequences,
    ts: &[f64],
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let report =
        check_assumption(seq, ts, ASSUMPTION_PROBE_DEPTH).map_err(|e| e.to_string())?;
    let notes: Vec<String> = report
        .entries
        .iter()
        .map(|e| format!("t={}: {:?}", e.t, e.verdict))
        .collect();
    let status = match report.overall {
        AssumptionVerdict::Pass => CheckStatus::Pass,
        // A negative or unresolved admissibility probe is a property of the
        // input sequences, not a defect of the code.
        _ => CheckStatus::Info,
    };
    Ok(vec![CheckResult {
        name: "assumption_sweep".into(),
        status,
        measured: report
            .entries
            .iter()
            .filter(|e| e.verdict == AssumptionVerdict::Pass)
            .count() as f64,
        bound: report.entries.len() as f64,
        tolerance: 0.0,
        notes: format!(
            "summability probe at depth {}: {}",
            ASSUMPTION_PROBE_DEPTH,
            notes.join("; ")
        ),
        seed: cfg.seed,
    }])
}

fn check_metric_vs_graph(
    seq: &ParameterSequences,
    lk: usize,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    let disc = CableDiscretization::new(seq, lk, 17).map_err(|e| e.to_string())?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x0e);
    let mut worst = 0.0f64;
    for _ in 0..cfg.pairs.max(16) {
        let a = rng.gen_range(0..disc.node_count());
        let b = rng.gen_range(0..disc.node_count());
        let graph = dijkstra_distance(&disc, a, b);
        let metric = distance_level(seq, disc.point_of(a), disc.point_of(b), lk)
            .map_err(|e| e.to_string())?;
        worst = worst.max((graph - metric).abs());
    }
    Ok(vec![CheckResult::le(
        "metric_vs_graph",
        worst,
        1e-9,
        0.0,
        "sup |Dijkstra - exact metric| between grid nodes".into(),
        cfg.seed,
    )])
}

fn check_walk(
    seq: &ParameterSequences,
    cfg: &SuiteConfig,
) -> Result<Vec<CheckResult>, String> {
    // Lowest level with bundle structure; higher levels add cost, not coverage.
    let level = 1;
    let disc = CableDiscretization::new(seq, level, 12).map_err(|e| e.to_string())?;
    let spectrum = disc.eigen_dense().map_err(|e| e.to_string())?;
    let start = disc.node_of_grid(0, 6);
    let t = 1.0;
    let reference = spectral_distribution(&disc, &spectrum, t, start);
    let small = walk_distribution(&disc, t, start, cfg.walk_samples / 30 + 100, cfg.seed ^ 0x0f);
    let big = walk_distribution(&disc, t, start, cfg.walk_samples, cfg.seed ^ 0x0f);
    let tv_small = total_variation(&small, &reference);
    let tv_big = total_variation(&big, &reference);

    // Stationarity: for t much larger than the relaxation time the
    // occupation law approaches mass/total-mass.
    let coarse = CableDiscretization::new(seq, level, 8).map_err(|e| e.to_string())?;
    let stationary: Vec<f64> = coarse.mass.iter().map(|m| m / (2.0 * PI)).collect();
    let long_samples = cfg.walk_samples.clamp(100_000, 200_000);
    let emp = walk_distribution(&coarse, 5.0, coarse.node_of_grid(0, 3), long_samples, cfg.seed ^ 0x10);
    let tv_stat = total_variation(&emp, &stationary);
    // The 0.05 gate is calibrated at 30k samples; below that the expected
    // purely statistical total variation grows like 1/sqrt(samples), so the
    // gate is widened by that factor (never tightened above 30k).
    let gate = 0.05 * (30_000.0 / cfg.walk_samples.max(1) as f64).sqrt().max(1.0);
    Ok(vec![
        CheckResult::le(
            "walk_oracle",
            tv_big,
            gate,
            0.0,
            format!(
                "TV(empirical walk law, spectral law) = {tv_big:.4} at {} samples \
                 (vs {tv_small:.4} at {} samples)",
                cfg.walk_samples,
                cfg.walk_samples / 30 + 100
            ),
            cfg.seed,
        ),
        CheckResult::le(
            "walk_stationarity",
            tv_stat,
            0.02,
            0.0,
            format!("TV to the flat law at t=5 with {long_samples} samples"),
            cfg.seed,
        ),
    ])
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suite_runs_green_on_the_regular_2_2_space() {
        let seq = ParameterSequences::regular(2, 2).unwrap();
        let cfg = SuiteConfig {
            grid_points: 61,
            oracle_points: 80,
            pairs: 8,
            walk_samples: 8_000,
            seed: 7,
        };
        let results = run_suite(&seq, 2, &[0.5, 1.0], &cfg);
        for r in &results {
            eprintln!(
                "{:32} {} measured={:.3e} bound={:.3e} {}",
                r.name, r.status, r.measured, r.bound, r.notes
            );
        }
        let failed: Vec<&CheckResult> =
            results.iter().filter(|r| !r.passed()).collect();
        assert!(
            failed.is_empty(),
            "failing checks: {:?}",
            failed.iter().map(|r| &r.name).collect::<Vec<_>>()
        );
        // The printed-series probe must surface the known defect.
        let printed = results
            .iter()
            .find(|r| r.name == "series_bound_printed")
            .unwrap();
        assert_eq!(printed.status, CheckStatus::Info);
        assert!(printed.measured > 1.0);
    }

    #[test]
    fn suite_results_are_reproducible() {
        let seq = ParameterSequences::regular(2, 2).unwrap();
        let cfg = SuiteConfig {
            grid_points: 41,
            oracle_points: 60,
            pairs: 4,
            walk_samples: 2_000,
            seed: 11,
        };
        let a = run_suite(&seq, 1, &[1.0], &cfg);
        let b = run_suite(&seq, 1, &[1.0], &cfg);
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.name, y.name);
            assert_eq!(x.status, y.status);
            assert_eq!(x.measured.to_bits(), y.measured.to_bits());
        }
    }
}

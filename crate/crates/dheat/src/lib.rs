//! Numerics for generalized diamond fractals: explicit heat kernels, semigroup
//! quadrature, functional-inequality constants, and independent verification
//! oracles.
//!
//! A generalized diamond fractal is the inverse limit of metric measure graphs
//! `F_0, F_1, F_2, ...` built from two integer sequences `{j_l}`, `{n_l}`
//! (every entry at least 2). `F_0` is the unit circle. Passing from `F_{i-1}`
//! to `F_i` cuts every branch into `j_i` arcs of length `pi/J_i` (where
//! `J_i = j_1 * ... * j_i`) and replaces each arc by `n_i` parallel copies
//! glued at the cut points. The measure `mu_i` spreads mass `1/N_i` per unit
//! length (`N_i = n_1 * ... * n_i`), so every `F_i` has total mass `2*pi`.
//!
//! The point of this crate is that diffusion on these spaces is *computable*:
//! the heat kernel on `F_i` is the circle kernel plus finitely many interval
//! Dirichlet corrections located by the combinatorics of the pair of points,
//! and the limit kernel on `F_infty` is an absolutely convergent series of the
//! same shape. Everything downstream (semigroup action, gradient and uniform
//! bounds, weak Bakry-Emery and log-Sobolev constants, Poincare inequalities)
//! is evaluated with certified truncation errors and checked against oracles
//! that do not share code with the formulas: a cable-graph spectral solver, a
//! shortest-path search, and a continuous-time random walk.
//!
//! Module map:
//! - [`params`]: parameter sequences, cumulative products, admissibility of
//!   the kernel-convergence assumption.
//! - [`geometry`]: point addresses, projections, pair classification, exact
//!   geodesic distances at every level and in the limit.
//! - [`kernels`]: circle / interval / diamond kernels with dual series
//!   representations and certified tails.
//! - [`semigroup`]: grid functions, quadrature semigroup action, fiber
//!   integration, Dirichlet energy, entropy.
//! - [`estimates`]: every closed-form bound exported by the theory, as
//!   reproducible reports.
//! - [`verify`]: discretizations, spectral/walk/shortest-path oracles, and
//!   the named consistency-check suite.

pub mod estimates;
pub mod geometry;
pub mod kernels;
pub mod params;
pub mod semigroup;
pub mod verify;

pub use params::ParameterSequences;

//! Application portfolios for students whose utility carries a reputation
//! (gain-loss) term on top of the consumption value of the school they attend.
//!
//! Schools live on the continuum `[0, 1]`: school `x` admits every student
//! whose uniform score is at least `x` and is worth `x` to them. A student
//! with bias `gamma = (lambda - 1) * tau` perceives a portfolio
//! `x_1 > ... > x_k` as
//!
//! ```text
//! U(x) = sum_i [ -gamma * (1 - x_i) * x_i^2 + x_i * (x_{i-1} - x_i) ],   x_0 = 1
//! ```
//!
//! The crate solves for the maximizing portfolio, evaluates the closed-form
//! bounds on its shape and payoff, analyzes over/undershooting, and checks
//! everything against a grid-search oracle and a seeded Monte Carlo
//! simulation.
//!
//! Data-parallel loops (multistart scans, grid oracles, Monte Carlo shards,
//! table sweeps) go through [`exec::Exec`], which uses rayon when the
//! `parallel` feature is on and falls back to plain iteration otherwise.
//! Results never depend on the execution mode.

// `!(a < b)` is deliberate: NaN must fail every check.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bounds;
pub mod error;
pub mod exec;
pub mod figures;
pub mod model;
pub mod montecarlo;
pub mod overshoot;
pub mod precise;
pub mod solver;
pub mod tables;
pub mod verify;

pub use error::{Error, Result};
pub use exec::Exec;
pub use model::{BiasParams, GapProfile, Portfolio, SchoolSpec};
pub use solver::{SolveConfig, SolveReport};

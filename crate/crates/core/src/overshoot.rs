//! Over- and undershooting relative to the rational (equally spaced) choice.
//!
//! Locally, a single free school between fixed neighbors `a < x < b` only
//! affects `x (b - x) + a (x - a) - gamma (1 - x) x^2`, whose stationarity
//! condition is `2x - (a + b) + gamma (2x - 3x^2) = 0`.
//! Globally, small biases push the top school up and the bottom school down.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BiasParams;
use crate::solver::{solve, SolveConfig};

/// Upper end `2 - sqrt(3)` of the bias range where the local analysis holds.
pub const LOCAL_GAMMA_MAX: f64 = 0.267_949_192_431_122_7;

/// Extended bias range available through [`GammaRange::Extended`].
pub const EXTENDED_GAMMA_MAX: f64 = 0.5;

/// Below this bias the k = 5 top school lies above 5/6.
pub const K5_TOP_THRESHOLD: f64 = 0.014_291_2;

/// Below this bias the k = 5 bottom school lies below 1/6.
pub const K5_BOTTOM_THRESHOLD: f64 = 1.0 / 216.0;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum GammaRange {
    /// `0 < gamma < 2 - sqrt(3)`.
    #[default]
    Proved,
    /// `0 < gamma < 1/2`, valid once `a + b < 2 - gamma`.
    Extended,
}

impl GammaRange {
    fn max(self) -> f64 {
        match self {
            GammaRange::Proved => LOCAL_GAMMA_MAX,
            GammaRange::Extended => EXTENDED_GAMMA_MAX,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LocalOvershootResult {
    pub x_star: f64,
    pub midpoint: f64,
    pub overshoots: bool,
}

/// Residual of the local stationarity condition at `x`.
pub fn local_stationarity(x: f64, a: f64, b: f64, gamma: f64) -> f64 {
    2.0 * x - (a + b) + gamma * (2.0 * x - 3.0 * x * x)
}

/// Optimal free school between fixed neighbors `a < b`.
pub fn interior_optimum(a: f64, b: f64, gamma: f64) -> Result<LocalOvershootResult> {
    interior_optimum_in(a, b, gamma, GammaRange::Proved)
}

pub fn interior_optimum_in(
    a: f64,
    b: f64,
    gamma: f64,
    range: GammaRange,
) -> Result<LocalOvershootResult> {
    if !(gamma > 0.0 && gamma < range.max()) {
        return Err(Error::domain(format!(
            "gamma = {gamma} outside (0, {})",
            range.max()
        )));
    }
    if !(0.0 <= a && a < b && b <= 1.0) {
        return Err(Error::domain(format!(
            "need 0 <= a < b <= 1, got a = {a}, b = {b}"
        )));
    }
    let z = a + b;
    let s = 1.0 + gamma;
    let disc = s * s - 3.0 * gamma * z;
    if disc < 0.0 {
        return Err(Error::domain(format!(
            "negative discriminant {disc} at a + b = {z}, gamma = {gamma}"
        )));
    }
    // (s - sqrt(disc)) / (3 gamma), rationalized to avoid cancellation
    let x_star = z / (s + disc.sqrt());
    if !(a < x_star && x_star < b) {
        return Err(Error::domain(format!(
            "stationary point {x_star} is not inside ({a}, {b})"
        )));
    }
    Ok(LocalOvershootResult {
        x_star,
        midpoint: 0.5 * z,
        overshoots: z > 4.0 / 3.0,
    })
}

/// Feasible band `(1/(2(1+gamma)), (1 + gamma - sqrt((1+gamma)^2 - 6 gamma))/(6 gamma))`
/// for [`theta_threshold`].
pub fn theta_band(gamma: f64) -> Result<(f64, f64)> {
    if !(gamma > 0.0 && gamma < LOCAL_GAMMA_MAX) {
        return Err(Error::domain(format!(
            "gamma = {gamma} outside (0, {LOCAL_GAMMA_MAX})"
        )));
    }
    let s = 1.0 + gamma;
    let disc = (s * s - 6.0 * gamma).max(0.0);
    Ok((1.0 / (2.0 * s), (s - disc.sqrt()) / (6.0 * gamma)))
}

/// `z(theta) = (6 theta (1+gamma) - 3) / (9 theta^2 gamma)`: once `a + b`
/// exceeds it, the optimum lies above `theta (a + b)`.
pub fn theta_threshold(theta: f64, gamma: f64) -> Result<f64> {
    let (lo, hi) = theta_band(gamma)?;
    if !(lo < theta && theta < hi) {
        return Err(Error::domain(format!(
            "theta = {theta} outside ({lo}, {hi}) at gamma = {gamma}"
        )));
    }
    // split so that theta = 1/2 gives 4/3 with no rounding
    Ok((2.0 * theta - 1.0) / (3.0 * theta * theta * gamma) + 2.0 / (3.0 * theta))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GlobalOvershootRow {
    pub gamma: f64,
    pub k: usize,
    pub x_top: f64,
    pub x_bottom: f64,
    /// `x_1 - k/(k+1)`
    pub top_excess: f64,
    /// `x_k - 1/(k+1)`
    pub bottom_excess: f64,
    pub top_overshoots: bool,
    pub bottom_undershoots: bool,
}

/// Solves the k-portfolio at each bias and compares its ends with the
/// rational spacing.
pub fn global_overshoot_scan(
    k: usize,
    gamma_grid: &[f64],
    config: &SolveConfig,
) -> Result<Vec<GlobalOvershootRow>> {
    if gamma_grid.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::domain("gamma grid values must be positive"));
    }
    if gamma_grid.windows(2).any(|w| w[0] > w[1]) {
        return Err(Error::domain("gamma grid must be sorted ascending"));
    }
    let n = (k + 1) as f64;
    config
        .exec
        .map_slice(gamma_grid, |&gamma| {
            let report = solve(k, &BiasParams::from_gamma(gamma)?, config)?;
            let (x_top, x_bottom) = (report.portfolio.top(), report.portfolio.bottom());
            Ok(GlobalOvershootRow {
                gamma,
                k,
                x_top,
                x_bottom,
                top_excess: x_top - k as f64 / n,
                bottom_excess: x_bottom - 1.0 / n,
                top_overshoots: x_top > k as f64 / n,
                bottom_undershoots: x_bottom < 1.0 / n,
            })
        })
        .into_iter()
        .collect()
}

/// `x_i(gamma)` along a strictly decreasing, nonnegative grid.
pub fn convergence_trace(
    k: usize,
    i: usize,
    gamma_grid: &[f64],
    config: &SolveConfig,
) -> Result<Vec<f64>> {
    if i == 0 || i > k {
        return Err(Error::domain(format!("index {i} outside 1..={k}")));
    }
    if gamma_grid.iter().any(|g| !(*g >= 0.0 && g.is_finite())) {
        return Err(Error::domain("gamma grid values must be nonnegative"));
    }
    if gamma_grid.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::domain("gamma grid must be strictly decreasing"));
    }
    config
        .exec
        .map_slice(gamma_grid, |&gamma| {
            let report = solve(k, &BiasParams::from_gamma(gamma)?, config)?;
            Ok(report.portfolio.schools()[i - 1])
        })
        .into_iter()
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProfileEntry {
    pub index: usize,
    pub x: f64,
    pub rational: f64,
    pub excess: f64,
}

/// Exploratory: every school of the solved portfolio against its rational
/// counterpart `(k+1-i)/(k+1)`. Nothing is asserted about the signs.
pub fn overshoot_profile(k: usize, gamma: f64, config: &SolveConfig) -> Result<Vec<ProfileEntry>> {
    let report = solve(k, &BiasParams::from_gamma(gamma)?, config)?;
    let n = (k + 1) as f64;
    Ok(report
        .portfolio
        .schools()
        .iter()
        .enumerate()
        .map(|(j, &x)| {
            let rational = (k - j) as f64 / n;
            ProfileEntry {
                index: j + 1,
                x,
                rational,
                excess: x - rational,
            }
        })
        .collect())
}

/// `n` evenly spaced points in `(0, upper]`, or in `(0, upper)` when
/// `open` is set.
pub fn open_grid(upper: f64, n: usize, open: bool) -> Vec<f64> {
    let denom = if open { n + 1 } else { n } as f64;
    (1..=n).map(|j| upper * j as f64 / denom).collect()
}

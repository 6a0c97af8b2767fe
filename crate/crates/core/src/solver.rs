//! Optimal `k`-school portfolios for a biased student.
//!
//! Interior optima satisfy the first-order recurrence
//! `x_{i+1} = 2 x_i - x_{i-1} + gamma (2 x_i - 3 x_i^2)` with `x_0 = 1`, and the
//! last school's condition is the same recurrence with a virtual
//! `x_{k+1} = 0`. The recurrence is symmetric under reversing the index, so
//! the solver shoots upward from the bottom: it fixes `x_{k+1} = 0`,
//! `x_k = t`, runs the recurrence to `x_0(t)` and looks for `x_0(t) = 1`.
//!
//! Near zero the recurrence amplifies perturbations by roughly
//! `r = e^{acosh(1 + gamma)}` per step. Shooting downward from `x_1` would
//! need `x_1` to about `r^{-k}` relative precision; shooting upward only
//! needs `t` to relative precision, which a bisection in `ln t` delivers for
//! any `k` whose bottom school stays above the smallest normal double.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::exec::Exec;
use crate::model::{
    gap_profile, perceived_utility, true_payoff, BiasParams, GapProfile, Portfolio,
};

/// Iterates beyond these bounds are declared diverged.
const DIVERGE_HI: f64 = 1.5;
const DIVERGE_LO: f64 = -0.5;

/// Minimum scan density in grid points per amplification period `ln r`.
const POINTS_PER_PERIOD: f64 = 16.0;
const MAX_SCAN_POINTS: usize = 1 << 16;
const MIN_LN_T: f64 = -690.0; // ~1e-300

/// Largest `k` the grid oracle accepts.
pub const ORACLE_MAX_K: usize = 4;
/// Upper limit on the number of tuples the grid oracle will enumerate.
pub const ORACLE_MAX_TUPLES: f64 = 1e9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SolveConfig {
    /// Absolute tolerance on the boundary conditions `x_0 = 1`, `x_{k+1} = 0`.
    pub boundary_tolerance: f64,
    pub max_bisection_iters: usize,
    /// Minimum number of scan points for the bottom school.
    pub multistart_count: usize,
    /// Abort a shot as soon as an iterate goes negative instead of waiting
    /// for it to leave `[-0.5, 1.5]`.
    pub clamp_negative: bool,
    pub exec: Exec,
}

impl Default for SolveConfig {
    fn default() -> Self {
        Self {
            boundary_tolerance: 1e-12,
            max_bisection_iters: 200,
            multistart_count: 256,
            clamp_negative: false,
            exec: Exec::default(),
        }
    }
}

impl SolveConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.boundary_tolerance > 0.0 && self.boundary_tolerance.is_finite()) {
            return Err(Error::domain(format!(
                "boundary_tolerance must be positive, got {}",
                self.boundary_tolerance
            )));
        }
        if self.multistart_count < 1 {
            return Err(Error::domain("multistart_count must be at least 1"));
        }
        if self.max_bisection_iters < 1 {
            return Err(Error::domain("max_bisection_iters must be at least 1"));
        }
        Ok(())
    }

    pub fn with_exec(mut self, exec: Exec) -> Self {
        self.exec = exec;
        self
    }
}

/// A portfolio together with its diagnostics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub portfolio: Portfolio,
    /// Perceived utility `U_gamma` of the portfolio.
    pub perceived: f64,
    /// Expected consumption value alone.
    pub payoff: f64,
    /// `dU/dx_i` for every school (virtual `x_{k+1} = 0`).
    pub residuals: Vec<f64>,
    /// `|x_{k+1}|` when the recurrence is run forward from the stored schools.
    pub boundary_error: f64,
    pub gaps: GapProfile,
}

impl SolveReport {
    pub fn evaluate(portfolio: Portfolio, bias: &BiasParams) -> Self {
        let residuals = foc_residuals(&portfolio, bias);
        let xs = portfolio.schools();
        let k = xs.len();
        let prev = if k >= 2 { xs[k - 2] } else { 1.0 };
        let boundary_error = foc_next(prev, xs[k - 1], bias).abs();
        Self {
            perceived: perceived_utility(&portfolio, bias),
            payoff: true_payoff(&portfolio),
            gaps: gap_profile(&portfolio),
            residuals,
            boundary_error,
            portfolio,
        }
    }

    pub fn max_residual(&self) -> f64 {
        self.residuals.iter().fold(0.0, |m, r| m.max(r.abs()))
    }
}

/// One step of the first-order recurrence:
/// `2 x_cur - x_prev + gamma (2 x_cur - 3 x_cur^2)`.
#[inline]
pub fn foc_next(x_prev: f64, x_cur: f64, bias: &BiasParams) -> f64 {
    step(x_prev, x_cur, bias.gamma())
}

#[inline]
fn step(x_prev: f64, x_cur: f64, gamma: f64) -> f64 {
    2.0 * x_cur - x_prev + gamma * (2.0 * x_cur - 3.0 * x_cur * x_cur)
}

/// `dU/dx_i = -gamma (2 x_i - 3 x_i^2) + x_{i-1} - 2 x_i + x_{i+1}` for each
/// school, with `x_0 = 1` and `x_{k+1} = 0`.
pub fn foc_residuals(portfolio: &Portfolio, bias: &BiasParams) -> Vec<f64> {
    let xs = portfolio.schools();
    let k = xs.len();
    (0..k)
        .map(|i| {
            let above = if i == 0 { 1.0 } else { xs[i - 1] };
            let below = if i + 1 < k { xs[i + 1] } else { 0.0 };
            below - foc_next(above, xs[i], bias)
        })
        .collect()
}

/// Boundary mismatch `x_0(t) - 1` of the upward shot from `x_k = t`.
fn shoot(t: f64, k: usize, gamma: f64, clamp_negative: bool) -> f64 {
    let (mut below, mut cur) = (0.0, t);
    for _ in 0..k {
        let up = step(below, cur, gamma);
        below = cur;
        cur = up;
        if !(DIVERGE_LO..=DIVERGE_HI).contains(&cur) || (clamp_negative && cur < 0.0) {
            return cur - 1.0;
        }
    }
    cur - 1.0
}

/// `x_1, ..., x_k` of the upward shot from `x_k = t`.
fn shot_profile(t: f64, k: usize, gamma: f64) -> Vec<f64> {
    let mut xs = Vec::with_capacity(k);
    let (mut below, mut cur) = (0.0, t);
    xs.push(cur);
    for _ in 1..k {
        let up = step(below, cur, gamma);
        below = cur;
        cur = up;
        xs.push(cur);
    }
    xs.reverse();
    xs
}

/// Range of `ln t` to scan and the number of scan points.
fn scan_plan(k: usize, gamma: f64, multistart: usize) -> (f64, f64, usize) {
    let ln_r = (1.0 + gamma).acosh();
    let lo = ((1e-3f64).ln() - ((k + 1) as f64).ln() - k as f64 * ln_r).max(MIN_LN_T);
    let hi = 0.0;
    let dense = (POINTS_PER_PERIOD * (hi - lo) / ln_r).ceil();
    let n = if dense.is_finite() {
        (dense as usize).clamp(multistart.max(2), MAX_SCAN_POINTS)
    } else {
        MAX_SCAN_POINTS
    };
    (lo, hi, n.max(multistart.max(2)))
}

struct Shooter {
    k: usize,
    gamma: f64,
    clamp_negative: bool,
}

impl Shooter {
    fn g(&self, ln_t: f64) -> f64 {
        shoot(ln_t.exp(), self.k, self.gamma, self.clamp_negative)
    }

    /// Bisects a sign change of `g` on `[lo, hi]` (in `ln t`).
    fn bisect(&self, mut lo: f64, mut hi: f64, tol: f64, max_iters: usize) -> f64 {
        let mut g_lo = self.g(lo);
        let mut g_hi = self.g(hi);
        for _ in 0..max_iters {
            let mid = 0.5 * (lo + hi);
            if mid <= lo || mid >= hi {
                break;
            }
            let g_mid = self.g(mid);
            if g_mid.abs() <= tol {
                return mid;
            }
            if (g_mid < 0.0) == (g_lo < 0.0) {
                lo = mid;
                g_lo = g_mid;
            } else {
                hi = mid;
                g_hi = g_mid;
            }
        }
        if g_lo.abs() <= g_hi.abs() {
            lo
        } else {
            hi
        }
    }

    /// Golden-section search for the extremum of `g` on `[a, b]`; `sign = 1`
    /// maximizes, `sign = -1` minimizes. Returns `(argext, g(argext))`.
    fn extremum(&self, mut a: f64, mut b: f64, sign: f64) -> (f64, f64) {
        const INV_PHI: f64 = 0.618_033_988_749_894_9;
        let mut c = b - INV_PHI * (b - a);
        let mut d = a + INV_PHI * (b - a);
        let mut fc = sign * self.g(c);
        let mut fd = sign * self.g(d);
        for _ in 0..80 {
            if fc > fd {
                b = d;
                d = c;
                fd = fc;
                c = b - INV_PHI * (b - a);
                fc = sign * self.g(c);
            } else {
                a = c;
                c = d;
                fc = fd;
                d = a + INV_PHI * (b - a);
                fd = sign * self.g(d);
            }
            if (b - a).abs() <= 1e-14 * (1.0 + a.abs()) {
                break;
            }
        }
        let m = 0.5 * (a + b);
        (m, self.g(m))
    }
}

/// Orders candidates by perceived utility, then lexicographically by schools.
fn rank(a: &SolveReport, b: &SolveReport) -> Ordering {
    a.perceived.total_cmp(&b.perceived).then_with(|| {
        a.portfolio
            .schools()
            .iter()
            .zip(b.portfolio.schools())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(Ordering::Equal)
    })
}

/// Solves for the optimal `k`-school portfolio of a `gamma`-biased student.
///
/// Every critical point found by the scan is collected; the one with the
/// highest perceived utility (ties: lexicographically largest) is returned.
pub fn solve(k: usize, bias: &BiasParams, config: &SolveConfig) -> Result<SolveReport> {
    if k == 0 {
        return Err(Error::domain("k must be at least 1"));
    }
    config.validate()?;
    let gamma = bias.gamma();
    if gamma == 0.0 {
        return Ok(SolveReport::evaluate(Portfolio::equally_spaced(k)?, bias));
    }

    let shooter = Shooter {
        k,
        gamma,
        clamp_negative: config.clamp_negative,
    };
    let (lo, hi, n) = scan_plan(k, gamma, config.multistart_count);
    let grid: Vec<f64> = (0..n)
        .map(|j| lo + (hi - lo) * j as f64 / (n - 1) as f64)
        .collect();
    let values = config.exec.map_slice(&grid, |&u| shooter.g(u));

    let mut brackets = Vec::new();
    for j in 0..n - 1 {
        if (values[j] < 0.0) != (values[j + 1] < 0.0) {
            brackets.push((grid[j], grid[j + 1]));
        }
    }
    // A pair of roots closer together than the grid spacing shows up as a
    // local extremum that stays on one side of zero.
    for j in 1..n - 1 {
        let (l, m, r) = (values[j - 1], values[j], values[j + 1]);
        let same_side = (l < 0.0) == (m < 0.0) && (m < 0.0) == (r < 0.0);
        if !same_side {
            continue;
        }
        let sign = if m < 0.0 && m >= l && m >= r {
            1.0
        } else if m >= 0.0 && m <= l && m <= r {
            -1.0
        } else {
            continue;
        };
        let (u, gu) = shooter.extremum(grid[j - 1], grid[j + 1], sign);
        if (gu < 0.0) != (m < 0.0) {
            brackets.push((grid[j - 1], u));
            brackets.push((u, grid[j + 1]));
        }
    }

    let tol = config.boundary_tolerance;
    let candidates = config.exec.map_slice(&brackets, |&(a, b)| {
        let u = shooter.bisect(a, b, tol * 1e-3, config.max_bisection_iters);
        let xs = shot_profile(u.exp(), k, gamma);
        let portfolio = Portfolio::new(xs).ok()?;
        let report = SolveReport::evaluate(portfolio, bias);
        (report.max_residual() <= tol && report.boundary_error <= tol).then_some(report)
    });

    candidates
        .into_iter()
        .flatten()
        .max_by(rank)
        .ok_or_else(|| Error::SolverFailure {
            k,
            gamma,
            reason: if brackets.is_empty() {
                "no sign change of the boundary mismatch on the scan grid".into()
            } else {
                format!(
                    "{} brackets, none yielded a valid portfolio",
                    brackets.len()
                )
            },
            grid: grid
                .iter()
                .map(|u| u.exp())
                .zip(values.iter().copied())
                .collect(),
        })
}

/// Exhaustive search over strictly decreasing `k`-tuples on the grid
/// `{0, resolution, 2 resolution, ..., 1}` maximizing perceived utility.
/// Ties go to the lexicographically largest tuple.
pub fn oracle_solve(k: usize, bias: &BiasParams, resolution: f64) -> Result<SolveReport> {
    oracle_solve_with(k, bias, resolution, Exec::default())
}

pub fn oracle_solve_with(
    k: usize,
    bias: &BiasParams,
    resolution: f64,
    exec: Exec,
) -> Result<SolveReport> {
    if k == 0 || k > ORACLE_MAX_K {
        return Err(Error::domain(format!(
            "oracle supports 1 <= k <= {ORACLE_MAX_K}, got {k}"
        )));
    }
    if !(resolution > 0.0 && resolution <= 1e-2) {
        return Err(Error::domain(format!(
            "oracle resolution must lie in (0, 1e-2], got {resolution}"
        )));
    }
    let steps = (1.0 / resolution + 1e-9).floor() as usize;
    let points = steps + 1;
    let tuples = binomial(points, k);
    if tuples > ORACLE_MAX_TUPLES {
        return Err(Error::Resource(format!(
            "grid oracle would enumerate {tuples:.3e} tuples (limit {ORACLE_MAX_TUPLES:.0e})"
        )));
    }
    if points < k {
        return Err(Error::domain("grid has fewer points than schools"));
    }

    let gamma = bias.gamma();
    let xs: Vec<f64> = (0..points)
        .map(|j| (j as f64 * resolution).min(1.0))
        .collect();
    let pen: Vec<f64> = xs.iter().map(|&x| gamma * (1.0 - x) * x * x).collect();
    let ctx = OracleGrid {
        k,
        xs: &xs,
        pen: &pen,
    };

    // Top index runs from high to low so that a strict `>` keeps the
    // lexicographically largest tuple among ties.
    let tops: Vec<usize> = (k - 1..points).rev().collect();
    let per_top = exec.map_slice(&tops, |&a| {
        let mut best = Best {
            u: f64::NEG_INFINITY,
            idx: [0; ORACLE_MAX_K],
        };
        let mut path = [0usize; ORACLE_MAX_K];
        path[0] = a;
        let x = xs[a];
        let acc = -pen[a] + x * (1.0 - x);
        if k == 1 {
            best.u = acc;
            best.idx = path;
        } else {
            ctx.descend(1, a, x, acc, &mut path, &mut best);
        }
        best
    });
    let best = per_top
        .into_iter()
        .reduce(|acc, b| if b.u > acc.u { b } else { acc })
        .expect("at least one top index");
    let schools = best.idx[..k].iter().map(|&j| xs[j]).collect();
    Ok(SolveReport::evaluate(Portfolio::new(schools)?, bias))
}

#[derive(Clone, Copy)]
struct Best {
    u: f64,
    idx: [usize; ORACLE_MAX_K],
}

struct OracleGrid<'a> {
    k: usize,
    xs: &'a [f64],
    pen: &'a [f64],
}

impl OracleGrid<'_> {
    fn descend(
        &self,
        depth: usize,
        hi: usize,
        prev: f64,
        acc: f64,
        path: &mut [usize; ORACLE_MAX_K],
        best: &mut Best,
    ) {
        let remaining = self.k - depth;
        if remaining == 1 {
            for c in (0..hi).rev() {
                let x = self.xs[c];
                let u = acc - self.pen[c] + x * (prev - x);
                if u > best.u {
                    path[depth] = c;
                    best.u = u;
                    best.idx = *path;
                }
            }
            return;
        }
        for b in (remaining - 1..hi).rev() {
            path[depth] = b;
            let x = self.xs[b];
            self.descend(
                depth + 1,
                b,
                x,
                acc - self.pen[b] + x * (prev - x),
                path,
                best,
            );
        }
    }
}

fn binomial(n: usize, k: usize) -> f64 {
    if k > n {
        return 0.0;
    }
    (0..k).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Optimal perceived utilities `OPT(1), ..., OPT(k_max)`.
pub fn optimal_utilities(
    k_max: usize,
    bias: &BiasParams,
    config: &SolveConfig,
) -> Result<Vec<f64>> {
    if k_max < 2 {
        return Err(Error::domain(format!(
            "k_max must be at least 2, got {k_max}"
        )));
    }
    let ks: Vec<usize> = (1..=k_max).collect();
    config
        .exec
        .map_slice(&ks, |&k| solve(k, bias, config).map(|r| r.perceived))
        .into_iter()
        .collect()
}

/// [`optimal_utilities`] under the name of the property it feeds: callers
/// assert the returned sequence is strictly increasing.
pub fn utility_is_increasing_in_k(
    k_max: usize,
    bias: &BiasParams,
    config: &SolveConfig,
) -> Result<Vec<f64>> {
    optimal_utilities(k_max, bias, config)
}

pub fn is_strictly_increasing(values: &[f64]) -> bool {
    values.windows(2).all(|w| w[1] > w[0])
}

/// Solves `k = 1, ..., k_max` (or the listed sizes) in one batch.
pub fn solve_many(
    ks: &[usize],
    bias: &BiasParams,
    config: &SolveConfig,
) -> Result<Vec<SolveReport>> {
    config
        .exec
        .map_slice(ks, |&k| solve(k, bias, config))
        .into_iter()
        .collect()
}

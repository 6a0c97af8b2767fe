//! Double-double refinement of solved portfolios.
//!
//! `OPT(k+1) - OPT(k)` is of order `x_k^2`, which for strong biases drops
//! below `1e-40` well before `k = 25`. A portfolio stored in `f64` carries
//! coordinate errors near `1e-16`, so its utility is only known to about
//! `1e-32` and such increments are lost. Here the bottom school is refined
//! by Newton's method on `x_0(t) = 1` in double-double arithmetic, which
//! pushes the floor to roughly `1e-60`.

use twofloat::TwoFloat;

use crate::error::{Error, Result};
use crate::model::BiasParams;
use crate::solver::{solve, SolveConfig};

const NEWTON_ITERS: usize = 12;
const BOUNDARY_TOL: f64 = 1e-28;

fn tf(x: f64) -> TwoFloat {
    TwoFloat::from(x)
}

/// Runs the recurrence up from `x_{k+1} = 0`, `x_k = t`, returning
/// `x_0, ..., x_k` and `dx_0/dt`.
fn shoot_up(t: TwoFloat, k: usize, gamma: f64) -> (Vec<TwoFloat>, TwoFloat) {
    let mut xs = vec![tf(0.0); k + 1];
    let (mut below, mut cur) = (tf(0.0), t);
    let (mut s_below, mut s_cur) = (tf(0.0), tf(1.0));
    xs[k] = cur;
    for i in (1..=k).rev() {
        let up = cur * 2.0 - below + (cur * 2.0 - cur * cur * 3.0) * gamma;
        let s_up = s_cur * 2.0 - s_below + s_cur * (tf(2.0) - cur * 6.0) * gamma;
        below = cur;
        cur = up;
        s_below = s_cur;
        s_cur = s_up;
        xs[i - 1] = cur;
    }
    (xs, s_cur)
}

/// Polishes an `f64` critical point `x_1 > ... > x_k` to double-double
/// precision. Returns the schools without the `x_0 = 1` sentinel.
pub fn refine(schools: &[f64], bias: &BiasParams) -> Result<Vec<TwoFloat>> {
    let k = schools.len();
    let Some(&bottom) = schools.last() else {
        return Err(Error::domain("empty portfolio"));
    };
    if !(bottom > 0.0) {
        return Err(Error::domain("refinement needs a positive bottom school"));
    }
    let gamma = bias.gamma();
    let mut t = tf(bottom);
    for _ in 0..NEWTON_ITERS {
        let (xs, slope) = shoot_up(t, k, gamma);
        let step = (xs[0] - 1.0) / slope;
        t -= step;
        if step.abs() <= t.abs() * 1e-31 {
            break;
        }
    }
    let (xs, _) = shoot_up(t, k, gamma);
    let miss = (xs[0] - 1.0).abs().hi();
    if !(miss <= BOUNDARY_TOL) {
        return Err(Error::SolverFailure {
            k,
            gamma,
            reason: format!("double-double refinement missed x_0 = 1 by {miss:e}"),
            grid: Vec::new(),
        });
    }
    let refined = xs[1..].to_vec();
    if refined.windows(2).any(|w| !(w[0] > w[1])) || !(refined[k - 1] > 0.0) {
        return Err(Error::Ordering(
            "refined portfolio is not strictly decreasing".into(),
        ));
    }
    Ok(refined)
}

/// `U(longer) - U(shorter)` term by term in double-double.
pub fn refined_gain(longer: &[TwoFloat], shorter: &[TwoFloat], gamma: f64) -> Result<TwoFloat> {
    if longer.len() < shorter.len() {
        return Err(Error::domain(
            "first portfolio must not be shorter than the second",
        ));
    }
    let one = tf(1.0);
    let mut gain = tf(0.0);
    let (mut p1, mut p0) = (one, one);
    for (&x1, &x0) in longer.iter().zip(shorter) {
        let d = x1 - x0;
        let dp = p1 - p0;
        let consumption = x0 * (dp - d) + d * (p1 - x1);
        let penalty = d * ((x1 + x0) - (x1 * x1 + x1 * x0 + x0 * x0));
        gain += consumption - penalty * gamma;
        p1 = x1;
        p0 = x0;
    }
    for &x in &longer[shorter.len()..] {
        gain += x * (p1 - x) - (one - x) * x * x * gamma;
        p1 = x;
    }
    Ok(gain)
}

/// `OPT(k+1) - OPT(k)` for `k = 1, ..., k_max - 1`, from refined optima.
pub fn opt_increments(k_max: usize, bias: &BiasParams, config: &SolveConfig) -> Result<Vec<f64>> {
    if k_max < 2 {
        return Err(Error::domain(format!(
            "k_max must be at least 2, got {k_max}"
        )));
    }
    let refined = config
        .exec
        .map(k_max, |j| {
            let report = solve(j + 1, bias, config)?;
            if bias.gamma() == 0.0 {
                Ok(report.portfolio.schools().iter().map(|&x| tf(x)).collect())
            } else {
                refine(report.portfolio.schools(), bias)
            }
        })
        .into_iter()
        .collect::<Result<Vec<Vec<TwoFloat>>>>()?;
    refined
        .windows(2)
        .map(|w| refined_gain(&w[1], &w[0], bias.gamma()).map(|g| g.hi()))
        .collect()
}

//! Closed-form bounds on the shape and payoff of biased portfolios.
//!
//! Per-index bounds write the solution as the rational spacing plus a
//! discrete Green's-function correction: with `f(x) = 3x^2 - 2x`,
//!
//! ```text
//! x_i = (k+1-i)/(k+1) + gamma * sum_m G(i, m) f(x_m),
//! G(i, m) = m (k+1-i)/(k+1)   (m < i),   i (k+1-m)/(k+1)   (m >= i)
//! ```
//!
//! and an envelope `lower_m <= f(x_m) <= upper_m` turns this identity into a
//! sandwich.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

const TWO_THIRDS: f64 = 2.0 / 3.0;
const THIRD: f64 = 1.0 / 3.0;

/// `f(x) = -(2x - 3x^2)`, the per-school curvature term of the recurrence.
#[inline]
pub fn curvature(x: f64) -> f64 {
    3.0 * x * x - 2.0 * x
}

fn require_positive(gamma: f64) -> Result<()> {
    if gamma > 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must be positive, got {gamma}"
        )))
    }
}

fn require_nonnegative(gamma: f64) -> Result<()> {
    if gamma >= 0.0 && gamma.is_finite() {
        Ok(())
    } else {
        Err(Error::domain(format!(
            "gamma must be nonnegative, got {gamma}"
        )))
    }
}

/// Upper bound `h(gamma)` on the second-highest school, valid for every `k`.
pub fn h_of_gamma(gamma: f64) -> Result<f64> {
    require_positive(gamma)?;
    if gamma < 0.5 {
        Ok(1.0 - gamma)
    } else if gamma < 2.0 {
        Ok((1.0 - gamma + gamma * gamma) / (3.0 * gamma))
    } else {
        let disc = (1.0 - 2.0 * gamma).powi(2) - 4.0 * gamma;
        if disc < 0.0 {
            return Err(Error::domain(format!(
                "negative discriminant {disc} in h(gamma) at gamma = {gamma}"
            )));
        }
        Ok((1.0 + 2.0 * gamma + disc.sqrt()) / (6.0 * gamma))
    }
}

/// Cap on the number of schools above 2/3: `1` for `gamma > 1/3`, otherwise
/// `1 + 1/(3 gamma)`. At exactly `1/3` the larger branch is used.
pub fn above_two_thirds_cap(gamma: f64) -> Result<f64> {
    require_positive(gamma)?;
    if gamma > THIRD {
        Ok(1.0)
    } else {
        Ok(1.0 + 1.0 / (3.0 * gamma))
    }
}

/// Number of schools in `[c, 2/3]`, at most `(2/3 - c)/sqrt(gamma c^2 (1-c)) + 1`.
pub fn between_c_and_two_thirds_cap(gamma: f64, c: f64) -> Result<f64> {
    require_positive(gamma)?;
    check_c(c)?;
    Ok((TWO_THIRDS - c) / (gamma * c * c * (1.0 - c)).sqrt() + 1.0)
}

fn check_c(c: f64) -> Result<()> {
    if c > 0.0 && c < TWO_THIRDS {
        Ok(())
    } else {
        Err(Error::domain(format!("c must lie in (0, 2/3), got {c}")))
    }
}

/// `m(gamma, c)`: cap on the number of schools above `c`.
///
/// Equals `2 + 1/(3 gamma) + (2/3 - c)/sqrt(gamma c^2 (1 - c))` for
/// `gamma <= 1/3` and `2 + (2/3 - c)/sqrt(gamma c^2 (1 - c))` above.
pub fn m_of_gamma_c(gamma: f64, c: f64) -> Result<f64> {
    Ok(above_two_thirds_cap(gamma)? + between_c_and_two_thirds_cap(gamma, c)?)
}

/// The payoff-ceiling objective `1/2 - (1 - c)^2 / (2 (m(gamma, c) + 1))`.
pub fn payoff_ceiling_at(gamma: f64, c: f64) -> Result<f64> {
    let m = m_of_gamma_c(gamma, c)?;
    Ok(0.5 - (1.0 - c) * (1.0 - c) / (2.0 * (m + 1.0)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PayoffCeiling {
    /// `p(gamma) < 1/2`, an upper bound on the true payoff for every `k`.
    pub p: f64,
    /// The split point `c` attaining it.
    pub c_star: f64,
}

/// Minimizes the payoff-ceiling objective over `c` in `(0, 2/3)`: a grid of
/// step `1e-4` followed by golden-section refinement around the best cell.
pub fn p_of_gamma(gamma: f64) -> Result<PayoffCeiling> {
    require_positive(gamma)?;
    const STEP: f64 = 1e-4;
    let cells = (TWO_THIRDS / STEP).floor() as usize;
    let objective = |c: f64| payoff_ceiling_at(gamma, c).expect("c inside (0, 2/3)");
    let (best_j, _) = (1..=cells)
        .map(|j| (j, objective(j as f64 * STEP)))
        .filter(|(j, _)| (*j as f64 * STEP) < TWO_THIRDS)
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("non-empty grid");

    let mut a = (best_j as f64 - 1.0) * STEP;
    let mut b = ((best_j + 1) as f64 * STEP).min(TWO_THIRDS);
    a = a.max(STEP * 1e-3);
    b = b.min(TWO_THIRDS * (1.0 - 1e-12));
    const INV_PHI: f64 = 0.618_033_988_749_894_9;
    let mut c1 = b - INV_PHI * (b - a);
    let mut c2 = a + INV_PHI * (b - a);
    let (mut f1, mut f2) = (objective(c1), objective(c2));
    for _ in 0..100 {
        if f1 < f2 {
            b = c2;
            c2 = c1;
            f2 = f1;
            c1 = b - INV_PHI * (b - a);
            f1 = objective(c1);
        } else {
            a = c1;
            c1 = c2;
            f1 = f2;
            c2 = a + INV_PHI * (b - a);
            f2 = objective(c2);
        }
        if b - a < 1e-15 {
            break;
        }
    }
    let refined = 0.5 * (a + b);
    let grid_c = best_j as f64 * STEP;
    let (c_star, p) = [(refined, objective(refined)), (grid_c, objective(grid_c))]
        .into_iter()
        .min_by(|x, y| x.1.total_cmp(&y.1))
        .expect("two candidates");
    Ok(PayoffCeiling { p, c_star })
}

/// `2p / (1 - 2p)`: beyond this many applications a rational student beats
/// any payoff at most `p`.
pub fn k_from_p(p: f64) -> Result<f64> {
    if !(0.0..0.5).contains(&p) {
        return Err(Error::domain(format!("p must lie in [0, 1/2), got {p}")));
    }
    Ok(2.0 * p / (1.0 - 2.0 * p))
}

/// `k(gamma) = 2 p(gamma) / (1 - 2 p(gamma))`.
pub fn k_of_gamma(gamma: f64) -> Result<f64> {
    k_from_p(p_of_gamma(gamma)?.p)
}

/// Bounds on `f(x_i) = 3 x_i^2 - 2 x_i` for each school `i = 1..k`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeltaEnvelope {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

impl DeltaEnvelope {
    pub fn new(lower: Vec<f64>, upper: Vec<f64>) -> Result<Self> {
        let env = Self { lower, upper };
        env.validate()?;
        Ok(env)
    }

    fn validate(&self) -> Result<()> {
        if self.lower.len() != self.upper.len() {
            return Err(Error::domain(format!(
                "envelope sides differ in length: {} vs {}",
                self.lower.len(),
                self.upper.len()
            )));
        }
        if let Some(i) = self
            .lower
            .iter()
            .zip(&self.upper)
            .position(|(l, u)| !(l <= u))
        {
            return Err(Error::domain(format!(
                "envelope lower bound exceeds upper bound at index {}",
                i + 1
            )));
        }
        Ok(())
    }

    /// `-1/3 <= f(x) <= 1` holds for every `x` in `[0, 1]`.
    pub fn universal(k: usize) -> Self {
        Self {
            lower: vec![-THIRD; k],
            upper: vec![1.0; k],
        }
    }

    /// Exact range of `f` over each interval of [`xi_sandwich`] (clipped to
    /// `[0, 1]`). Sound for every `gamma`, and tighter than the universal
    /// envelope when `gamma` is small.
    pub fn refined(k: usize, gamma: f64) -> Result<Self> {
        let (lo, hi) = xi_sandwich(k, gamma)?;
        let (lower, upper) = lo
            .iter()
            .zip(&hi)
            .map(|(&a, &b)| curvature_range(a.max(0.0), b.min(1.0)))
            .unzip();
        Ok(Self { lower, upper })
    }

    pub fn len(&self) -> usize {
        self.lower.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lower.is_empty()
    }
}

/// Min and max of `f(x) = 3x^2 - 2x` on `[a, b]`; the vertex sits at 1/3.
fn curvature_range(a: f64, b: f64) -> (f64, f64) {
    let (fa, fb) = (curvature(a), curvature(b));
    let min = if a <= THIRD && THIRD <= b {
        -THIRD
    } else {
        fa.min(fb)
    };
    (min, fa.max(fb))
}

fn check_k(k: usize) -> Result<()> {
    if k == 0 {
        Err(Error::domain("k must be at least 1"))
    } else {
        Ok(())
    }
}

/// Per-index sandwich from the universal envelope:
/// `(k+1-i)/(k+1) - (gamma/3) i(k+1-i)/2 <= x_i <= (k+1-i)/(k+1) + gamma i(k+1-i)/2`.
pub fn xi_sandwich(k: usize, gamma: f64) -> Result<(Vec<f64>, Vec<f64>)> {
    check_k(k)?;
    require_nonnegative(gamma)?;
    let n = (k + 1) as f64;
    Ok((1..=k)
        .map(|i| {
            let base = (k + 1 - i) as f64 / n;
            let w = (i * (k + 1 - i)) as f64 / 2.0;
            (base - gamma / 3.0 * w, base + gamma * w)
        })
        .unzip())
}

/// Per-index sandwich for an arbitrary envelope.
pub fn xi_sandwich_general(
    k: usize,
    gamma: f64,
    envelope: &DeltaEnvelope,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_k(k)?;
    require_nonnegative(gamma)?;
    envelope.validate()?;
    if envelope.len() != k {
        return Err(Error::domain(format!(
            "envelope has {} entries, expected {k}",
            envelope.len()
        )));
    }
    let n = (k + 1) as f64;
    let side = |delta: &[f64], i: usize| {
        // delta is 0-based: delta[m - 1] bounds f(x_m).
        let above: f64 = (1..i).map(|j| j as f64 * delta[j - 1]).sum();
        let below: f64 = (1..=k + 1 - i).map(|j| j as f64 * delta[k - j]).sum();
        (k + 1 - i) as f64 / n
            + gamma * (k + 1 - i) as f64 / n * above
            + gamma * i as f64 / n * below
    };
    Ok((1..=k)
        .map(|i| (side(&envelope.lower, i), side(&envelope.upper, i)))
        .unzip())
}

/// Sandwich on `x_i` given its upper neighbor `x_{i-1}`:
/// `(k+1-i)/(k+2-i) x_{i-1} + gamma/(k+2-i) sum_{j=1}^{k+1-i} j delta_{k+1-j}`.
pub fn xi_neighbor_bound(
    k: usize,
    i: usize,
    x_prev: f64,
    gamma: f64,
    envelope: &DeltaEnvelope,
) -> Result<(f64, f64)> {
    check_k(k)?;
    require_nonnegative(gamma)?;
    envelope.validate()?;
    if i == 0 || i > k {
        return Err(Error::domain(format!("index {i} outside 1..={k}")));
    }
    if envelope.len() != k {
        return Err(Error::domain(format!(
            "envelope has {} entries, expected {k}",
            envelope.len()
        )));
    }
    let d = (k + 2 - i) as f64;
    let weight = (k + 1 - i) as f64 / d;
    let side = |delta: &[f64]| {
        let s: f64 = (1..=k + 1 - i).map(|j| j as f64 * delta[k - j]).sum();
        weight * x_prev + gamma / d * s
    };
    Ok((side(&envelope.lower), side(&envelope.upper)))
}

/// Chains [`xi_neighbor_bound`] downward from `x_0 = 1`, carrying the lower
/// bound through the lower side and the upper bound through the upper side.
pub fn neighbor_chain(
    k: usize,
    gamma: f64,
    envelope: &DeltaEnvelope,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let (mut lo_prev, mut hi_prev) = (1.0, 1.0);
    let mut lower = Vec::with_capacity(k);
    let mut upper = Vec::with_capacity(k);
    for i in 1..=k {
        let (lo, _) = xi_neighbor_bound(k, i, lo_prev, gamma, envelope)?;
        let (_, hi) = xi_neighbor_bound(k, i, hi_prev, gamma, envelope)?;
        lower.push(lo);
        upper.push(hi);
        lo_prev = lo;
        hi_prev = hi;
    }
    Ok((lower, upper))
}

/// Every bound evaluated at one `(gamma, k, c)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BoundsReport {
    pub gamma: f64,
    pub k: usize,
    pub c: f64,
    pub h_gamma: f64,
    pub above_two_thirds_cap: f64,
    pub m_gamma_c: f64,
    pub p_gamma: f64,
    pub c_star: f64,
    pub k_gamma: f64,
    pub xi_lower: Vec<f64>,
    pub xi_upper: Vec<f64>,
}

pub fn bounds_report(gamma: f64, k: usize, c: f64) -> Result<BoundsReport> {
    let ceiling = p_of_gamma(gamma)?;
    let (xi_lower, xi_upper) = xi_sandwich(k, gamma)?;
    Ok(BoundsReport {
        gamma,
        k,
        c,
        h_gamma: h_of_gamma(gamma)?,
        above_two_thirds_cap: above_two_thirds_cap(gamma)?,
        m_gamma_c: m_of_gamma_c(gamma, c)?,
        p_gamma: ceiling.p,
        c_star: ceiling.c_star,
        k_gamma: k_from_p(ceiling.p)?,
        xi_lower,
        xi_upper,
    })
}

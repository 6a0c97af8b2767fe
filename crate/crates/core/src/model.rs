//! Domain types and closed-form utility evaluation.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance used to decide whether a finite school is threshold-correlated
/// (`v = 1 - p`).
const THRESHOLD_TOL: f64 = 1e-12;

/// Behavioral coefficients of a student.
///
/// `tau` scales the subjective value of a school, `lambda` amplifies losses
/// from rejection, and `gamma = (lambda - 1) * tau` is the only combination
/// that enters expected utilities.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    tau: f64,
    lambda: f64,
    gamma: f64,
}

impl BiasParams {
    pub fn new(tau: f64, lambda: f64) -> Result<Self> {
        if !tau.is_finite() || tau < 0.0 {
            return Err(Error::domain(format!(
                "tau must be finite and >= 0, got {tau}"
            )));
        }
        if !lambda.is_finite() || lambda < 1.0 {
            return Err(Error::domain(format!(
                "lambda must be finite and >= 1, got {lambda}"
            )));
        }
        Ok(Self {
            tau,
            lambda,
            gamma: (lambda - 1.0) * tau,
        })
    }

    /// Canonical parameters for a given bias: `tau = gamma`, `lambda = 2`.
    pub fn from_gamma(gamma: f64) -> Result<Self> {
        if !gamma.is_finite() || gamma < 0.0 {
            return Err(Error::domain(format!(
                "gamma must be finite and >= 0, got {gamma}"
            )));
        }
        Ok(Self {
            tau: gamma,
            lambda: 2.0,
            gamma,
        })
    }

    pub fn rational() -> Self {
        Self {
            tau: 0.0,
            lambda: 2.0,
            gamma: 0.0,
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn lambda(&self) -> f64 {
        self.lambda
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }
}

/// A school in the finite model: acceptance probability and consumption value.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchoolSpec {
    p: f64,
    v: f64,
}

impl SchoolSpec {
    pub fn new(p: f64, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::domain(format!("p must lie in [0, 1], got {p}")));
        }
        if !v.is_finite() || v < 0.0 {
            return Err(Error::domain(format!("v must be finite and >= 0, got {v}")));
        }
        Ok(Self { p, v })
    }

    /// The continuum school at threshold `x`: admitted with probability
    /// `1 - x`, worth `x`.
    pub fn threshold(x: f64) -> Result<Self> {
        Self::new(1.0 - x, x)
    }

    pub fn p(&self) -> f64 {
        self.p
    }

    pub fn v(&self) -> f64 {
        self.v
    }
}

/// Strictly decreasing school positions `1 >= x_1 > ... > x_k >= 0`.
///
/// The sentinel `x_0 = 1` is implicit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Portfolio {
    schools: Vec<f64>,
}

impl Portfolio {
    pub fn new(schools: Vec<f64>) -> Result<Self> {
        if schools.is_empty() {
            return Err(Error::domain("a portfolio needs at least one school"));
        }
        for (i, &x) in schools.iter().enumerate() {
            if !(0.0..=1.0).contains(&x) {
                return Err(Error::domain(format!(
                    "school {} at {x} lies outside [0, 1]",
                    i + 1
                )));
            }
        }
        if let Some(i) = schools.windows(2).position(|w| w[1] >= w[0]) {
            return Err(Error::Ordering(format!(
                "schools must be strictly decreasing, but x_{} = {} <= x_{} = {}",
                i + 1,
                schools[i],
                i + 2,
                schools[i + 1]
            )));
        }
        Ok(Self { schools })
    }

    /// The rational optimum `x_i = (k + 1 - i) / (k + 1)`.
    pub fn equally_spaced(k: usize) -> Result<Self> {
        if k == 0 {
            return Err(Error::domain("k must be at least 1"));
        }
        let n = (k + 1) as f64;
        Self::new((1..=k).map(|i| (k + 1 - i) as f64 / n).collect())
    }

    pub fn schools(&self) -> &[f64] {
        &self.schools
    }

    pub fn k(&self) -> usize {
        self.schools.len()
    }

    pub fn top(&self) -> f64 {
        self.schools[0]
    }

    pub fn bottom(&self) -> f64 {
        self.schools[self.schools.len() - 1]
    }

    /// Iterates `(x_{i-1}, x_i)` with `x_0 = 1`.
    pub fn pairs(&self) -> impl Iterator<Item = (f64, f64)> + '_ {
        std::iter::once(1.0)
            .chain(self.schools.iter().copied())
            .zip(self.schools.iter().copied())
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.schools
    }
}

impl TryFrom<Vec<f64>> for Portfolio {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Portfolio::new(v)
    }
}

impl From<Portfolio> for Vec<f64> {
    fn from(p: Portfolio) -> Self {
        p.schools
    }
}

/// Selectivity gaps `delta_i = x_{i-1} - x_i` (with `x_0 = 1`).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GapProfile {
    pub deltas: Vec<f64>,
}

impl GapProfile {
    pub fn sum(&self) -> f64 {
        self.deltas.iter().sum()
    }
}

/// Perceived expected utility of a finite, threshold-correlated school list.
///
/// Schools must be sorted strictly decreasing by value and satisfy
/// `v = 1 - p`; the attendance probability of school `i` is then
/// `v_{i-1} - v_i`.
pub fn perceived_utility_finite(schools: &[SchoolSpec], bias: &BiasParams) -> Result<f64> {
    if let Some(i) = schools.windows(2).position(|w| w[1].v >= w[0].v) {
        return Err(Error::Ordering(format!(
            "schools must be sorted strictly decreasing by value (positions {} and {})",
            i + 1,
            i + 2
        )));
    }
    for (index, s) in schools.iter().enumerate() {
        if (s.v - (1.0 - s.p)).abs() > THRESHOLD_TOL {
            return Err(Error::UnsupportedCorrelation {
                index,
                v: s.v,
                one_minus_p: 1.0 - s.p,
            });
        }
    }
    let gamma = bias.gamma();
    let mut upper = 1.0;
    let mut bias_term = 0.0;
    let mut consumption = 0.0;
    for s in schools {
        bias_term += gamma * s.p * (1.0 - s.p) * s.v;
        consumption += s.v * (upper - s.v);
        upper = s.v;
    }
    Ok(consumption - bias_term)
}

/// `U_gamma(x) = sum_i [ -gamma (1 - x_i) x_i^2 + x_i (x_{i-1} - x_i) ]`.
pub fn perceived_utility(portfolio: &Portfolio, bias: &BiasParams) -> f64 {
    let gamma = bias.gamma();
    portfolio
        .pairs()
        .map(|(prev, x)| -gamma * (1.0 - x) * x * x + x * (prev - x))
        .sum()
}

/// Expected consumption value alone: `sum_i x_i (x_{i-1} - x_i)`.
pub fn true_payoff(portfolio: &Portfolio) -> f64 {
    portfolio.pairs().map(|(prev, x)| x * (prev - x)).sum()
}

/// `sum_i x_i^2 (1 - x_i)`, the expected behavioral loss per unit of bias.
pub fn bias_penalty(portfolio: &Portfolio) -> f64 {
    portfolio.schools().iter().map(|&x| x * x * (1.0 - x)).sum()
}

/// `U(longer) - U(shorter)` accumulated term by term from coordinate
/// differences, for portfolios that share their leading schools up to small
/// perturbations. Near an optimum the gradient vanishes, so this resolves
/// increments far below the rounding error of `U` itself.
pub fn utility_gain(longer: &Portfolio, shorter: &Portfolio, bias: &BiasParams) -> Result<f64> {
    if longer.k() < shorter.k() {
        return Err(Error::domain(format!(
            "first portfolio has {} schools, fewer than {}",
            longer.k(),
            shorter.k()
        )));
    }
    let gamma = bias.gamma();
    let mut gain = 0.0;
    let mut pairs = longer.pairs();
    for ((p1, x1), (p0, x0)) in pairs.by_ref().take(shorter.k()).zip(shorter.pairs()) {
        let d = x1 - x0;
        let dp = p1 - p0;
        let consumption = x0 * (dp - d) + d * (p1 - x1);
        let penalty = d * ((x1 + x0) - (x1 * x1 + x1 * x0 + x0 * x0));
        gain += consumption - gamma * penalty;
    }
    for (p, x) in pairs {
        gain += x * (p - x) - gamma * (1.0 - x) * x * x;
    }
    Ok(gain)
}

/// `x (1 - x) (1 - gamma x)`: the single-application special case.
pub fn single_school_utility(x: f64, bias: &BiasParams) -> Result<f64> {
    if !(0.0..=1.0).contains(&x) {
        return Err(Error::domain(format!("x must lie in [0, 1], got {x}")));
    }
    Ok(x * (1.0 - x) * (1.0 - bias.gamma() * x))
}

pub fn gap_profile(portfolio: &Portfolio) -> GapProfile {
    GapProfile {
        deltas: portfolio.pairs().map(|(prev, x)| prev - x).collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn g(gamma: f64) -> BiasParams {
        BiasParams::from_gamma(gamma).unwrap()
    }

    #[test]
    fn utility_gain_small_cases() {
        let a = Portfolio::new(vec![0.6, 0.3]).unwrap();
        let b = Portfolio::new(vec![0.62, 0.35, 0.1]).unwrap();
        let bias = g(0.7);
        let direct = perceived_utility(&b, &bias) - perceived_utility(&a, &bias);
        assert!((utility_gain(&b, &a, &bias).unwrap() - direct).abs() < 1e-15);
        assert_eq!(utility_gain(&a, &a, &bias).unwrap(), 0.0);
        assert!(utility_gain(&a, &b, &bias).is_err());
    }

    fn close(a: f64, b: f64, tol: f64) -> bool {
        (a - b).abs() <= tol
    }

    #[test]
    fn bias_params() {
        let b = BiasParams::new(0.05, 3.0).unwrap();
        assert!(close(b.gamma(), 0.1, 1e-15));
        let c = BiasParams::from_gamma(0.7).unwrap();
        assert_eq!((c.tau(), c.lambda(), c.gamma()), (0.7, 2.0, 0.7));
        assert!(BiasParams::new(-0.1, 2.0).is_err());
        assert!(BiasParams::new(0.1, 0.9).is_err());
        assert!(BiasParams::from_gamma(-1e-9).is_err());
        assert!(BiasParams::from_gamma(f64::NAN).is_err());
        assert_eq!(BiasParams::rational().gamma(), 0.0);
    }

    #[test]
    fn portfolio_validation() {
        assert!(Portfolio::new(vec![]).is_err());
        assert!(matches!(
            Portfolio::new(vec![0.5, 0.5]),
            Err(Error::Ordering(_))
        ));
        assert!(matches!(
            Portfolio::new(vec![0.2, 0.4]),
            Err(Error::Ordering(_))
        ));
        assert!(Portfolio::new(vec![1.1]).is_err());
        assert!(Portfolio::new(vec![-0.1]).is_err());
        assert!(Portfolio::new(vec![f64::NAN]).is_err());
        // closed interval endpoints are accepted
        assert!(Portfolio::new(vec![1.0, 0.5, 0.0]).is_ok());
        // tiny but distinct tails are legitimate solved portfolios
        assert!(Portfolio::new(vec![0.3, 1e-40, 1e-80]).is_ok());
    }

    #[test]
    fn finite_examples() {
        let s = [SchoolSpec::new(2.0 / 3.0, 1.0 / 3.0).unwrap()];
        assert!(close(
            perceived_utility_finite(&s, &g(1.0)).unwrap(),
            4.0 / 27.0,
            1e-15
        ));

        let s = [SchoolSpec::new(0.5, 0.5).unwrap()];
        assert!(close(
            perceived_utility_finite(&s, &g(0.0)).unwrap(),
            0.25,
            1e-15
        ));

        let s = [SchoolSpec::new(1.0, 0.0).unwrap()];
        for gamma in [0.0, 0.3, 5.0] {
            assert_eq!(perceived_utility_finite(&s, &g(gamma)).unwrap(), 0.0);
        }
    }

    #[test]
    fn finite_errors() {
        let unsorted = [
            SchoolSpec::threshold(0.3).unwrap(),
            SchoolSpec::threshold(0.6).unwrap(),
        ];
        assert!(matches!(
            perceived_utility_finite(&unsorted, &g(0.1)),
            Err(Error::Ordering(_))
        ));
        let independent = [SchoolSpec::new(0.5, 0.9).unwrap()];
        assert!(matches!(
            perceived_utility_finite(&independent, &g(0.1)),
            Err(Error::UnsupportedCorrelation { index: 0, .. })
        ));
        assert!(SchoolSpec::new(1.5, 0.1).is_err());
        assert!(SchoolSpec::new(0.5, -0.1).is_err());
    }

    #[test]
    fn continuum_examples() {
        let p = Portfolio::new(vec![1.0 / 3.0]).unwrap();
        assert!(close(perceived_utility(&p, &g(1.0)), 4.0 / 27.0, 1e-15));
        let p = Portfolio::new(vec![0.5]).unwrap();
        assert!(close(perceived_utility(&p, &g(0.0)), 0.25, 1e-15));
        let p = Portfolio::new(vec![0.75, 0.5, 0.25]).unwrap();
        assert!(close(perceived_utility(&p, &g(0.0)), 0.375, 1e-15));
    }

    #[test]
    fn payoff_examples() {
        let p = Portfolio::equally_spaced(4).unwrap();
        assert!(close(true_payoff(&p), 0.4, 1e-15));
        assert!(close(
            true_payoff(&Portfolio::new(vec![0.5]).unwrap()),
            0.25,
            1e-15
        ));
    }

    #[test]
    fn single_school_examples() {
        for gamma in [0.0, 0.5, 1.0, 3.0] {
            assert_eq!(single_school_utility(0.0, &g(gamma)).unwrap(), 0.0);
            assert_eq!(single_school_utility(1.0, &g(gamma)).unwrap(), 0.0);
        }
        assert_eq!(single_school_utility(0.5, &g(2.0)).unwrap(), 0.0);
        assert!(close(
            single_school_utility(0.6, &g(2.0)).unwrap(),
            -0.048,
            1e-15
        ));
        assert!(single_school_utility(1.01, &g(0.1)).is_err());
        assert!(single_school_utility(-0.01, &g(0.1)).is_err());
    }

    #[test]
    fn single_school_roots_by_sign_changes() {
        // Count sign changes of the cubic on an interior grid; the interior
        // root 1/gamma exists only for gamma > 1.
        for (gamma, expected) in [(0.5, 0), (1.0, 0), (1.5, 1), (4.0, 1)] {
            let b = g(gamma);
            let vals: Vec<f64> = (1..10_000)
                .map(|j| single_school_utility(j as f64 / 10_000.0, &b).unwrap())
                .filter(|v| *v != 0.0)
                .collect();
            let changes = vals
                .windows(2)
                .filter(|w| w[0].signum() != w[1].signum())
                .count();
            assert_eq!(changes, expected, "gamma = {gamma}");
        }
    }

    #[test]
    fn gap_examples() {
        let p = Portfolio::new(vec![0.75, 0.5, 0.25]).unwrap();
        assert_eq!(gap_profile(&p).deltas, vec![0.25, 0.25, 0.25]);
        let p = Portfolio::new(vec![0.391, 0.106]).unwrap();
        let d = gap_profile(&p).deltas;
        assert!(close(d[0], 0.609, 1e-12) && close(d[1], 0.285, 1e-12));
        let p = Portfolio::new(vec![0.37]).unwrap();
        assert_eq!(gap_profile(&p).deltas, vec![1.0 - 0.37]);
    }

    fn portfolio_strategy() -> impl Strategy<Value = Portfolio> {
        proptest::collection::btree_set(0u32..1_000_000, 1..12).prop_map(|set| {
            let xs: Vec<f64> = set.into_iter().rev().map(|j| j as f64 / 1e6).collect();
            Portfolio::new(xs).unwrap()
        })
    }

    proptest! {
        #[test]
        fn rational_perceived_is_payoff(p in portfolio_strategy()) {
            prop_assert!((perceived_utility(&p, &g(0.0)) - true_payoff(&p)).abs() < 1e-15);
        }

        #[test]
        fn perceived_decomposes(p in portfolio_strategy(), gamma in 0.0f64..4.0) {
            let lhs = perceived_utility(&p, &g(gamma));
            let rhs = true_payoff(&p) - gamma * bias_penalty(&p);
            prop_assert!((lhs - rhs).abs() < 1e-12);
        }

        #[test]
        fn finite_matches_continuum(p in portfolio_strategy(), gamma in 0.0f64..4.0) {
            let schools: Vec<SchoolSpec> = p
                .schools()
                .iter()
                .map(|&x| SchoolSpec::threshold(x).unwrap())
                .collect();
            let a = perceived_utility_finite(&schools, &g(gamma)).unwrap();
            prop_assert!((a - perceived_utility(&p, &g(gamma))).abs() < 1e-12);
        }

        #[test]
        fn gaps_sum_to_span(p in portfolio_strategy()) {
            let gaps = gap_profile(&p);
            prop_assert!(gaps.deltas.iter().all(|d| *d > 0.0));
            prop_assert!((gaps.sum() - (1.0 - p.bottom())).abs() < 1e-12);
        }

        #[test]
        fn gain_matches_direct_difference(a in portfolio_strategy(), b in portfolio_strategy(), gamma in 0.0f64..4.0) {
            let (long, short) = if a.k() >= b.k() { (a, b) } else { (b, a) };
            let direct = perceived_utility(&long, &g(gamma)) - perceived_utility(&short, &g(gamma));
            prop_assert!((utility_gain(&long, &short, &g(gamma)).unwrap() - direct).abs() < 1e-12);
        }
    }
}

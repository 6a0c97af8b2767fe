//! Invariant suites. Each check carries a signed margin: the slack by which
//! the property holds (negative when violated).

use serde::{Deserialize, Serialize};

use crate::bounds::{
    above_two_thirds_cap, h_of_gamma, k_of_gamma, m_of_gamma_c, neighbor_chain, p_of_gamma,
    xi_sandwich, xi_sandwich_general, DeltaEnvelope,
};
use crate::error::{Error, Result};
use crate::model::{perceived_utility, true_payoff, BiasParams, Portfolio};
use crate::montecarlo::{simulate, SimConfig};
use crate::overshoot::{
    global_overshoot_scan, interior_optimum, local_stationarity, open_grid, theta_threshold,
    K5_BOTTOM_THRESHOLD, K5_TOP_THRESHOLD,
};
use crate::precise::opt_increments;
use crate::solver::{oracle_solve_with, solve, solve_many, SolveConfig, SolveReport};
use crate::tables::unbiased_payoff;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Suite {
    Foc,
    Bounds,
    Oracle,
    Montecarlo,
    Overshoot,
    All,
}

impl Suite {
    pub fn name(self) -> &'static str {
        match self {
            Suite::Foc => "foc",
            Suite::Bounds => "bounds",
            Suite::Oracle => "oracle",
            Suite::Montecarlo => "montecarlo",
            Suite::Overshoot => "overshoot",
            Suite::All => "all",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub suite: String,
    pub name: String,
    pub pass: bool,
    pub margin: f64,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct VerifyConfig {
    pub solve: SolveConfig,
    pub seed: u64,
    pub samples: u64,
    pub oracle_resolution: f64,
}

impl Default for VerifyConfig {
    fn default() -> Self {
        Self {
            solve: SolveConfig::default(),
            seed: 42,
            samples: 1_000_000,
            oracle_resolution: 1e-3,
        }
    }
}

pub const FOC_GAMMAS: [f64; 6] = [0.01, 0.05, 0.1, 0.2, 0.5, 1.0];
pub const BOUND_GAMMAS: [f64; 8] = [0.01, 0.05, 0.1, 1.0 / 3.0, 0.5, 1.0, 2.0, 3.0];
pub const ORACLE_GAMMAS: [f64; 4] = [0.0, 0.1, 0.5, 1.0];

struct Recorder {
    suite: &'static str,
    checks: Vec<Check>,
}

impl Recorder {
    fn new(suite: Suite) -> Self {
        Self {
            suite: suite.name(),
            checks: Vec::new(),
        }
    }

    /// Records `value <= limit`.
    fn at_most(&mut self, name: String, value: f64, limit: f64) {
        self.push(
            name,
            value <= limit,
            limit - value,
            format!("{value:.3e} <= {limit:.3e}"),
        );
    }

    /// Records a strict `margin > 0`.
    fn positive(&mut self, name: String, margin: f64, detail: String) {
        self.push(name, margin > 0.0, margin, detail);
    }

    fn push(&mut self, name: String, pass: bool, margin: f64, detail: String) {
        self.checks.push(Check {
            suite: self.suite.to_string(),
            name,
            pass,
            margin,
            detail,
        });
    }

    /// A computation that failed outright counts as a violation.
    fn guard<T>(&mut self, name: &str, r: Result<T>) -> Option<T> {
        match r {
            Ok(v) => Some(v),
            Err(e) => {
                self.push(name.to_string(), false, f64::NEG_INFINITY, e.to_string());
                None
            }
        }
    }
}

pub fn run(suite: Suite, config: &VerifyConfig) -> Result<Vec<Check>> {
    config.solve.validate()?;
    Ok(match suite {
        Suite::Foc => foc(config),
        Suite::Bounds => bounds(config),
        Suite::Oracle => oracle(config),
        Suite::Montecarlo => montecarlo(config)?,
        Suite::Overshoot => overshoot(config),
        Suite::All => {
            let mut all = foc(config);
            all.extend(bounds(config));
            all.extend(oracle(config));
            all.extend(montecarlo(config)?);
            all.extend(overshoot(config));
            all
        }
    })
}

pub fn all_pass(checks: &[Check]) -> bool {
    checks.iter().all(|c| c.pass)
}

fn bias(gamma: f64) -> BiasParams {
    BiasParams::from_gamma(gamma).expect("suite biases are nonnegative")
}

fn sweep(
    gamma: f64,
    ks: impl Iterator<Item = usize>,
    cfg: &SolveConfig,
) -> Result<Vec<SolveReport>> {
    solve_many(&ks.collect::<Vec<_>>(), &bias(gamma), cfg)
}

/// `max_i |Delta_{i+1} - Delta_i + gamma (2 x_i - 3 x_i^2)|` over interior schools.
pub fn gap_law_residual(report: &SolveReport, gamma: f64) -> f64 {
    let (x, d) = (report.portfolio.schools(), &report.gaps.deltas);
    (0..x.len().saturating_sub(1))
        .map(|i| (d[i + 1] - d[i] + gamma * (2.0 * x[i] - 3.0 * x[i] * x[i])).abs())
        .fold(0.0, f64::max)
}

/// Smallest signed slack of the gap-direction law: gaps grow across schools
/// above 2/3 and shrink across schools below.
pub fn gap_direction_margin(report: &SolveReport) -> f64 {
    let (x, d) = (report.portfolio.schools(), &report.gaps.deltas);
    (0..x.len().saturating_sub(1))
        .map(|i| (d[i + 1] - d[i]) * (x[i] - 2.0 / 3.0).signum())
        .fold(f64::INFINITY, f64::min)
}

fn foc(config: &VerifyConfig) -> Vec<Check> {
    let cfg = &config.solve;
    let mut rec = Recorder::new(Suite::Foc);
    for gamma in FOC_GAMMAS {
        let Some(reports) = rec.guard(&format!("solve gamma={gamma}"), sweep(gamma, 1..=25, cfg))
        else {
            continue;
        };
        let worst = reports.iter().map(|r| r.max_residual()).fold(0.0, f64::max);
        rec.at_most(
            format!("residuals gamma={gamma}"),
            worst,
            10.0 * cfg.boundary_tolerance,
        );
        let worst = reports
            .iter()
            .map(|r| gap_law_residual(r, gamma))
            .fold(0.0, f64::max);
        rec.at_most(format!("gap law gamma={gamma}"), worst, 1e-9);
        let m = reports
            .iter()
            .map(gap_direction_margin)
            .fold(f64::INFINITY, f64::min);
        rec.positive(
            format!("gap direction gamma={gamma}"),
            m,
            format!("min slack {m:.3e}"),
        );
        opt_increasing(&mut rec, gamma, 25, cfg);
    }

    if let Some(reports) = rec.guard("solve gamma=0", sweep(0.0, 1..=100, cfg)) {
        let mut dev: f64 = 0.0;
        let mut pay: f64 = 0.0;
        for (r, k) in reports.iter().zip(1usize..) {
            for (i, &x) in r.portfolio.schools().iter().enumerate() {
                dev = dev.max((x - (k - i) as f64 / (k + 1) as f64).abs());
            }
            pay = pay.max((r.payoff - unbiased_payoff(k)).abs());
        }
        rec.at_most("equal spacing k<=100".into(), dev, 1e-10);
        rec.at_most("unbiased payoff k<=100".into(), pay, 1e-12);
    }

    if let Some(reports) = rec.guard("solve gamma=1", sweep(1.0, 3..=6, cfg)) {
        let top6 = reports[3].portfolio.top();
        let dev = reports
            .iter()
            .map(|r| (r.portfolio.top() - top6).abs())
            .fold(0.0, f64::max);
        rec.at_most("top school freezes gamma=1 k=3..6".into(), dev, 1e-3);
    }
    rec.checks
}

/// `OPT(k+1) > OPT(k)` for `k < k_max`, with increments taken from
/// double-double refinements since they fall far below `f64` resolution.
fn opt_increasing(rec: &mut Recorder, gamma: f64, k_max: usize, cfg: &SolveConfig) {
    let name = format!("OPT(k) increasing k<={k_max} gamma={gamma:.6}");
    if let Some(inc) = rec.guard(&name, opt_increments(k_max, &bias(gamma), cfg)) {
        let (k, step) = inc
            .iter()
            .enumerate()
            .min_by(|a, b| a.1.total_cmp(b.1))
            .map(|(j, &d)| (j + 1, d))
            .expect("k_max >= 2");
        rec.positive(
            name,
            step,
            format!("smallest increment {step:.3e} at k={k}"),
        );
    }
}

fn count_above(xs: &[f64], c: f64) -> usize {
    xs.iter().filter(|&&x| x > c).count()
}

fn bounds(config: &VerifyConfig) -> Vec<Check> {
    let cfg = &config.solve;
    let mut rec = Recorder::new(Suite::Bounds);
    for gamma in BOUND_GAMMAS {
        let tag = format!("gamma={gamma:.6}");
        let Some(reports) = rec.guard(&format!("solve {tag}"), sweep(gamma, 1..=100, cfg)) else {
            continue;
        };
        let small = &reports[1..25]; // k = 2..=25

        let h = h_of_gamma(gamma).expect("positive gamma");
        let x2 = small
            .iter()
            .map(|r| r.portfolio.schools()[1])
            .fold(f64::NEG_INFINITY, f64::max);
        rec.at_most(format!("x2 <= h {tag}"), x2, h);

        let cap = above_two_thirds_cap(gamma).expect("positive gamma").ceil();
        let n = small
            .iter()
            .map(|r| count_above(r.portfolio.schools(), 2.0 / 3.0))
            .max()
            .unwrap_or(0);
        rec.at_most(format!("#above 2/3 <= ceil(cap) {tag}"), n as f64, cap);

        for c in [0.1, 0.3, 0.5] {
            let m = m_of_gamma_c(gamma, c).expect("c in range");
            let n = small
                .iter()
                .map(|r| count_above(r.portfolio.schools(), c))
                .max()
                .unwrap_or(0);
            rec.at_most(format!("#above {c} <= m {tag}"), n as f64, m);
        }

        let mut slack = f64::INFINITY;
        let mut exact: f64 = 0.0;
        for r in small {
            let k = r.portfolio.k();
            let (lo, hi) = xi_sandwich(k, gamma).expect("valid k");
            let (glo, ghi) = xi_sandwich_general(k, gamma, &DeltaEnvelope::universal(k))
                .expect("valid envelope");
            for (i, &x) in r.portfolio.schools().iter().enumerate() {
                slack = slack.min(x - lo[i]).min(hi[i] - x);
                exact = exact
                    .max((lo[i] - glo[i]).abs())
                    .max((hi[i] - ghi[i]).abs());
            }
        }
        rec.push(
            format!("sandwich contains x_i {tag}"),
            slack >= 0.0,
            slack,
            format!("min slack {slack:.3e}"),
        );
        rec.at_most(
            format!("general bound with universal envelope {tag}"),
            exact,
            1e-12,
        );

        opt_increasing(&mut rec, gamma, 25, cfg);

        let p = p_of_gamma(gamma).expect("positive gamma").p;
        let best = reports
            .iter()
            .map(|r| r.payoff)
            .fold(f64::NEG_INFINITY, f64::max);
        rec.at_most(format!("payoff <= p(gamma) for k<=100 {tag}"), best, p);
        let kg = k_of_gamma(gamma).expect("positive gamma");
        let first = (kg.floor() as usize + 1).max(1);
        let beat = (first..=10_000)
            .map(|k| unbiased_payoff(k) - p)
            .fold(f64::INFINITY, f64::min);
        rec.positive(
            format!("rational beats p(gamma) for k>k(gamma) {tag}"),
            beat,
            format!("k(gamma)={kg:.4}, min slack {beat:.3e}"),
        );
    }

    // neighbor chain from x_0 = 1 brackets the solution
    let (gamma, k) = (0.01, 5);
    if let Some(r) = rec.guard("solve gamma=0.01 k=5", solve(k, &bias(gamma), cfg)) {
        let (lo, hi) =
            neighbor_chain(k, gamma, &DeltaEnvelope::universal(k)).expect("valid envelope");
        let slack = r
            .portfolio
            .schools()
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - lo[i]).min(hi[i] - x))
            .fold(f64::INFINITY, f64::min);
        rec.push(
            "neighbor chain contains x_i gamma=0.01 k=5".into(),
            slack >= 0.0,
            slack,
            format!("min slack {slack:.3e}"),
        );
    }

    // convergence to the rational spacing as gamma shrinks
    let mut prev = f64::INFINITY;
    for gamma in [1e-2, 1e-3, 1e-4] {
        let Some(r) = rec.guard("solve k=5", solve(5, &bias(gamma), cfg)) else {
            continue;
        };
        let dev = r
            .portfolio
            .schools()
            .iter()
            .enumerate()
            .map(|(i, &x)| (x - (5 - i) as f64 / 6.0).abs())
            .fold(0.0, f64::max);
        rec.at_most(
            format!("k=5 deviation within 4.5 gamma gamma={gamma}"),
            dev,
            4.5 * gamma,
        );
        rec.positive(
            format!("k=5 deviation shrinks gamma={gamma}"),
            prev - dev,
            format!("{dev:.3e} < {prev:.3e}"),
        );
        prev = dev;
    }
    rec.checks
}

fn oracle(config: &VerifyConfig) -> Vec<Check> {
    let cfg = &config.solve;
    let res = config.oracle_resolution;
    let mut rec = Recorder::new(Suite::Oracle);
    for gamma in ORACLE_GAMMAS {
        for k in 1..=3 {
            let tag = format!("k={k} gamma={gamma}");
            let Some(s) = rec.guard(&format!("solve {tag}"), solve(k, &bias(gamma), cfg)) else {
                continue;
            };
            let Some(o) = rec.guard(
                &format!("oracle {tag}"),
                oracle_solve_with(k, &bias(gamma), res, cfg.exec),
            ) else {
                continue;
            };
            let dx = s
                .portfolio
                .schools()
                .iter()
                .zip(o.portfolio.schools())
                .map(|(a, b)| (a - b).abs())
                .fold(0.0, f64::max);
            rec.at_most(format!("coordinates {tag}"), dx, 2.0 * res);
            rec.at_most(
                format!("perceived {tag}"),
                (s.perceived - o.perceived).abs(),
                1e-5,
            );
            // the grid optimum can never beat the continuous one
            rec.at_most(
                format!("solver not beaten {tag}"),
                o.perceived,
                s.perceived + 1e-12,
            );
        }
    }
    rec.checks
}

/// `|a - b| <= 3 se`, recorded with margin `3 se - |a - b|`.
fn within_3se(rec: &mut Recorder, name: String, a: f64, b: f64, se: f64) {
    let d = (a - b).abs();
    rec.push(
        name,
        d <= 3.0 * se,
        3.0 * se - d,
        format!("|{a:.6} - {b:.6}| = {d:.2e}, se {se:.2e}"),
    );
}

fn montecarlo(config: &VerifyConfig) -> Result<Vec<Check>> {
    if config.samples < 2 {
        return Err(Error::domain("montecarlo suite needs at least 2 samples"));
    }
    let sim = SimConfig::new(config.samples, config.seed).with_exec(config.solve.exec);
    let mut rec = Recorder::new(Suite::Montecarlo);

    let half = Portfolio::new(vec![0.5])?;
    if let Some(r) = rec.guard(
        "simulate [0.5]",
        simulate(&half, &BiasParams::rational(), &sim),
    ) {
        within_3se(
            &mut rec,
            "payoff [0.5] gamma=0".into(),
            r.mean_payoff,
            0.25,
            r.stderr_payoff,
        );
    }
    let third = Portfolio::new(vec![1.0 / 3.0])?;
    let b = BiasParams::new(1.0, 2.0)?;
    if let Some(r) = rec.guard("simulate [1/3]", simulate(&third, &b, &sim)) {
        within_3se(
            &mut rec,
            "perceived [1/3] gamma=1".into(),
            r.mean_perceived,
            4.0 / 27.0,
            r.stderr_perceived,
        );
    }

    let Some(report) = rec.guard("solve gamma=0.1 k=5", solve(5, &bias(0.1), &config.solve)) else {
        return Ok(rec.checks);
    };
    let port = &report.portfolio;
    let payoff = true_payoff(port);
    let mut runs = Vec::new();
    for (tau, lambda) in [(0.1, 2.0), (0.05, 3.0), (0.2, 1.5)] {
        let b = BiasParams::new(tau, lambda)?;
        let tag = format!("tau={tau} lambda={lambda}");
        let Some(r) = rec.guard(&format!("simulate {tag}"), simulate(port, &b, &sim)) else {
            continue;
        };
        within_3se(
            &mut rec,
            format!("payoff gamma=0.1 k=5 {tag}"),
            r.mean_payoff,
            payoff,
            r.stderr_payoff,
        );
        within_3se(
            &mut rec,
            format!("perceived gamma=0.1 k=5 {tag}"),
            r.mean_perceived,
            perceived_utility(port, &b),
            r.stderr_perceived,
        );
        runs.push((tag, r));
    }
    for i in 0..runs.len() {
        for j in i + 1..runs.len() {
            let (a, b) = (&runs[i].1, &runs[j].1);
            let se = (a.stderr_perceived.powi(2) + b.stderr_perceived.powi(2)).sqrt();
            within_3se(
                &mut rec,
                format!("collapse {} vs {}", runs[i].0, runs[j].0),
                a.mean_perceived,
                b.mean_perceived,
                se,
            );
        }
    }
    Ok(rec.checks)
}

/// Neighbor pairs and biases for the local overshoot grid (100 cases).
pub fn local_cases() -> Vec<(f64, f64, f64)> {
    let mut cases = Vec::with_capacity(100);
    for gamma in [0.02, 0.08, 0.15, 0.25] {
        for a in [0.0, 0.1, 0.2, 0.3, 0.4] {
            for b in [0.6, 0.7, 0.8, 0.9, 1.0] {
                cases.push((a, b, gamma));
            }
        }
    }
    cases
}

/// Maximizes the free-school terms on a uniform grid of `steps` cells.
pub fn local_brute_force(a: f64, b: f64, gamma: f64, steps: usize) -> f64 {
    let f = |x: f64| x * (b - x) + a * (x - a) - gamma * (1.0 - x) * x * x;
    let (mut best_x, mut best) = (a, f64::NEG_INFINITY);
    for j in 0..=steps {
        let x = a + (b - a) * j as f64 / steps as f64;
        let v = f(x);
        if v > best {
            best = v;
            best_x = x;
        }
    }
    best_x
}

fn overshoot(config: &VerifyConfig) -> Vec<Check> {
    let mut rec = Recorder::new(Suite::Overshoot);
    let mut stationarity: f64 = 0.0;
    let mut sign_ok = 0usize;
    let cases = local_cases();
    for &(a, b, gamma) in &cases {
        let Some(r) = rec.guard(
            &format!("interior a={a} b={b} gamma={gamma}"),
            interior_optimum(a, b, gamma),
        ) else {
            continue;
        };
        stationarity = stationarity.max(local_stationarity(r.x_star, a, b, gamma).abs());
        let lhs = (r.x_star - r.midpoint).signum();
        let rhs = (a + b - 4.0 / 3.0).signum();
        if lhs == rhs {
            sign_ok += 1;
        }
    }
    rec.at_most(
        format!("stationarity {} cases", cases.len()),
        stationarity,
        1e-10,
    );
    rec.push(
        format!("midpoint sign law {} cases", cases.len()),
        sign_ok == cases.len(),
        sign_ok as f64 - cases.len() as f64,
        format!("{sign_ok}/{} agree", cases.len()),
    );

    for &(a, b, gamma) in &[
        (0.5, 0.9, 0.1),
        (0.3, 0.9, 0.1),
        (0.0, 1.0, 0.25),
        (0.4, 0.6, 0.02),
    ] {
        if let Ok(r) = interior_optimum(a, b, gamma) {
            let brute = local_brute_force(a, b, gamma, ((b - a) * 1e6).round() as usize);
            rec.at_most(
                format!("brute force a={a} b={b} gamma={gamma}"),
                (brute - r.x_star).abs(),
                1e-5,
            );
        }
    }

    for gamma in [0.01, 0.1, 0.2] {
        match theta_threshold(0.5, gamma) {
            Ok(z) => rec.push(
                format!("z(1/2) = 4/3 gamma={gamma}"),
                z == 4.0 / 3.0,
                -(z - 4.0 / 3.0).abs(),
                format!("{z:.17}"),
            ),
            Err(e) => rec.push(
                format!("z(1/2) = 4/3 gamma={gamma}"),
                false,
                f64::NEG_INFINITY,
                e.to_string(),
            ),
        }
    }

    let top_grid = open_grid(K5_TOP_THRESHOLD, 20, false);
    if let Some(rows) = rec.guard(
        "k=5 top scan",
        global_overshoot_scan(5, &top_grid, &config.solve),
    ) {
        let m = rows
            .iter()
            .map(|r| r.top_excess)
            .fold(f64::INFINITY, f64::min);
        rec.positive(
            "k=5 x1 > 5/6 on (0, 0.0142912]".into(),
            m,
            format!("min excess {m:.3e}"),
        );
    }
    let bottom_grid = open_grid(K5_BOTTOM_THRESHOLD, 20, true);
    if let Some(rows) = rec.guard(
        "k=5 bottom scan",
        global_overshoot_scan(5, &bottom_grid, &config.solve),
    ) {
        let m = rows
            .iter()
            .map(|r| -r.bottom_excess)
            .fold(f64::INFINITY, f64::min);
        rec.positive(
            "k=5 x5 < 1/6 on (0, 1/216)".into(),
            m,
            format!("min shortfall {m:.3e}"),
        );
    }
    rec.checks
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn local_grid_has_100_valid_cases() {
        let cases = local_cases();
        assert_eq!(cases.len(), 100);
        assert!(cases
            .iter()
            .all(|&(a, b, g)| interior_optimum(a, b, g).is_ok()));
    }

    #[test]
    fn recorder_margins() {
        let mut rec = Recorder::new(Suite::Foc);
        rec.at_most("a".into(), 1.0, 2.0);
        rec.at_most("b".into(), 3.0, 2.0);
        assert!(rec.checks[0].pass && rec.checks[0].margin == 1.0);
        assert!(!rec.checks[1].pass && rec.checks[1].margin == -1.0);
        let bad: Result<()> = Err(Error::domain("boom"));
        assert!(rec.guard("c", bad).is_none());
        assert!(!all_pass(&rec.checks));
    }

    #[test]
    fn overshoot_suite_passes() {
        let checks = run(Suite::Overshoot, &VerifyConfig::default()).unwrap();
        for c in &checks {
            assert!(c.pass, "{c:?}");
        }
    }

    #[test]
    fn montecarlo_rejects_tiny_runs() {
        let cfg = VerifyConfig {
            samples: 1,
            ..VerifyConfig::default()
        };
        assert!(run(Suite::Montecarlo, &cfg).is_err());
    }
}

use std::collections::BTreeMap;

use anyhow::{bail, Result};
use gport_core::bounds::bounds_report;
use gport_core::figures::{self, Series};
use gport_core::model::{perceived_utility, true_payoff};
use gport_core::montecarlo::{simulate, SimConfig};
use gport_core::overshoot::{
    convergence_trace, global_overshoot_scan, interior_optimum_in, local_stationarity, open_grid,
    overshoot_profile, theta_band, theta_threshold, GammaRange, K5_TOP_THRESHOLD,
};
use gport_core::solver::{oracle_solve_with, solve};
use gport_core::tables::{freezing_table, payoff_table};
use gport_core::verify::{self, Suite, VerifyConfig};
use gport_core::BiasParams;

use crate::cli::*;
use crate::output::{sig9, Cell, Table};
use crate::settings::{Settings, DEFAULT_RESOLUTION, DEFAULT_SAMPLES, DEFAULT_STREAMS};

pub const FREEZING_GAMMAS: [f64; 3] = [1.0, 0.5, 0.1];
pub const PAYOFF_GAMMAS: [f64; 5] = [0.01, 0.05, 0.1, 0.2, 0.5];
pub const PAYOFF_KS: [usize; 14] = [1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 25, 50, 75, 100];
/// Largest `k` per bias in the freezing table.
const FREEZING_K_MAX: [(f64, usize); 3] = [(1.0, 6), (0.5, 8), (0.1, 14)];
const M_CURVE_GAMMAS: [f64; 4] = [0.05, 0.1, 0.5, 1.0];

pub struct Outcome {
    pub table: Table,
    pub params: BTreeMap<String, String>,
    /// Set by `verify` when some property failed.
    pub violated: bool,
}

impl Outcome {
    fn new(table: Table, params: Params) -> Self {
        Self {
            table,
            params: params.0,
            violated: false,
        }
    }
}

#[derive(Default)]
struct Params(BTreeMap<String, String>);

impl Params {
    fn set(&mut self, key: &str, value: impl ToString) -> &mut Self {
        self.0.insert(key.to_string(), value.to_string());
        self
    }

    fn real(&mut self, key: &str, value: f64) -> &mut Self {
        self.set(key, sig9(value))
    }

    fn reals(&mut self, key: &str, values: &[f64]) -> &mut Self {
        let joined = values
            .iter()
            .map(|v| sig9(*v))
            .collect::<Vec<_>>()
            .join(",");
        self.set(key, joined)
    }
}

fn bias_from(args: &BiasArgs, params: &mut Params) -> Result<BiasParams> {
    let bias = match (args.gamma, args.tau, args.lambda) {
        (Some(g), None, None) => BiasParams::from_gamma(g)?,
        (None, Some(t), Some(l)) => BiasParams::new(t, l)?,
        (None, None, None) => bail!("give either --gamma or both --tau and --lambda"),
        _ => bail!("--gamma cannot be combined with --tau/--lambda"),
    };
    params
        .real("tau", bias.tau())
        .real("lambda", bias.lambda())
        .real("gamma", bias.gamma());
    Ok(bias)
}

pub fn run(command: &Command, settings: &Settings) -> Result<Outcome> {
    match command {
        Command::Solve(a) => solve_cmd(a, settings),
        Command::Table(a) => table_cmd(a, settings),
        Command::Figure(a) => figure_cmd(a, settings),
        Command::Verify(a) => verify_cmd(a, settings),
        Command::Oracle(a) => oracle_cmd(a, settings),
        Command::Mc(a) => mc_cmd(a, settings),
        Command::Bounds(a) => bounds_cmd(a, settings),
        Command::Overshoot(a) => overshoot_cmd(a, settings),
    }
}

pub fn command_name(command: &Command) -> &'static str {
    match command {
        Command::Solve(_) => "solve",
        Command::Table(_) => "table",
        Command::Figure(_) => "figure",
        Command::Verify(_) => "verify",
        Command::Oracle(_) => "oracle",
        Command::Mc(_) => "mc",
        Command::Bounds(_) => "bounds",
        Command::Overshoot(_) => "overshoot",
    }
}

fn solve_cmd(a: &SolveArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    let bias = bias_from(&a.bias, &mut p)?;
    p.set("k", a.k);
    let r = solve(a.k, &bias, &s.solve)?;
    let mut t = Table::new(
        format!(
            "optimal portfolio, k = {}, gamma = {}",
            a.k,
            sig9(bias.gamma())
        ),
        &["index", "x", "delta", "foc_residual", "perceived", "payoff"],
    );
    t.note(format!("perceived utility  {}", sig9(r.perceived)));
    t.note(format!("true payoff        {}", sig9(r.payoff)));
    t.note(format!("max residual       {}", sig9(r.max_residual())));
    t.note(format!("boundary error     {}", sig9(r.boundary_error)));
    for (i, x) in r.portfolio.schools().iter().enumerate() {
        t.push(vec![
            (i + 1).into(),
            (*x).into(),
            r.gaps.deltas[i].into(),
            r.residuals[i].into(),
            r.perceived.into(),
            r.payoff.into(),
        ]);
    }
    Ok(Outcome::new(t, p))
}

fn table_cmd(a: &TableArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    match a.which {
        TableKind::Freezing => {
            let gammas = if a.gamma.is_empty() {
                FREEZING_GAMMAS.to_vec()
            } else {
                a.gamma.clone()
            };
            p.set("which", "freezing").reals("gamma", &gammas);
            if let Some(k) = a.k_max {
                p.set("k_max", k);
            }
            let mut t = Table::new(
                "optimal portfolio as k grows",
                &["gamma", "k", "index", "x"],
            );
            for &g in &gammas {
                let k_max = match a.k_max {
                    Some(k) => k,
                    None => FREEZING_K_MAX
                        .iter()
                        .find(|(fg, _)| *fg == g)
                        .map_or(10, |(_, k)| *k),
                };
                let ks: Vec<usize> = (1..=k_max).collect();
                for row in freezing_table(&[g], &ks, &s.solve)? {
                    for (i, x) in row.schools.iter().enumerate() {
                        t.push(vec![
                            row.gamma.into(),
                            row.k.into(),
                            (i + 1).into(),
                            (*x).into(),
                        ]);
                    }
                }
            }
            Ok(Outcome::new(t, p))
        }
        TableKind::Payoff => {
            let gammas = if a.gamma.is_empty() {
                PAYOFF_GAMMAS.to_vec()
            } else {
                a.gamma.clone()
            };
            let ks: Vec<usize> = match a.k_max {
                Some(k) => (1..=k).collect(),
                None => PAYOFF_KS.to_vec(),
            };
            p.set("which", "payoff").reals("gamma", &gammas);
            if let Some(k) = a.k_max {
                p.set("k_max", k);
            }
            let table = payoff_table(&gammas, &ks, &s.solve)?;
            let mut columns = vec!["k".to_string(), "unbiased".to_string()];
            columns.extend(gammas.iter().map(|g| format!("gamma_{}", sig9(*g))));
            let mut t = Table::with_columns("true payoff of the optimal portfolio", columns);
            for row in &table.rows {
                let mut cells: Vec<Cell> = vec![row.k.into(), row.unbiased.into()];
                cells.extend(row.payoffs.iter().map(|&v| Cell::from(v)));
                t.push(cells);
            }
            Ok(Outcome::new(t, p))
        }
    }
}

fn series_table(title: String, series: Series) -> Table {
    let mut t = Table::with_columns(title, series.columns);
    for row in series.rows {
        t.push(row.into_iter().map(Cell::from).collect());
    }
    t
}

fn single_gamma(gammas: &[f64], default: f64) -> Result<f64> {
    match gammas {
        [] => Ok(default),
        [g] => Ok(*g),
        _ => bail!("this figure takes a single --gamma"),
    }
}

fn figure_cmd(a: &FigureArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    let (title, series) = match a.which {
        FigureKind::PortfolioLine | FigureKind::Deltas => {
            let line = a.which == FigureKind::PortfolioLine;
            let k = a.k.unwrap_or(if line { 100 } else { 25 });
            let g = single_gamma(&a.gamma, 0.1)?;
            p.set("which", if line { "portfolio_line" } else { "deltas" })
                .set("k", k)
                .real("gamma", g);
            let series = if line {
                figures::portfolio_line(k, g, &s.solve)?
            } else {
                figures::deltas(k, g, &s.solve)?
            };
            (format!("k = {k}, gamma = {}", sig9(g)), series)
        }
        FigureKind::HCurve => {
            let gmax = a.gamma_max.unwrap_or(3.0);
            let points = a.points.unwrap_or(300);
            p.set("which", "h_curve")
                .real("gamma_max", gmax)
                .set("points", points);
            (
                "bound on the second school".into(),
                figures::h_curve(gmax, points)?,
            )
        }
        FigureKind::MCurve => {
            let gammas = if a.gamma.is_empty() {
                M_CURVE_GAMMAS.to_vec()
            } else {
                a.gamma.clone()
            };
            let points = a.points.unwrap_or(100);
            p.set("which", "m_curve")
                .reals("gamma", &gammas)
                .set("points", points);
            (
                "bound on the number of schools above c".into(),
                figures::m_curve(&gammas, points)?,
            )
        }
        FigureKind::X1VsGamma => {
            let k = a.k.unwrap_or(5);
            let gmax = a.gamma_max.unwrap_or(0.05);
            let points = a.points.unwrap_or(50);
            p.set("which", "x1_vs_gamma")
                .set("k", k)
                .real("gamma_max", gmax)
                .set("points", points);
            (
                format!("top school against bias, k = {k}"),
                figures::x1_vs_gamma(k, gmax, points, &s.solve)?,
            )
        }
    };
    Ok(Outcome::new(series_table(title, series), p))
}

fn verify_cmd(a: &VerifyArgs, s: &Settings) -> Result<Outcome> {
    let suite = match a.suite {
        SuiteArg::Foc => Suite::Foc,
        SuiteArg::Bounds => Suite::Bounds,
        SuiteArg::Oracle => Suite::Oracle,
        SuiteArg::Montecarlo => Suite::Montecarlo,
        SuiteArg::Overshoot => Suite::Overshoot,
        SuiteArg::All => Suite::All,
    };
    let cfg = VerifyConfig {
        solve: s.solve,
        seed: s.seed,
        samples: a.samples.or(s.samples).unwrap_or(DEFAULT_SAMPLES),
        oracle_resolution: a.resolution.or(s.resolution).unwrap_or(DEFAULT_RESOLUTION),
    };
    let mut p = Params::default();
    p.set("suite", suite.name())
        .set("samples", cfg.samples)
        .real("resolution", cfg.oracle_resolution);
    let checks = verify::run(suite, &cfg)?;
    let failed = checks.iter().filter(|c| !c.pass).count();
    let mut t = Table::new(
        format!(
            "verify {}: {} checks, {} failed",
            suite.name(),
            checks.len(),
            failed
        ),
        &["suite", "check", "pass", "margin", "detail"],
    );
    for c in &checks {
        t.push(vec![
            c.suite.clone().into(),
            c.name.clone().into(),
            c.pass.into(),
            c.margin.into(),
            c.detail.clone().into(),
        ]);
    }
    let mut out = Outcome::new(t, p);
    out.violated = failed > 0;
    Ok(out)
}

fn oracle_cmd(a: &OracleArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    let bias = bias_from(&a.bias, &mut p)?;
    let res = a.resolution.or(s.resolution).unwrap_or(DEFAULT_RESOLUTION);
    p.set("k", a.k).real("resolution", res);
    let o = oracle_solve_with(a.k, &bias, res, s.solve.exec)?;
    let r = solve(a.k, &bias, &s.solve)?;
    let mut t = Table::new(
        format!(
            "grid oracle vs solver, k = {}, gamma = {}",
            a.k,
            sig9(bias.gamma())
        ),
        &[
            "index",
            "oracle_x",
            "solver_x",
            "difference",
            "oracle_perceived",
            "solver_perceived",
        ],
    );
    t.note(format!(
        "perceived utility gap  {}",
        sig9(r.perceived - o.perceived)
    ));
    for (i, (x, y)) in o
        .portfolio
        .schools()
        .iter()
        .zip(r.portfolio.schools())
        .enumerate()
    {
        t.push(vec![
            (i + 1).into(),
            (*x).into(),
            (*y).into(),
            (y - x).into(),
            o.perceived.into(),
            r.perceived.into(),
        ]);
    }
    Ok(Outcome::new(t, p))
}

fn mc_cmd(a: &McArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    let bias = bias_from(&a.bias, &mut p)?;
    let samples = a.samples.or(s.samples).unwrap_or(DEFAULT_SAMPLES);
    let streams = a.streams.or(s.streams).unwrap_or(DEFAULT_STREAMS);
    p.set("k", a.k)
        .set("samples", samples)
        .set("streams", streams);
    let r = solve(a.k, &bias, &s.solve)?;
    let cfg = SimConfig::new(samples, s.seed)
        .with_streams(streams)
        .with_exec(s.solve.exec);
    let sim = simulate(&r.portfolio, &bias, &cfg)?;
    let exact_perceived = perceived_utility(&r.portfolio, &bias);
    let exact_payoff = true_payoff(&r.portfolio);
    let mut t = Table::new(
        format!(
            "Monte Carlo, k = {}, tau = {}, lambda = {}, {} samples",
            a.k,
            sig9(bias.tau()),
            sig9(bias.lambda()),
            samples
        ),
        &["quantity", "estimate", "stderr", "exact", "z"],
    );
    for (name, est, se, exact) in [
        ("payoff", sim.mean_payoff, sim.stderr_payoff, exact_payoff),
        (
            "perceived",
            sim.mean_perceived,
            sim.stderr_perceived,
            exact_perceived,
        ),
    ] {
        let z = if se > 0.0 { (est - exact) / se } else { 0.0 };
        t.push(vec![
            name.into(),
            est.into(),
            se.into(),
            exact.into(),
            z.into(),
        ]);
    }
    Ok(Outcome::new(t, p))
}

fn bounds_cmd(a: &BoundsArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    p.real("gamma", a.gamma).set("k", a.k).real("c", a.c);
    let b = bounds_report(a.gamma, a.k, a.c)?;
    let r = solve(a.k, &BiasParams::from_gamma(a.gamma)?, &s.solve)?;
    let xs = r.portfolio.schools();
    let count = |c: f64| xs.iter().filter(|&&x| x > c).count();
    let mut t = Table::new(
        format!(
            "bounds, k = {}, gamma = {}, c = {}",
            a.k,
            sig9(a.gamma),
            sig9(a.c)
        ),
        &["quantity", "index", "value"],
    );
    let mut scalar = |name: &str, v: Cell| t.push(vec![name.into(), Cell::Empty, v]);
    scalar("h_gamma", b.h_gamma.into());
    scalar("x2", xs.get(1).map_or(Cell::Empty, |&x| x.into()));
    scalar("above_two_thirds_cap", b.above_two_thirds_cap.into());
    scalar("above_two_thirds_count", count(2.0 / 3.0).into());
    scalar("m_gamma_c", b.m_gamma_c.into());
    scalar("above_c_count", count(a.c).into());
    scalar("p_gamma", b.p_gamma.into());
    scalar("c_star", b.c_star.into());
    scalar("k_gamma", b.k_gamma.into());
    scalar("payoff", r.payoff.into());
    for (i, x) in xs.iter().enumerate() {
        for (name, v) in [
            ("xi_lower", b.xi_lower[i]),
            ("x", *x),
            ("xi_upper", b.xi_upper[i]),
        ] {
            t.push(vec![name.into(), (i + 1).into(), v.into()]);
        }
    }
    Ok(Outcome::new(t, p))
}

fn need<T: Copy>(v: Option<T>, flag: &str, mode: &str) -> Result<T> {
    match v {
        Some(v) => Ok(v),
        None => bail!("--mode {mode} needs --{flag}"),
    }
}

fn overshoot_cmd(a: &OvershootArgs, s: &Settings) -> Result<Outcome> {
    let mut p = Params::default();
    let table = match a.mode {
        OvershootMode::Local => {
            let (x_a, x_b, g) = (
                need(a.a, "a", "local")?,
                need(a.b, "b", "local")?,
                need(a.gamma, "gamma", "local")?,
            );
            let range = if a.extended {
                GammaRange::Extended
            } else {
                GammaRange::Proved
            };
            p.set("mode", "local")
                .real("a", x_a)
                .real("b", x_b)
                .real("gamma", g)
                .set("extended", a.extended);
            let r = interior_optimum_in(x_a, x_b, g, range)?;
            let mut t = Table::new(
                "best school between fixed neighbours",
                &[
                    "a",
                    "b",
                    "gamma",
                    "x_star",
                    "midpoint",
                    "overshoots",
                    "stationarity",
                ],
            );
            t.push(vec![
                x_a.into(),
                x_b.into(),
                g.into(),
                r.x_star.into(),
                r.midpoint.into(),
                r.overshoots.into(),
                local_stationarity(r.x_star, x_a, x_b, g).into(),
            ]);
            t
        }
        OvershootMode::Theta => {
            let (theta, g) = (
                need(a.theta, "theta", "theta")?,
                need(a.gamma, "gamma", "theta")?,
            );
            p.set("mode", "theta").real("theta", theta).real("gamma", g);
            let (lo, hi) = theta_band(g)?;
            let z = theta_threshold(theta, g)?;
            let mut t = Table::new(
                "threshold on a + b",
                &["theta", "gamma", "theta_min", "theta_max", "threshold"],
            );
            t.push(vec![theta.into(), g.into(), lo.into(), hi.into(), z.into()]);
            t
        }
        OvershootMode::Global => {
            let k = a.k.unwrap_or(5);
            let gmax = a.gamma_max.unwrap_or(K5_TOP_THRESHOLD);
            let points = a.points.unwrap_or(20);
            p.set("mode", "global")
                .set("k", k)
                .real("gamma_max", gmax)
                .set("points", points);
            let rows = global_overshoot_scan(k, &open_grid(gmax, points, false), &s.solve)?;
            let mut t = Table::new(
                format!("ends of the k = {k} portfolio against rational spacing"),
                &[
                    "gamma",
                    "k",
                    "x_top",
                    "x_bottom",
                    "top_excess",
                    "bottom_excess",
                    "top_overshoots",
                    "bottom_undershoots",
                ],
            );
            for r in rows {
                t.push(vec![
                    r.gamma.into(),
                    r.k.into(),
                    r.x_top.into(),
                    r.x_bottom.into(),
                    r.top_excess.into(),
                    r.bottom_excess.into(),
                    r.top_overshoots.into(),
                    r.bottom_undershoots.into(),
                ]);
            }
            t
        }
        OvershootMode::Trace => {
            let k = a.k.unwrap_or(5);
            let i = a.index.unwrap_or(1);
            let gmax = a.gamma_max.unwrap_or(0.5);
            let points = a.points.unwrap_or(50);
            p.set("mode", "trace")
                .set("k", k)
                .set("index", i)
                .real("gamma_max", gmax)
                .set("points", points);
            if !(gmax > 0.0) || points == 0 {
                bail!("trace needs a positive --gamma-max and at least one point");
            }
            let grid: Vec<f64> = (0..=points)
                .map(|j| gmax * (points - j) as f64 / points as f64)
                .collect();
            let xs = convergence_trace(k, i, &grid, &s.solve)?;
            let rational = (k + 1 - i) as f64 / (k + 1) as f64;
            let mut t = Table::new(
                format!("school {i} of {k} as the bias vanishes"),
                &["gamma", "x", "rational"],
            );
            for (g, x) in grid.iter().zip(xs) {
                t.push(vec![(*g).into(), x.into(), rational.into()]);
            }
            t
        }
        OvershootMode::Profile => {
            let k = a.k.unwrap_or(25);
            let g = a.gamma.unwrap_or(0.1);
            p.set("mode", "profile").set("k", k).real("gamma", g);
            let mut t = Table::new(
                format!(
                    "schools against rational spacing, k = {k}, gamma = {}",
                    sig9(g)
                ),
                &["index", "x", "rational", "excess"],
            );
            t.note("exploratory, no property is asserted");
            for e in overshoot_profile(k, g, &s.solve)? {
                t.push(vec![
                    e.index.into(),
                    e.x.into(),
                    e.rational.into(),
                    e.excess.into(),
                ]);
            }
            t
        }
    };
    Ok(Outcome::new(table, p))
}

#[cfg(test)]
mod tests {
    use clap::Parser;
    use gport_core::bounds::above_two_thirds_cap;

    use super::*;
    use crate::output::Format;
    use crate::settings::FileConfig;

    fn exec(args: &[&str]) -> Result<Outcome> {
        let cli = Cli::try_parse_from(std::iter::once("gport").chain(args.iter().copied()))?;
        let settings = Settings::resolve(&cli.global, &FileConfig::default())?;
        run(&cli.command, &settings)
    }

    fn column(t: &Table, name: &str) -> Vec<f64> {
        let j = t.columns.iter().position(|c| c == name).unwrap();
        t.rows
            .iter()
            .map(|r| match &r[j] {
                Cell::Real(v) => *v,
                Cell::Int(v) => *v as f64,
                other => panic!("{other:?}"),
            })
            .collect()
    }

    #[test]
    fn solve_examples() {
        let t = exec(&["solve", "--gamma", "1", "--k", "2"]).unwrap().table;
        let x = column(&t, "x");
        assert!(
            (x[0] - 0.3916).abs() < 1e-4 && (x[1] - 0.1064).abs() < 1e-4,
            "{x:?}"
        );

        let t = exec(&["solve", "--gamma", "0", "--k", "4"]).unwrap().table;
        for (x, want) in column(&t, "x").iter().zip([0.8, 0.6, 0.4, 0.2]) {
            assert!((x - want).abs() < 1e-12);
        }

        let out = exec(&["solve", "--gamma", "0.1", "--k", "100", "--format", "csv"]).unwrap();
        let csv = out.table.render(Format::Csv);
        assert_eq!(csv.lines().count(), 101);
        let above = column(&out.table, "x")
            .iter()
            .filter(|&&x| x > 2.0 / 3.0)
            .count();
        assert!(above <= above_two_thirds_cap(0.1).unwrap().ceil() as usize);
    }

    #[test]
    fn tau_lambda_is_the_same_problem() {
        let a = exec(&["solve", "--gamma", "0.2", "--k", "6"])
            .unwrap()
            .table;
        let b = exec(&["solve", "--tau", "0.1", "--lambda", "3", "--k", "6"])
            .unwrap()
            .table;
        assert_eq!(column(&a, "x"), column(&b, "x"));
        assert!(exec(&["solve", "--k", "3"]).is_err());
        assert!(exec(&["solve", "--gamma", "-1", "--k", "3"]).is_err());
    }

    #[test]
    fn table_examples() {
        let t = exec(&[
            "table", "--which", "payoff", "--k-max", "10", "--gamma", "0.05",
        ])
        .unwrap()
        .table;
        assert_eq!(t.columns, ["k", "unbiased", "gamma_0.05"]);
        let printed = [
            0.249958, 0.333237, 0.374787, 0.399586, 0.415945, 0.427412, 0.435752, 0.441937,
            0.446553, 0.449979,
        ];
        for (v, p) in column(&t, "gamma_0.05").iter().zip(printed) {
            assert!((v - p).abs() <= 1e-5, "{v} vs {p}");
        }

        let t = exec(&[
            "table", "--which", "freezing", "--gamma", "0.5", "--k-max", "8",
        ])
        .unwrap()
        .table;
        assert_eq!(t.rows.len(), (1..=8).sum::<usize>());
        let top_of_8 = t
            .rows
            .iter()
            .find(|r| r[1] == Cell::Int(8) && r[2] == Cell::Int(1))
            .unwrap();
        assert!(matches!(top_of_8[3], Cell::Real(x) if (x - 0.6275).abs() < 5e-4));

        let t = exec(&["table", "--which", "payoff", "--k-max", "1", "--gamma", "0"])
            .unwrap()
            .table;
        assert_eq!(t.rows.len(), 1);
        assert_eq!(column(&t, "gamma_0"), [0.25]);
        assert_eq!(column(&t, "unbiased"), [0.25]);
    }

    #[test]
    fn default_tables_cover_the_standard_sizes() {
        let t = exec(&["table", "--which", "payoff"]).unwrap().table;
        assert_eq!(column(&t, "k"), PAYOFF_KS.map(|k| k as f64));
        assert_eq!(t.columns.len(), 2 + PAYOFF_GAMMAS.len());
        let t = exec(&["table", "--which", "freezing"]).unwrap().table;
        let expected: usize = FREEZING_K_MAX.iter().map(|(_, k)| k * (k + 1) / 2).sum();
        assert_eq!(t.rows.len(), expected);
    }

    #[test]
    fn figure_examples() {
        let t = exec(&["figure", "--which", "deltas", "--gamma", "0.1", "--k", "25"])
            .unwrap()
            .table;
        let (x, d) = (column(&t, "x"), column(&t, "delta"));
        let peak = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert!(d[..=peak].windows(2).all(|w| w[1] > w[0]));
        assert!(d[peak..].windows(2).all(|w| w[1] < w[0]));
        // the gap after school i grows while x_i > 2/3
        assert!(
            x[peak - 1] > 2.0 / 3.0 && x[peak] < 2.0 / 3.0,
            "{:?}",
            &x[peak - 1..=peak]
        );

        let t = exec(&[
            "figure",
            "--which",
            "portfolio_line",
            "--gamma",
            "0",
            "--k",
            "100",
        ])
        .unwrap()
        .table;
        for (i, x) in column(&t, "x").iter().enumerate() {
            assert!((x - (100 - i) as f64 / 101.0).abs() < 1e-12);
        }

        let t = exec(&[
            "figure",
            "--which",
            "h_curve",
            "--gamma-max",
            "3",
            "--points",
            "600",
        ])
        .unwrap()
        .table;
        let (g, h) = (column(&t, "gamma"), column(&t, "h"));
        let at = |v: f64| h[g.iter().position(|&x| (x - v).abs() < 1e-12).unwrap()];
        // one point on each piece, and no jump at either breakpoint
        assert!((at(0.25) - 0.75).abs() < 1e-12);
        assert!((at(1.0) - 1.0 / 3.0).abs() < 1e-12);
        assert!((at(3.0) - (7.0 + 13f64.sqrt()) / 18.0).abs() < 1e-12);
        for b in [0.5, 2.0] {
            assert!((at(b) - 0.5).abs() < 1e-12);
            assert!((at(b - 0.005) - at(b)).abs() < 0.01 && (at(b + 0.005) - at(b)).abs() < 0.01);
        }

        let t = exec(&["figure", "--which", "m_curve", "--points", "10"])
            .unwrap()
            .table;
        assert_eq!(t.rows.len(), 10 * M_CURVE_GAMMAS.len());
        let t = exec(&[
            "figure",
            "--which",
            "x1_vs_gamma",
            "--gamma-max",
            "0.014",
            "--points",
            "10",
        ])
        .unwrap()
        .table;
        assert!(column(&t, "x1").iter().all(|&x| x > 5.0 / 6.0));
        assert!(exec(&["figure", "--which", "deltas", "--gamma", "0.1,0.2"]).is_err());
    }

    #[test]
    fn verify_reports_each_check() {
        let out = exec(&["verify", "--suite", "oracle"]).unwrap();
        assert!(!out.violated);
        assert!(out.table.rows.iter().all(|r| r[2] == Cell::Bool(true)));
        assert_eq!(out.params["suite"], "oracle");
    }

    #[test]
    fn oracle_and_mc() {
        let t = exec(&[
            "oracle",
            "--gamma",
            "0.5",
            "--k",
            "2",
            "--resolution",
            "0.001",
        ])
        .unwrap()
        .table;
        let x = column(&t, "oracle_x");
        assert!(
            (x[0] - 0.559).abs() < 1e-12 && (x[1] - 0.208).abs() < 1e-12,
            "{x:?}"
        );
        let out = exec(&["mc", "--gamma", "0.1", "--k", "5", "--samples", "200000"]).unwrap();
        let z = column(&out.table, "z");
        assert!(z.iter().all(|z| z.abs() < 4.0), "{z:?}");
        assert_eq!(out.params["samples"], "200000");
        assert!(exec(&["mc", "--gamma", "0.1", "--k", "5", "--samples", "0"]).is_err());
    }

    #[test]
    fn bounds_rows_hold() {
        let t = exec(&["bounds", "--gamma", "0.5", "--k", "12", "--c", "0.3"])
            .unwrap()
            .table;
        let get = |name: &str| {
            t.rows
                .iter()
                .filter(|r| r[0] == Cell::Text(name.into()))
                .map(|r| match r[2] {
                    Cell::Real(v) => v,
                    Cell::Int(v) => v as f64,
                    _ => f64::NAN,
                })
                .collect::<Vec<_>>()
        };
        assert!(get("x2")[0] <= get("h_gamma")[0]);
        assert!(get("above_c_count")[0] <= get("m_gamma_c")[0]);
        assert!(get("payoff")[0] <= get("p_gamma")[0]);
        let (lo, x, hi) = (get("xi_lower"), get("x"), get("xi_upper"));
        assert_eq!(x.len(), 12);
        assert!((0..12).all(|i| lo[i] <= x[i] && x[i] <= hi[i]));
    }

    #[test]
    fn overshoot_modes() {
        let t = exec(&[
            "overshoot",
            "--mode",
            "theta",
            "--theta",
            "0.5",
            "--gamma",
            "0.1",
        ])
        .unwrap()
        .table;
        assert_eq!(column(&t, "threshold"), [4.0 / 3.0]);
        let t = exec(&[
            "overshoot",
            "--mode",
            "local",
            "--a",
            "0.4",
            "--b",
            "1",
            "--gamma",
            "0.1",
        ])
        .unwrap()
        .table;
        assert_eq!(t.rows[0][5], Cell::Bool(true));
        assert!(exec(&["overshoot", "--mode", "local", "--a", "0.4"]).is_err());
        assert!(exec(&[
            "overshoot",
            "--mode",
            "local",
            "--a",
            "0.4",
            "--b",
            "1",
            "--gamma",
            "0.4"
        ])
        .is_err());
        assert!(exec(&[
            "overshoot",
            "--mode",
            "local",
            "--a",
            "0.4",
            "--b",
            "1",
            "--gamma",
            "0.4",
            "--extended"
        ])
        .is_ok());
        let t = exec(&["overshoot", "--mode", "global"]).unwrap().table;
        assert_eq!(t.rows.len(), 20);
        assert!(t.rows.iter().all(|r| r[6] == Cell::Bool(true)));
        let t = exec(&["overshoot", "--mode", "trace", "--points", "10"])
            .unwrap()
            .table;
        assert_eq!(column(&t, "gamma").last(), Some(&0.0));
        assert!((column(&t, "x").last().unwrap() - 5.0 / 6.0).abs() < 1e-12);
        let t = exec(&["overshoot", "--mode", "profile", "--k", "10"])
            .unwrap()
            .table;
        assert_eq!(t.rows.len(), 10);
    }
}

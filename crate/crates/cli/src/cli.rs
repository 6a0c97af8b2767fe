use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::output::Format;

#[derive(Debug, Parser)]
#[command(
    name = "gport",
    version,
    about = "Optimal application portfolios for loss-averse students"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: GlobalArgs,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Default, Args)]
pub struct GlobalArgs {
    /// Output format [default: table]
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,

    /// Write output here instead of stdout, plus `<out>.manifest.json`
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,

    /// key=value file with defaults; flags take precedence
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,

    /// Seed for the Monte Carlo streams [default: 42]
    #[arg(long, global = true)]
    pub seed: Option<u64>,

    /// Solver tolerance on the boundary conditions [default: 1e-12]
    #[arg(long, global = true)]
    pub boundary_tolerance: Option<f64>,

    /// Minimum scan points for the bottom school [default: 256]
    #[arg(long, global = true)]
    pub multistart: Option<usize>,

    /// Bisection iteration cap [default: 200]
    #[arg(long, global = true)]
    pub max_bisection_iters: Option<usize>,

    /// Abort shots as soon as an iterate turns negative
    #[arg(long, global = true)]
    pub clamp_negative: bool,

    /// Run everything on one thread
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Solve for the optimal portfolio
    Solve(SolveArgs),
    /// Reproduce the freezing or payoff table
    Table(TableArgs),
    /// Emit the point series behind a figure
    Figure(FigureArgs),
    /// Run a verification suite; exits 1 on any violation
    Verify(VerifyArgs),
    /// Exhaustive grid search, compared with the solver
    Oracle(OracleArgs),
    /// Monte Carlo estimate of utility and payoff
    Mc(McArgs),
    /// Closed-form bounds next to the solved portfolio
    Bounds(BoundsArgs),
    /// Over- and undershooting analyses
    Overshoot(OvershootArgs),
}

/// A bias given either as `gamma` or as the pair `(tau, lambda)`.
#[derive(Debug, Clone, Args)]
pub struct BiasArgs {
    #[arg(long, allow_negative_numbers = true, conflicts_with_all = ["tau", "lambda"])]
    pub gamma: Option<f64>,

    #[arg(long, allow_negative_numbers = true, requires = "lambda")]
    pub tau: Option<f64>,

    #[arg(long, allow_negative_numbers = true, requires = "tau")]
    pub lambda: Option<f64>,
}

#[derive(Debug, Args)]
pub struct SolveArgs {
    #[command(flatten)]
    pub bias: BiasArgs,

    #[arg(long)]
    pub k: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum TableKind {
    Freezing,
    Payoff,
}

#[derive(Debug, Args)]
pub struct TableArgs {
    #[arg(long, value_enum)]
    pub which: TableKind,

    /// Biases, comma separated or repeated
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma: Vec<f64>,

    /// Use k = 1..=k_max instead of the default sizes
    #[arg(long)]
    pub k_max: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
#[value(rename_all = "snake_case")]
pub enum FigureKind {
    PortfolioLine,
    Deltas,
    HCurve,
    MCurve,
    X1VsGamma,
}

#[derive(Debug, Args)]
pub struct FigureArgs {
    #[arg(long, value_enum)]
    pub which: FigureKind,

    /// Bias; for m_curve a comma-separated list
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    pub gamma: Vec<f64>,

    #[arg(long)]
    pub k: Option<usize>,

    /// Right end of the bias axis (h_curve, x1_vs_gamma)
    #[arg(long)]
    pub gamma_max: Option<f64>,

    #[arg(long)]
    pub points: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Foc,
    Bounds,
    Oracle,
    Montecarlo,
    Overshoot,
    All,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    #[arg(long, value_enum, default_value = "all")]
    pub suite: SuiteArg,

    /// Monte Carlo samples [default: 1000000]
    #[arg(long)]
    pub samples: Option<u64>,

    /// Oracle grid spacing [default: 0.001]
    #[arg(long)]
    pub resolution: Option<f64>,
}

#[derive(Debug, Args)]
pub struct OracleArgs {
    #[command(flatten)]
    pub bias: BiasArgs,

    #[arg(long)]
    pub k: usize,

    /// Grid spacing [default: 0.001]
    #[arg(long)]
    pub resolution: Option<f64>,
}

#[derive(Debug, Args)]
pub struct McArgs {
    #[command(flatten)]
    pub bias: BiasArgs,

    #[arg(long)]
    pub k: usize,

    /// [default: 1000000]
    #[arg(long)]
    pub samples: Option<u64>,

    /// Independent random streams [default: 64]
    #[arg(long)]
    pub streams: Option<u32>,
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long, allow_negative_numbers = true)]
    pub gamma: f64,

    #[arg(long)]
    pub k: usize,

    /// Cutoff for the count of schools above `c`
    #[arg(long, default_value_t = 0.5, allow_negative_numbers = true)]
    pub c: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum OvershootMode {
    /// Best single school between two fixed neighbours
    Local,
    /// Threshold on a + b past which the optimum clears theta (a + b)
    Theta,
    /// Top and bottom schools against rational spacing over a bias grid
    Global,
    /// One school as the bias shrinks to zero
    Trace,
    /// Every school against rational spacing (exploratory)
    Profile,
}

#[derive(Debug, Args)]
pub struct OvershootArgs {
    #[arg(long, value_enum)]
    pub mode: OvershootMode,

    #[arg(long, allow_negative_numbers = true)]
    pub gamma: Option<f64>,

    /// Lower neighbour (local)
    #[arg(long, allow_negative_numbers = true)]
    pub a: Option<f64>,

    /// Upper neighbour (local)
    #[arg(long, allow_negative_numbers = true)]
    pub b: Option<f64>,

    /// Allow gamma up to 1/2 (local)
    #[arg(long)]
    pub extended: bool,

    #[arg(long, allow_negative_numbers = true)]
    pub theta: Option<f64>,

    #[arg(long)]
    pub k: Option<usize>,

    /// School tracked by `trace`
    #[arg(long)]
    pub index: Option<usize>,

    #[arg(long)]
    pub gamma_max: Option<f64>,

    #[arg(long)]
    pub points: Option<usize>,
}

#[cfg(test)]
mod tests {
    use super::*;
    use clap::CommandFactory;

    #[test]
    fn definition_is_consistent() {
        Cli::command().debug_assert();
    }

    #[test]
    fn global_flags_after_subcommand() {
        let cli = Cli::try_parse_from([
            "gport", "solve", "--gamma", "1", "--k", "2", "--format", "csv",
        ])
        .unwrap();
        assert_eq!(cli.global.format, Some(Format::Csv));
        assert!(Cli::try_parse_from([
            "gport", "solve", "--gamma", "1", "--tau", "1", "--lambda", "2", "--k", "2"
        ])
        .is_err());
    }

    #[test]
    fn lists_split_on_commas() {
        let cli = Cli::try_parse_from([
            "gport", "table", "--which", "payoff", "--gamma", "0.1,0.2", "--gamma", "0.5",
        ])
        .unwrap();
        let Command::Table(t) = cli.command else {
            panic!()
        };
        assert_eq!(t.gamma, vec![0.1, 0.2, 0.5]);
        let cli = Cli::try_parse_from(["gport", "figure", "--which", "x1_vs_gamma"]).unwrap();
        assert!(matches!(
            cli.command,
            Command::Figure(FigureArgs {
                which: FigureKind::X1VsGamma,
                ..
            })
        ));
    }
}

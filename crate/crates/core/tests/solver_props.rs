use gport_core::model::perceived_utility;
use gport_core::solver::{oracle_solve_with, solve};
use gport_core::{BiasParams, Exec, Portfolio, SolveConfig};
use proptest::prelude::*;

fn bias(gamma: f64) -> BiasParams {
    BiasParams::from_gamma(gamma).unwrap()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn solved_portfolios_are_critical_points(gamma in 0.0f64..3.0, k in 1usize..40) {
        let cfg = SolveConfig::default();
        let r = solve(k, &bias(gamma), &cfg).unwrap();
        prop_assert_eq!(r.portfolio.k(), k);
        prop_assert!(r.max_residual() <= 10.0 * cfg.boundary_tolerance);
        prop_assert!(r.boundary_error <= 10.0 * cfg.boundary_tolerance);
        prop_assert_eq!(r.perceived, perceived_utility(&r.portfolio, &bias(gamma)));
    }

    #[test]
    fn no_single_coordinate_move_helps(gamma in 0.0f64..2.0, k in 1usize..12, j in 0usize..12, up in any::<bool>()) {
        let b = bias(gamma);
        let r = solve(k, &b, &SolveConfig::default()).unwrap();
        let j = j % k;
        let mut xs = r.portfolio.schools().to_vec();
        let above = if j == 0 { 1.0 } else { xs[j - 1] };
        let below = if j + 1 == k { 0.0 } else { xs[j + 1] };
        let h = 1e-4 * (above - below);
        xs[j] += if up { h } else { -h };
        let moved = Portfolio::new(xs).unwrap();
        prop_assert!(perceived_utility(&moved, &b) <= r.perceived + 1e-15);
    }

    #[test]
    fn beats_rational_spacing(gamma in 0.0f64..3.0, k in 1usize..30) {
        let b = bias(gamma);
        let r = solve(k, &b, &SolveConfig::default()).unwrap();
        let even = Portfolio::equally_spaced(k).unwrap();
        prop_assert!(r.perceived >= perceived_utility(&even, &b) - 1e-15);
    }

    #[test]
    fn coarse_oracle_never_wins(gamma in 0.0f64..2.0, k in 1usize..3) {
        let b = bias(gamma);
        let s = solve(k, &b, &SolveConfig::default()).unwrap();
        let o = oracle_solve_with(k, &b, 5e-3, Exec::default()).unwrap();
        prop_assert!(o.perceived <= s.perceived + 1e-12);
        prop_assert!(s.perceived - o.perceived < 1e-4);
    }
}

#[test]
fn execution_mode_does_not_change_results() {
    for (k, gamma) in [(1, 0.3), (13, 0.1), (40, 0.5), (100, 0.1), (25, 3.0)] {
        let seq = solve(
            k,
            &bias(gamma),
            &SolveConfig::default().with_exec(Exec::Sequential),
        )
        .unwrap();
        let par = solve(
            k,
            &bias(gamma),
            &SolveConfig::default().with_exec(Exec::Parallel),
        )
        .unwrap();
        assert_eq!(seq, par, "k {k} gamma {gamma}");
    }
    let seq = oracle_solve_with(3, &bias(0.5), 2e-3, Exec::Sequential).unwrap();
    let par = oracle_solve_with(3, &bias(0.5), 2e-3, Exec::Parallel).unwrap();
    assert_eq!(seq, par);
}

#[test]
fn clamped_shots_find_the_same_optimum() {
    let clamp = SolveConfig {
        clamp_negative: true,
        ..SolveConfig::default()
    };
    for (k, gamma) in [(5, 0.5), (14, 0.1), (6, 1.0)] {
        let a = solve(k, &bias(gamma), &SolveConfig::default()).unwrap();
        let b = solve(k, &bias(gamma), &clamp).unwrap();
        for (x, y) in a.portfolio.schools().iter().zip(b.portfolio.schools()) {
            assert!((x - y).abs() <= 1e-12 * x.max(1e-300) + 1e-15);
        }
    }
}

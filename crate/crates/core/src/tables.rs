//! Sweeps behind the two reference tables: solved portfolios for growing `k`,
//! and the true payoff of the optimum across biases.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::BiasParams;
use crate::solver::{solve, SolveConfig, SolveReport};

/// `k / (2(k + 1))`, the payoff of `k` equally spaced applications.
pub fn unbiased_payoff(k: usize) -> f64 {
    k as f64 / (2.0 * (k as f64 + 1.0))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FreezingRow {
    pub gamma: f64,
    pub k: usize,
    pub schools: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffRow {
    pub k: usize,
    pub unbiased: f64,
    /// One entry per bias, in the order of [`PayoffTable::gammas`].
    pub payoffs: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PayoffTable {
    pub gammas: Vec<f64>,
    pub rows: Vec<PayoffRow>,
}

fn check_inputs(gammas: &[f64], ks: &[usize]) -> Result<()> {
    if gammas.is_empty() || ks.is_empty() {
        return Err(Error::domain("need at least one gamma and one k"));
    }
    if ks.contains(&0) {
        return Err(Error::domain("k must be at least 1"));
    }
    Ok(())
}

/// Solves every `(gamma, k)` cell, gamma-major.
fn solve_grid(gammas: &[f64], ks: &[usize], config: &SolveConfig) -> Result<Vec<SolveReport>> {
    check_inputs(gammas, ks)?;
    let biases = gammas
        .iter()
        .map(|&g| BiasParams::from_gamma(g))
        .collect::<Result<Vec<_>>>()?;
    let nk = ks.len();
    config
        .exec
        .map(biases.len() * nk, |j| {
            solve(ks[j % nk], &biases[j / nk], config)
        })
        .into_iter()
        .collect()
}

/// Optimal portfolios for each bias and size.
pub fn freezing_table(
    gammas: &[f64],
    ks: &[usize],
    config: &SolveConfig,
) -> Result<Vec<FreezingRow>> {
    let reports = solve_grid(gammas, ks, config)?;
    let nk = ks.len();
    Ok(reports
        .into_iter()
        .enumerate()
        .map(|(j, r)| FreezingRow {
            gamma: gammas[j / nk],
            k: ks[j % nk],
            schools: r.portfolio.into_vec(),
        })
        .collect())
}

/// True payoff of the optimum for each size (rows) and bias (columns).
pub fn payoff_table(gammas: &[f64], ks: &[usize], config: &SolveConfig) -> Result<PayoffTable> {
    let reports = solve_grid(gammas, ks, config)?;
    let nk = ks.len();
    let rows = ks
        .iter()
        .enumerate()
        .map(|(row, &k)| PayoffRow {
            k,
            unbiased: unbiased_payoff(k),
            payoffs: (0..gammas.len())
                .map(|g| reports[g * nk + row].payoff)
                .collect(),
        })
        .collect();
    Ok(PayoffTable {
        gammas: gammas.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unbiased_values() {
        assert_eq!(unbiased_payoff(1), 0.25);
        assert_eq!(unbiased_payoff(3), 0.375);
        assert_eq!(unbiased_payoff(4), 0.4);
    }

    #[test]
    fn layout() {
        let cfg = SolveConfig::default();
        let t = payoff_table(&[0.0, 0.5], &[1, 3], &cfg).unwrap();
        assert_eq!(t.rows.len(), 2);
        assert_eq!(t.rows[1].k, 3);
        assert!((t.rows[1].payoffs[0] - 0.375).abs() < 1e-12);
        assert!((t.rows[0].payoffs[1] - 0.244_016).abs() < 1e-6);
        let f = freezing_table(&[0.0, 1.0], &[1, 2], &cfg).unwrap();
        assert_eq!(f.len(), 4);
        assert_eq!((f[2].gamma, f[2].k), (1.0, 1));
        assert_eq!(f[3].schools.len(), 2);
    }

    #[test]
    fn rejects_bad_inputs() {
        let cfg = SolveConfig::default();
        assert!(payoff_table(&[], &[1], &cfg).is_err());
        assert!(freezing_table(&[0.1], &[0], &cfg).is_err());
        assert!(freezing_table(&[-0.1], &[1], &cfg).is_err());
    }
}

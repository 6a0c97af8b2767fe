//! Point series for the figures. Nothing is rendered; each series is a
//! header plus numeric rows that any plotting tool can consume.

use serde::{Deserialize, Serialize};

use crate::bounds::{h_of_gamma, m_of_gamma_c, xi_sandwich_general, DeltaEnvelope};
use crate::error::{Error, Result};
use crate::model::BiasParams;
use crate::solver::{solve, SolveConfig};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Series {
    pub columns: Vec<String>,
    pub rows: Vec<Vec<f64>>,
}

impl Series {
    fn new(columns: &[&str], rows: Vec<Vec<f64>>) -> Self {
        Self {
            columns: columns.iter().map(|c| c.to_string()).collect(),
            rows,
        }
    }

    pub fn column(&self, name: &str) -> Option<Vec<f64>> {
        let j = self.columns.iter().position(|c| c == name)?;
        Some(self.rows.iter().map(|r| r[j]).collect())
    }
}

fn check_points(points: usize) -> Result<()> {
    if points == 0 {
        Err(Error::domain("need at least one point"))
    } else {
        Ok(())
    }
}

/// Positions of the solved applications: `(index, x)`.
pub fn portfolio_line(k: usize, gamma: f64, config: &SolveConfig) -> Result<Series> {
    let report = solve(k, &BiasParams::from_gamma(gamma)?, config)?;
    let rows = report
        .portfolio
        .schools()
        .iter()
        .enumerate()
        .map(|(i, &x)| vec![(i + 1) as f64, x])
        .collect();
    Ok(Series::new(&["index", "x"], rows))
}

/// Gaps `Delta_i = x_{i-1} - x_i` of the solved portfolio: `(index, x, delta)`.
pub fn deltas(k: usize, gamma: f64, config: &SolveConfig) -> Result<Series> {
    let report = solve(k, &BiasParams::from_gamma(gamma)?, config)?;
    let rows = report
        .portfolio
        .schools()
        .iter()
        .zip(&report.gaps.deltas)
        .enumerate()
        .map(|(i, (&x, &d))| vec![(i + 1) as f64, x, d])
        .collect();
    Ok(Series::new(&["index", "x", "delta"], rows))
}

/// `h(gamma)` on `points` evenly spaced biases in `(0, gamma_max]`.
pub fn h_curve(gamma_max: f64, points: usize) -> Result<Series> {
    check_points(points)?;
    let rows = (1..=points)
        .map(|j| {
            let g = gamma_max * j as f64 / points as f64;
            Ok(vec![g, h_of_gamma(g)?])
        })
        .collect::<Result<_>>()?;
    Ok(Series::new(&["gamma", "h"], rows))
}

/// `m(gamma, c)` for each bias on `points` evenly spaced `c` in `(0, 2/3)`.
pub fn m_curve(gammas: &[f64], points: usize) -> Result<Series> {
    check_points(points)?;
    let mut rows = Vec::with_capacity(gammas.len() * points);
    for &g in gammas {
        for j in 1..=points {
            let c = (2.0 / 3.0) * j as f64 / (points + 1) as f64;
            rows.push(vec![g, c, m_of_gamma_c(g, c)?]);
        }
    }
    Ok(Series::new(&["gamma", "c", "m"], rows))
}

/// Top school of the k-portfolio against bias, with the refined-envelope
/// lower bound and the rational value `k/(k+1)`.
pub fn x1_vs_gamma(
    k: usize,
    gamma_max: f64,
    points: usize,
    config: &SolveConfig,
) -> Result<Series> {
    check_points(points)?;
    if !(gamma_max > 0.0) {
        return Err(Error::domain("gamma_max must be positive"));
    }
    let rational = k as f64 / (k + 1) as f64;
    let rows = config
        .exec
        .map(points, |j| {
            let g = gamma_max * (j + 1) as f64 / points as f64;
            let x1 = solve(k, &BiasParams::from_gamma(g)?, config)?
                .portfolio
                .top();
            let (lo, _) = xi_sandwich_general(k, g, &DeltaEnvelope::refined(k, g)?)?;
            Ok(vec![g, x1, lo[0], rational])
        })
        .into_iter()
        .collect::<Result<_>>()?;
    Ok(Series::new(&["gamma", "x1", "x1_lower", "rational"], rows))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rational_line_is_uniform() {
        let s = portfolio_line(100, 0.0, &SolveConfig::default()).unwrap();
        assert_eq!(s.rows.len(), 100);
        for r in &s.rows {
            assert!((r[1] - (101.0 - r[0]) / 101.0).abs() < 1e-12);
        }
    }

    #[test]
    fn delta_turn_sits_at_two_thirds() {
        let s = deltas(25, 0.1, &SolveConfig::default()).unwrap();
        let d = s.column("delta").unwrap();
        let x = s.column("x").unwrap();
        let peak = (0..d.len()).max_by(|&a, &b| d[a].total_cmp(&d[b])).unwrap();
        assert!(peak > 0 && peak + 1 < d.len());
        // the gap grows across schools above 2/3 and shrinks below
        assert!(x[peak - 1] > 2.0 / 3.0);
        assert!(x[peak] < 2.0 / 3.0);
    }

    #[test]
    fn h_curve_breakpoints() {
        let s = h_curve(4.0, 8).unwrap();
        assert_eq!(s.rows[0], vec![0.5, 0.5]);
        assert_eq!(s.rows[3][0], 2.0);
        assert!((s.rows[3][1] - 0.5).abs() < 1e-15);
    }

    #[test]
    fn m_curve_shape() {
        let s = m_curve(&[0.1, 1.0], 10).unwrap();
        assert_eq!(s.rows.len(), 20);
        let m = s.column("m").unwrap();
        // decreasing in c for a fixed bias
        assert!(m[..10].windows(2).all(|w| w[0] > w[1]));
        assert!(h_curve(1.0, 0).is_err());
    }

    #[test]
    fn x1_lower_bound_holds() {
        let s = x1_vs_gamma(5, 0.014, 6, &SolveConfig::default()).unwrap();
        for r in &s.rows {
            assert!(r[2] <= r[1]);
            assert!(r[2] > r[3], "bound above 5/6 at gamma {}", r[0]);
        }
    }
}

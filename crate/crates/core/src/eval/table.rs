//! Cross-metric performance tables normalized by the column best.

use std::io::Write;

use super::montecarlo::mean_and_se;
use crate::error::Result;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Metric {
    /// Posterior density at the estimate.
    Likelihood,
    /// Probability of landing within ε.
    PEpsilon,
    /// Probability of landing within d.
    Pd,
    Mse,
    /// Expected distance error.
    Ede,
}

impl Metric {
    pub const ALL: [Metric; 5] = [Metric::Likelihood, Metric::PEpsilon, Metric::Pd, Metric::Mse, Metric::Ede];

    pub fn name(&self) -> &'static str {
        match self {
            Metric::Likelihood => "Likelihood",
            Metric::PEpsilon => "P(eps)",
            Metric::Pd => "P(d)",
            Metric::Mse => "MSE",
            Metric::Ede => "EDE",
        }
    }

    pub fn higher_is_better(&self) -> bool {
        matches!(self, Metric::Likelihood | Metric::PEpsilon | Metric::Pd)
    }

    fn slot(&self) -> usize {
        Metric::ALL.iter().position(|m| m == self).expect("listed")
    }
}

/// How per-trial metric values are formed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum MetricMode {
    /// Posterior expectation of each metric at the estimate. Every estimator
    /// is optimal for its own metric trial by trial.
    #[default]
    Expected,
    /// Value realized against the sampled true location.
    Realized,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerformanceTable {
    pub rows: Vec<String>,
    pub metrics: Vec<Metric>,
    /// `raw[row][col]`: mean over trials.
    pub raw: Vec<Vec<f64>>,
    pub se: Vec<Vec<f64>>,
    /// `raw / column best`, so the best entry of each column is 1.
    pub normalized: Vec<Vec<f64>>,
    pub normalized_se: Vec<Vec<f64>>,
}

impl PerformanceTable {
    /// `samples[row][trial]` holds all five metrics in [`Metric::ALL`] order.
    pub fn from_samples(rows: Vec<String>, metrics: Vec<Metric>, samples: &[Vec<[f64; 5]>]) -> Self {
        let mut raw = Vec::with_capacity(rows.len());
        let mut se = Vec::with_capacity(rows.len());
        for per_trial in samples {
            let (r, s): (Vec<f64>, Vec<f64>) = metrics
                .iter()
                .map(|m| {
                    let xs: Vec<f64> = per_trial.iter().map(|v| v[m.slot()]).collect();
                    mean_and_se(&xs)
                })
                .unzip();
            raw.push(r);
            se.push(s);
        }
        let best: Vec<f64> = metrics
            .iter()
            .enumerate()
            .map(|(c, m)| {
                let col = raw.iter().map(|r| r[c]);
                if m.higher_is_better() {
                    col.fold(f64::NEG_INFINITY, f64::max)
                } else {
                    col.fold(f64::INFINITY, f64::min)
                }
            })
            .collect();
        let scale = |v: &Vec<Vec<f64>>| -> Vec<Vec<f64>> {
            v.iter().map(|r| r.iter().zip(&best).map(|(x, b)| x / b).collect()).collect()
        };
        let normalized = scale(&raw);
        let normalized_se = scale(&se);
        PerformanceTable { rows, metrics, raw, se, normalized, normalized_se }
    }

    pub fn column(&self, m: Metric) -> Option<usize> {
        self.metrics.iter().position(|x| *x == m)
    }

    pub fn row(&self, name: &str) -> Option<usize> {
        self.rows.iter().position(|r| r == name)
    }

    /// Row whose normalized entry is exactly 1 in column `m`.
    pub fn best_row(&self, m: Metric) -> Option<usize> {
        let c = self.column(m)?;
        self.normalized.iter().position(|r| r[c] == 1.0)
    }

    /// `algorithm,metric,raw,se,normalized,normalized_se` rows.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "algorithm,metric,raw,se,normalized,normalized_se")?;
        for (r, name) in self.rows.iter().enumerate() {
            for (c, m) in self.metrics.iter().enumerate() {
                writeln!(
                    out,
                    "{},{},{:.9},{:.9},{:.6},{:.6}",
                    name,
                    m.name(),
                    self.raw[r][c],
                    self.se[r][c],
                    self.normalized[r][c],
                    self.normalized_se[r][c]
                )?;
            }
        }
        Ok(())
    }

    /// Normalized values laid out as an aligned text grid.
    pub fn to_text(&self) -> String {
        let w0 = self.rows.iter().map(String::len).max().unwrap_or(0).max("algorithm".len());
        let mut s = format!("{:<w0$}", "algorithm");
        for m in &self.metrics {
            s.push_str(&format!("  {:>10}", m.name()));
        }
        s.push('\n');
        for (r, name) in self.rows.iter().enumerate() {
            s.push_str(&format!("{name:<w0$}"));
            for v in &self.normalized[r] {
                s.push_str(&format!("  {v:>10.4}"));
            }
            s.push('\n');
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn normalization_by_column_best() {
        let samples = vec![
            vec![[2.0, 0.5, 0.9, 4.0, 2.0], [2.0, 0.5, 0.9, 4.0, 2.0]],
            vec![[1.0, 0.25, 0.3, 2.0, 3.0], [1.0, 0.25, 0.3, 2.0, 3.0]],
        ];
        let t = PerformanceTable::from_samples(vec!["a".into(), "b".into()], Metric::ALL.to_vec(), &samples);
        assert_eq!(t.normalized[0], vec![1.0, 1.0, 1.0, 2.0, 1.0]);
        assert_eq!(t.normalized[1], vec![0.5, 0.5, 0.3 / 0.9, 1.0, 1.5]);
        assert_eq!(t.best_row(Metric::Mse), Some(1));
        assert_eq!(t.se[0][0], 0.0);
        assert!(t.to_text().starts_with("algorithm  Likelihood"));
        let mut buf = Vec::new();
        t.write_csv(&mut buf).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 11);
    }
}

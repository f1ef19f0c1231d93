use std::io::Write;

use crate::error::{Error, Result};
use crate::estimators::{CostFunction, RADIUS_SLACK};

/// Default number of evaluation distances on `[0, d*]`.
pub const DEFAULT_D_POINTS: usize = 64;

/// `n` evenly spaced distances from 0 to `d_star` inclusive.
pub fn default_d_grid(d_star: f64, n: usize) -> Vec<f64> {
    match n {
        0 => Vec::new(),
        1 => vec![0.0],
        _ => (0..n).map(|i| if i + 1 == n { d_star } else { d_star * i as f64 / (n - 1) as f64 }).collect(),
    }
}

/// Empirical error CDF sampled on a fixed distance grid.
#[derive(Debug, Clone, PartialEq)]
pub struct ErrorCdfCurve {
    pub d_grid: Vec<f64>,
    pub values: Vec<f64>,
    /// Trials that produced an error sample.
    pub trials: usize,
    /// Trials that failed and were excluded.
    pub failures: usize,
}

impl ErrorCdfCurve {
    /// Builds a curve from explicit values, checking shape and monotonicity.
    pub fn new(d_grid: Vec<f64>, values: Vec<f64>, trials: usize) -> Result<Self> {
        check_d_grid(&d_grid)?;
        if values.len() != d_grid.len() {
            return Err(Error::GridMismatch);
        }
        if values.iter().any(|v| !(0.0..=1.0).contains(v)) || values.windows(2).any(|w| w[1] < w[0]) {
            return Err(Error::InvalidParameter("curve values must be nondecreasing in [0, 1]".into()));
        }
        Ok(ErrorCdfCurve { d_grid, values, trials, failures: 0 })
    }

    /// `F(d) = #{e <= d} / n` over the error samples.
    pub fn from_errors(errors: &[f64], d_grid: &[f64]) -> Result<Self> {
        check_d_grid(d_grid)?;
        if errors.is_empty() {
            return Err(Error::InsufficientData("no successful trials".into()));
        }
        let mut sorted = errors.to_vec();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len() as f64;
        let values =
            d_grid.iter().map(|&d| sorted.partition_point(|&e| e <= d + RADIUS_SLACK) as f64 / n).collect();
        Ok(ErrorCdfCurve { d_grid: d_grid.to_vec(), values, trials: errors.len(), failures: 0 })
    }

    /// Curve whose value at `d_grid[k]` is the mean of column `k` over
    /// per-trial success probabilities in `[0, 1]`.
    pub fn from_trial_means(rows: &[Vec<f64>], d_grid: &[f64]) -> Result<Self> {
        check_d_grid(d_grid)?;
        if rows.is_empty() {
            return Err(Error::InsufficientData("no successful trials".into()));
        }
        let mut values = vec![0.0; d_grid.len()];
        for row in rows {
            if row.len() != d_grid.len() {
                return Err(Error::GridMismatch);
            }
            for (v, &p) in values.iter_mut().zip(row) {
                *v += p;
            }
        }
        let mut floor = 0.0f64;
        for v in values.iter_mut() {
            // Rounding in the per-trial sums must not break monotonicity.
            floor = floor.max((*v / rows.len() as f64).min(1.0));
            *v = floor;
        }
        Ok(ErrorCdfCurve { d_grid: d_grid.to_vec(), values, trials: rows.len(), failures: 0 })
    }

    pub fn with_failures(mut self, failures: usize) -> Self {
        self.failures = failures;
        self
    }

    pub fn len(&self) -> usize {
        self.d_grid.len()
    }

    pub fn is_empty(&self) -> bool {
        self.d_grid.is_empty()
    }

    pub fn failure_fraction(&self) -> f64 {
        let total = self.trials + self.failures;
        if total == 0 {
            0.0
        } else {
            self.failures as f64 / total as f64
        }
    }

    /// Step lookup: the value at the largest grid distance not above `d`.
    pub fn at(&self, d: f64) -> f64 {
        let k = self.d_grid.partition_point(|&x| x <= d + RADIUS_SLACK);
        if k == 0 {
            0.0
        } else {
            self.values[k - 1]
        }
    }

    /// Binomial standard error at each grid distance.
    pub fn standard_errors(&self) -> Vec<f64> {
        let n = self.trials.max(1) as f64;
        self.values.iter().map(|&p| (p * (1.0 - p) / n).sqrt()).collect()
    }

    pub fn same_grid(&self, other: &ErrorCdfCurve) -> bool {
        self.d_grid == other.d_grid
    }

    /// `d,F` rows with a header line.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        writeln!(out, "d,F")?;
        for (d, f) in self.d_grid.iter().zip(&self.values) {
            writeln!(out, "{d:.6},{f:.6}")?;
        }
        Ok(())
    }
}

fn check_d_grid(d_grid: &[f64]) -> Result<()> {
    if d_grid.is_empty() || d_grid[0] != 0.0 {
        return Err(Error::InvalidParameter("distance grid must start at 0".into()));
    }
    if d_grid.iter().any(|d| !d.is_finite()) || d_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::InvalidParameter("distance grid must be finite and increasing".into()));
    }
    Ok(())
}

/// `E[g(D)]` for the error distribution the curve describes.
///
/// A within-radius cost reads `1 - F(d)` directly. Any other cost treats
/// the curve as atoms `F_i - F_{i-1}` at the grid distances, with the mass
/// the curve has not reached by the last distance placed there.
pub fn expected_cost_from_curve(curve: &ErrorCdfCurve, g: &CostFunction) -> f64 {
    if let CostFunction::WithinRadius(d) = g {
        return 1.0 - curve.at(*d);
    }
    let mut prev = 0.0;
    let mut acc = 0.0;
    for (&d, &f) in curve.d_grid.iter().zip(&curve.values) {
        acc += g.eval(d) * (f - prev);
        prev = f;
    }
    acc + g.eval(*curve.d_grid.last().expect("nonempty grid")) * (1.0 - prev)
}

/// Trapezoid integral of `F*(d) - F_A(d)` over the grid. Monte Carlo noise
/// can make it slightly negative; the raw value is returned.
pub fn theta_area(a: &ErrorCdfCurve, fstar: &ErrorCdfCurve) -> Result<f64> {
    if !a.same_grid(fstar) {
        return Err(Error::GridMismatch);
    }
    Ok(trapezoid(&a.d_grid, |k| fstar.values[k] - a.values[k]))
}

pub(crate) fn trapezoid(xs: &[f64], f: impl Fn(usize) -> f64) -> f64 {
    (1..xs.len()).map(|k| 0.5 * (f(k) + f(k - 1)) * (xs[k] - xs[k - 1])).sum()
}

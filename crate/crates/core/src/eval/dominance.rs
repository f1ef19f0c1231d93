//! Pointwise stochastic dominance between error CDFs.

use super::curve::{expected_cost_from_curve, ErrorCdfCurve};
use crate::error::{Error, Result};
use crate::estimators::{CostFunction, Tabulated};

/// Consecutive separated grid points needed to call dominance strict.
pub const STRICT_RUN: usize = 3;

/// Width of the band inside which two curve values count as equal.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Tolerance {
    Absolute(f64),
    /// Multiples of the pooled binomial standard error at each point.
    StandardErrors(f64),
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance::StandardErrors(2.0)
    }
}

impl Tolerance {
    /// Band half-width at every grid point.
    pub fn band(&self, a: &ErrorCdfCurve, b: &ErrorCdfCurve) -> Vec<f64> {
        match *self {
            Tolerance::Absolute(t) => vec![t; a.len()],
            Tolerance::StandardErrors(k) => {
                let (na, nb) = (a.trials.max(1) as f64, b.trials.max(1) as f64);
                a.values
                    .iter()
                    .zip(&b.values)
                    .map(|(&fa, &fb)| {
                        let p = (fa * na + fb * nb) / (na + nb);
                        k * (p * (1.0 - p) * (1.0 / na + 1.0 / nb)).sqrt()
                    })
                    .collect()
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum DominanceVerdict {
    StrictlyDominates,
    Dominates,
    DominatedBy,
    StrictlyDominatedBy,
    Equal,
    Incomparable,
}

impl DominanceVerdict {
    pub fn label(&self) -> &'static str {
        match self {
            DominanceVerdict::StrictlyDominates => "strictly-dominates",
            DominanceVerdict::Dominates => "dominates",
            DominanceVerdict::DominatedBy => "dominated-by",
            DominanceVerdict::StrictlyDominatedBy => "strictly-dominated-by",
            DominanceVerdict::Equal => "equal",
            DominanceVerdict::Incomparable => "incomparable",
        }
    }

    /// Whether the first curve lies above the second everywhere.
    pub fn first_dominates(&self) -> bool {
        matches!(
            self,
            DominanceVerdict::StrictlyDominates | DominanceVerdict::Dominates | DominanceVerdict::Equal
        )
    }
}

/// A verdict together with the distances where each curve is above the
/// other by more than the band.
#[derive(Debug, Clone, PartialEq)]
pub struct Dominance {
    pub verdict: DominanceVerdict,
    pub a_above: Vec<f64>,
    pub b_above: Vec<f64>,
}

fn longest_run(flags: &[bool]) -> usize {
    let mut best = 0;
    let mut run = 0;
    for &f in flags {
        run = if f { run + 1 } else { 0 };
        best = best.max(run);
    }
    best
}

pub fn dominance(a: &ErrorCdfCurve, b: &ErrorCdfCurve, tol: Tolerance) -> Result<Dominance> {
    if !a.same_grid(b) {
        return Err(Error::GridMismatch);
    }
    let band = tol.band(a, b);
    let up: Vec<bool> = (0..a.len()).map(|k| a.values[k] - b.values[k] > band[k]).collect();
    let down: Vec<bool> = (0..a.len()).map(|k| b.values[k] - a.values[k] > band[k]).collect();
    let pick = |flags: &[bool]| -> Vec<f64> {
        flags.iter().zip(&a.d_grid).filter(|(f, _)| **f).map(|(_, d)| *d).collect()
    };
    let (a_above, b_above) = (pick(&up), pick(&down));
    let verdict = match (a_above.is_empty(), b_above.is_empty()) {
        (true, true) => DominanceVerdict::Equal,
        (false, false) => DominanceVerdict::Incomparable,
        (false, true) if longest_run(&up) >= STRICT_RUN => DominanceVerdict::StrictlyDominates,
        (false, true) => DominanceVerdict::Dominates,
        (true, false) if longest_run(&down) >= STRICT_RUN => DominanceVerdict::StrictlyDominatedBy,
        (true, false) => DominanceVerdict::DominatedBy,
    };
    Ok(Dominance { verdict, a_above, b_above })
}

/// Slack for `E[g(D_a)] <= E[g(D_b)]` when `a` dominates `b` only up to the
/// band: summing by parts, `E_a - E_b = -Σ (F_a - F_b)(g_{k+1} - g_k)`.
pub fn cost_ordering_slack(a: &ErrorCdfCurve, b: &ErrorCdfCurve, g: &CostFunction, tol: Tolerance) -> f64 {
    let band = tol.band(a, b);
    let gs: Vec<f64> = a.d_grid.iter().map(|&d| g.eval(d)).collect();
    let spread: f64 = (1..gs.len()).map(|k| band[k - 1] * (gs[k] - gs[k - 1]).abs()).sum();
    spread + 1e-12
}

/// Cost pair separating two incomparable curves in both directions.
///
/// The first cost is the radius cost at the distance where `a` leads `b` by
/// the widest margin, so `a` wins it; the second is the same for `b`.
pub fn witness_costs(a: &ErrorCdfCurve, b: &ErrorCdfCurve) -> Result<(CostFunction, CostFunction)> {
    let dom = dominance(a, b, Tolerance::default())?;
    if dom.verdict != DominanceVerdict::Incomparable {
        return Err(Error::NotIncomparable);
    }
    Ok((radius_cost_at(a, b)?, radius_cost_at(b, a)?))
}

fn radius_cost_at(lead: &ErrorCdfCurve, other: &ErrorCdfCurve) -> Result<CostFunction> {
    let mut k = 0;
    let mut gap = f64::NEG_INFINITY;
    for i in 0..lead.len() {
        let g = lead.values[i] - other.values[i];
        if g > gap {
            gap = g;
            k = i;
        }
    }
    let d = lead.d_grid[k];
    if d > 0.0 {
        return CostFunction::within_radius(d);
    }
    // At distance zero the radius cost is degenerate; a ramp that is 0 at
    // zero and 1 from the next grid distance on has the same expectation.
    let next = lead.d_grid.get(1).copied().unwrap_or(1.0);
    Ok(CostFunction::TabulatedMonotone(Tabulated::new(vec![0.0, next], vec![0.0, 1.0])?))
}

/// `E[g(D_a)]` and `E[g(D_b)]`, convenient for checking witnesses.
pub fn curve_costs(a: &ErrorCdfCurve, b: &ErrorCdfCurve, g: &CostFunction) -> (f64, f64) {
    (expected_cost_from_curve(a, g), expected_cost_from_curve(b, g))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::curve::default_d_grid;

    fn curve(values: Vec<f64>) -> ErrorCdfCurve {
        let n = values.len();
        ErrorCdfCurve::new(default_d_grid(10.0, n), values, 1000).unwrap()
    }

    fn ramp(n: usize) -> Vec<f64> {
        (0..n).map(|i| i as f64 / (n - 1) as f64).collect()
    }

    #[test]
    fn identical_curves_are_equal() {
        let a = curve(ramp(20));
        assert_eq!(dominance(&a, &a, Tolerance::default()).unwrap().verdict, DominanceVerdict::Equal);
    }

    #[test]
    fn shifted_curve_strictly_dominates() {
        let b = ramp(20);
        let a: Vec<f64> = b.iter().map(|v| (v + 0.1).min(1.0)).collect();
        let d = dominance(&curve(a), &curve(b), Tolerance::default()).unwrap();
        assert_eq!(d.verdict, DominanceVerdict::StrictlyDominates);
        assert!(d.b_above.is_empty());
    }

    #[test]
    fn single_point_lead_is_weak() {
        let b = ramp(20);
        let mut a = b.clone();
        a[10] += 0.03;
        let d = dominance(&curve(a), &curve(b.clone()), Tolerance::Absolute(0.01)).unwrap();
        assert_eq!(d.verdict, DominanceVerdict::Dominates);
    }

    fn crossing() -> (ErrorCdfCurve, ErrorCdfCurve) {
        let b = ramp(21);
        let a = b.iter().map(|x| 0.25 + 0.5 * x).collect();
        (curve(a), curve(b))
    }

    #[test]
    fn crossing_is_incomparable_with_witnesses() {
        let (a, b) = crossing();
        let d = dominance(&a, &b, Tolerance::default()).unwrap();
        assert_eq!(d.verdict, DominanceVerdict::Incomparable);
        let (g1, g2) = witness_costs(&a, &b).unwrap();
        let (ea, eb) = curve_costs(&a, &b, &g1);
        assert!(ea < eb);
        let (ea, eb) = curve_costs(&a, &b, &g2);
        assert!(eb < ea);
        let (h1, h2) = witness_costs(&b, &a).unwrap();
        assert_eq!((h1, h2), (g2, g1));
    }

    #[test]
    fn witnesses_need_incomparable() {
        let a = curve(ramp(10));
        assert_eq!(witness_costs(&a, &a).unwrap_err(), Error::NotIncomparable);
    }

    #[test]
    fn grid_mismatch() {
        let a = curve(ramp(10));
        let b = curve(ramp(11));
        assert_eq!(dominance(&a, &b, Tolerance::default()).unwrap_err(), Error::GridMismatch);
    }
}

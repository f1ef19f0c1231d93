//! Probability mass over grid points, observation vectors and the Bayes
//! update that turns a prior into a posterior.

use std::collections::BTreeMap;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Grid, Location};

/// RSS readings in dBm keyed by transmitter id. Transmitters that were not
/// heard are simply absent.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ObservationVector {
    readings: BTreeMap<String, f64>,
}

impl ObservationVector {
    pub fn new(readings: BTreeMap<String, f64>) -> Result<Self> {
        if readings.is_empty() {
            return Err(Error::EmptyObservation);
        }
        if let Some((id, v)) = readings.iter().find(|(_, v)| !v.is_finite()) {
            return Err(Error::InvalidParameter(format!("reading for `{id}` is not finite: {v}")));
        }
        Ok(ObservationVector { readings })
    }

    pub fn from_pairs<I, S>(pairs: I) -> Result<Self>
    where
        I: IntoIterator<Item = (S, f64)>,
        S: Into<String>,
    {
        ObservationVector::new(pairs.into_iter().map(|(k, v)| (k.into(), v)).collect())
    }

    pub fn get(&self, tx: &str) -> Option<f64> {
        self.readings.get(tx).copied()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, f64)> {
        self.readings.iter().map(|(k, v)| (k.as_str(), *v))
    }

    pub fn len(&self) -> usize {
        self.readings.len()
    }

    pub fn is_empty(&self) -> bool {
        self.readings.is_empty()
    }
}

/// Anything that can score an observation vector at a candidate location.
pub trait ObservationModel: Sync {
    /// `ln f(o | R = at)`. May be `-inf` when the observation is impossible.
    fn log_likelihood(&self, obs: &ObservationVector, at: Location) -> Result<f64>;

    /// Scores for every grid point, in grid order.
    fn log_likelihoods(&self, obs: &ObservationVector, grid: &Grid) -> Result<Vec<f64>> {
        grid.points().iter().map(|p| self.log_likelihood(obs, *p)).collect()
    }
}

impl<F> ObservationModel for F
where
    F: Fn(&ObservationVector, Location) -> Result<f64> + Sync,
{
    fn log_likelihood(&self, obs: &ObservationVector, at: Location) -> Result<f64> {
        self(obs, at)
    }
}

/// Model whose likelihood is flat: the posterior equals the prior.
#[derive(Debug, Clone, Copy, Default)]
pub struct Uninformative;

impl ObservationModel for Uninformative {
    fn log_likelihood(&self, _obs: &ObservationVector, _at: Location) -> Result<f64> {
        Ok(0.0)
    }
}

/// Nonnegative normalized mass, one entry per grid point.
#[derive(Debug, Clone)]
pub struct DensityGrid {
    grid: Arc<Grid>,
    mass: Vec<f64>,
}

impl DensityGrid {
    /// Normalizes `weights` into a density. Weights must be finite,
    /// nonnegative and not all zero.
    pub fn from_weights(grid: Arc<Grid>, weights: Vec<f64>) -> Result<Self> {
        if weights.len() != grid.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} grid points",
                weights.len(),
                grid.len()
            )));
        }
        if weights.iter().any(|w| !w.is_finite() || *w < 0.0) {
            return Err(Error::InvalidParameter("weights must be finite and nonnegative".into()));
        }
        let total: f64 = weights.iter().sum();
        if total <= 0.0 {
            return Err(Error::InvalidParameter("weights sum to zero".into()));
        }
        let mass = weights.into_iter().map(|w| w / total).collect();
        Ok(DensityGrid { grid, mass })
    }

    pub fn uniform(grid: Arc<Grid>) -> Self {
        let n = grid.len();
        DensityGrid { mass: vec![1.0 / n as f64; n], grid }
    }

    pub fn point_mass(grid: Arc<Grid>, index: usize) -> Result<Self> {
        if index >= grid.len() {
            return Err(Error::InvalidParameter(format!("index {index} outside grid")));
        }
        let mut mass = vec![0.0; grid.len()];
        mass[index] = 1.0;
        Ok(DensityGrid { grid, mass })
    }

    /// Isotropic Gaussian bump centered at `center`, truncated to the grid.
    pub fn gaussian(grid: Arc<Grid>, center: Location, std_dev: f64) -> Result<Self> {
        if !(std_dev > 0.0) {
            return Err(Error::InvalidParameter(format!("std dev {std_dev} must be positive")));
        }
        let peak = grid.point(grid.nearest_index(center)).distance(&center);
        let w = grid
            .points()
            .iter()
            .map(|p| {
                let d2 = p.distance(&center).powi(2) - peak * peak;
                (-0.5 * d2 / (std_dev * std_dev)).exp()
            })
            .collect();
        DensityGrid::from_weights(grid, w)
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn grid_arc(&self) -> &Arc<Grid> {
        &self.grid
    }

    pub fn mass(&self) -> &[f64] {
        &self.mass
    }

    pub fn len(&self) -> usize {
        self.mass.len()
    }

    pub fn is_empty(&self) -> bool {
        self.mass.is_empty()
    }

    pub fn total(&self) -> f64 {
        self.mass.iter().sum()
    }

    /// Running sums of mass in grid order; the last entry is the total.
    pub fn cumulative(&self) -> Vec<f64> {
        let mut acc = 0.0;
        self.mass
            .iter()
            .map(|m| {
                acc += m;
                acc
            })
            .collect()
    }
}

/// Uniform density over the grid points of `grid`.
pub fn uniform_prior(grid: Arc<Grid>) -> DensityGrid {
    DensityGrid::uniform(grid)
}

/// Bayes update on the grid: `mass[i] ∝ exp(loglik_i) * prior[i]`.
///
/// Scores are combined in the log domain and shifted by their maximum
/// before exponentiating, so tens of transmitters do not underflow.
pub fn posterior(
    prior: &DensityGrid,
    model: &dyn ObservationModel,
    obs: &ObservationVector,
) -> Result<DensityGrid> {
    let lls = model.log_likelihoods(obs, prior.grid())?;
    posterior_from_log_likelihoods(prior, &lls)
}

/// Bayes update from precomputed per-point log-likelihoods.
pub fn posterior_from_log_likelihoods(prior: &DensityGrid, lls: &[f64]) -> Result<DensityGrid> {
    if lls.len() != prior.len() {
        return Err(Error::InvalidParameter(format!(
            "{} log-likelihoods for {} grid points",
            lls.len(),
            prior.len()
        )));
    }
    let mut log_w: Vec<f64> = prior
        .mass
        .iter()
        .zip(lls)
        .map(|(&m, &ll)| if m > 0.0 { ll + m.ln() } else { f64::NEG_INFINITY })
        .collect();
    if log_w.iter().any(|v| v.is_nan()) {
        return Err(Error::InvalidParameter("log-likelihood is NaN".into()));
    }
    let max = log_w.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::AllZeroLikelihood);
    }
    if max == f64::INFINITY {
        return Err(Error::InvalidParameter("log-likelihood is +inf".into()));
    }
    for v in log_w.iter_mut() {
        *v = (*v - max).exp();
    }
    let total: f64 = log_w.iter().sum();
    for v in log_w.iter_mut() {
        *v /= total;
    }
    Ok(DensityGrid { grid: prior.grid.clone(), mass: log_w })
}

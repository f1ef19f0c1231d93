//! Simplified path-loss model with log-normal shadowing.
//!
//! Received power in dBm is `pt + K - 10 η log10(d / d0) + W` with
//! `W ~ N(0, σ²)`. The estimator only ever sees the normalized observation
//! `o = rssi - pt - K`, whose mean is [`mean_observation`].

use std::collections::BTreeMap;
use std::f64::consts::PI;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::density::{ObservationModel, ObservationVector};
use crate::error::{Error, Result};
use crate::geometry::{distance, Grid, Location};

/// Distances below this are treated as the transmitter location itself.
pub const DEFAULT_D_MIN: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathLossParams {
    /// Additive gain constant K in dB. A reported "path loss of 39.13 dB"
    /// is stored as `-39.13`.
    pub k_db: f64,
    pub eta: f64,
    pub sigma_db: f64,
    pub d0: f64,
    pub pt_dbm: f64,
    /// Singularity floor in meters.
    pub d_min: f64,
}

impl PathLossParams {
    pub fn new(k_db: f64, eta: f64, sigma_db: f64, d0: f64, pt_dbm: f64) -> Result<Self> {
        let p = PathLossParams { k_db, eta, sigma_db, d0, pt_dbm, d_min: DEFAULT_D_MIN };
        p.validate()?;
        Ok(p)
    }

    pub fn with_d_min(mut self, d_min: f64) -> Result<Self> {
        self.d_min = d_min;
        self.validate()?;
        Ok(self)
    }

    pub fn validate(&self) -> Result<()> {
        let finite = [self.k_db, self.eta, self.sigma_db, self.d0, self.pt_dbm, self.d_min];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidParameter("path-loss parameters must be finite".into()));
        }
        if self.eta <= 0.0 {
            return Err(Error::InvalidParameter(format!("eta {} must be positive", self.eta)));
        }
        if self.sigma_db <= 0.0 {
            return Err(Error::InvalidParameter(format!("sigma {} must be positive", self.sigma_db)));
        }
        if self.d0 <= 0.0 {
            return Err(Error::InvalidParameter(format!("d0 {} must be positive", self.d0)));
        }
        if self.d_min <= 0.0 {
            return Err(Error::InvalidParameter(format!("d_min {} must be positive", self.d_min)));
        }
        Ok(())
    }

    /// Mean RSS in dBm at distance `d` (clamped to the floor).
    pub fn mean_rss(&self, d: f64) -> f64 {
        self.pt_dbm + self.k_db - 10.0 * self.eta * (d.max(self.d_min) / self.d0).log10()
    }
}

/// Ordered transmitters with unique ids.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TransmitterSet {
    txs: Vec<(String, Location)>,
}

impl TransmitterSet {
    pub fn new(txs: Vec<(String, Location)>) -> Result<Self> {
        if txs.is_empty() {
            return Err(Error::InvalidParameter("transmitter set is empty".into()));
        }
        let mut seen = std::collections::BTreeSet::new();
        for (id, loc) in &txs {
            if !seen.insert(id.as_str()) {
                return Err(Error::InvalidParameter(format!("duplicate transmitter id `{id}`")));
            }
            if !loc.is_finite() {
                return Err(Error::InvalidParameter(format!("transmitter `{id}` has non-finite location")));
            }
        }
        Ok(TransmitterSet { txs })
    }

    /// Ids `tx0, tx1, ...` in the given order.
    pub fn numbered(locations: &[Location]) -> Result<Self> {
        TransmitterSet::new(locations.iter().enumerate().map(|(i, l)| (format!("tx{i}"), *l)).collect())
    }

    pub fn len(&self) -> usize {
        self.txs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.txs.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, Location)> {
        self.txs.iter().map(|(id, l)| (id.as_str(), *l))
    }

    pub fn get(&self, id: &str) -> Option<Location> {
        self.txs.iter().find(|(t, _)| t == id).map(|(_, l)| *l)
    }

    pub fn locations(&self) -> Vec<Location> {
        self.txs.iter().map(|(_, l)| *l).collect()
    }
}

/// Mean of the normalized observation `o_i`: `-10 η log10(d / d0)`.
pub fn mean_observation(params: &PathLossParams, tx: Location, r: Location) -> Result<f64> {
    let d = distance(tx, r);
    if d < params.d_min {
        return Err(Error::SingularDistance { distance: d, floor: params.d_min });
    }
    Ok(-10.0 * params.eta * (d / params.d0).log10())
}

fn gaussian_log_density(x: f64, mean: f64, sigma: f64) -> f64 {
    let z = (x - mean) / sigma;
    -0.5 * (2.0 * PI).ln() - sigma.ln() - 0.5 * z * z
}

/// Log-likelihood of `o` at `r`: the sum over present readings of the
/// Gaussian log-density of `rssi - pt - K` around [`mean_observation`].
/// Distances are clamped to `d_min` so every location scores finitely.
pub fn pathloss_loglik(
    params: &PathLossParams,
    txs: &TransmitterSet,
    obs: &ObservationVector,
    r: Location,
) -> Result<f64> {
    let mut ll = 0.0;
    for (id, rssi) in obs.iter() {
        let tx = txs.get(id).ok_or_else(|| Error::UnknownTransmitter(id.to_string()))?;
        let d = distance(tx, r).max(params.d_min);
        let mean = -10.0 * params.eta * (d / params.d0).log10();
        ll += gaussian_log_density(rssi - params.pt_dbm - params.k_db, mean, params.sigma_db);
    }
    Ok(ll)
}

/// One reading per transmitter at `r`, deterministic in `seed`.
pub fn sample_rss(
    params: &PathLossParams,
    txs: &TransmitterSet,
    r: Location,
    seed: u64,
) -> Result<ObservationVector> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_rss_with(params, txs, r, &mut rng)
}

pub fn sample_rss_with<R: Rng + ?Sized>(
    params: &PathLossParams,
    txs: &TransmitterSet,
    r: Location,
    rng: &mut R,
) -> Result<ObservationVector> {
    let noise = Normal::new(0.0, params.sigma_db)
        .map_err(|e| Error::InvalidParameter(format!("noise distribution: {e}")))?;
    let mut readings = BTreeMap::new();
    for (id, tx) in txs.iter() {
        let mean = mean_observation(params, tx, r)?;
        let w: f64 = noise.sample(rng);
        readings.insert(id.to_string(), params.pt_dbm + params.k_db + mean + w);
    }
    ObservationVector::new(readings)
}

/// Path-loss model bound to a transmitter layout.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PathLossModel {
    pub params: PathLossParams,
    pub txs: TransmitterSet,
}

impl PathLossModel {
    pub fn new(params: PathLossParams, txs: TransmitterSet) -> Result<Self> {
        params.validate()?;
        Ok(PathLossModel { params, txs })
    }
}

impl ObservationModel for PathLossModel {
    fn log_likelihood(&self, obs: &ObservationVector, at: Location) -> Result<f64> {
        pathloss_loglik(&self.params, &self.txs, obs, at)
    }

    fn log_likelihoods(&self, obs: &ObservationVector, grid: &Grid) -> Result<Vec<f64>> {
        let p = &self.params;
        let readings = obs
            .iter()
            .map(|(id, rssi)| {
                self.txs
                    .get(id)
                    .map(|tx| (tx, rssi - p.pt_dbm - p.k_db))
                    .ok_or_else(|| Error::UnknownTransmitter(id.to_string()))
            })
            .collect::<Result<Vec<_>>>()?;
        let norm = readings.len() as f64 * (-0.5 * (2.0 * PI).ln() - p.sigma_db.ln());
        let inv_var = 1.0 / (p.sigma_db * p.sigma_db);
        Ok(grid
            .points()
            .iter()
            .map(|&r| {
                let mut q = 0.0;
                for &(tx, o) in &readings {
                    let d = distance(tx, r).max(p.d_min);
                    let dev = o + 10.0 * p.eta * (d / p.d0).log10();
                    q += dev * dev;
                }
                norm - 0.5 * q * inv_var
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::Space;

    fn params(eta: f64, sigma: f64) -> PathLossParams {
        PathLossParams::new(0.0, eta, sigma, 1.0, 0.0).unwrap()
    }

    #[test]
    fn distances() {
        assert_eq!(distance(Location::new(0.0, 0.0), Location::new(0.0, 0.0)), 0.0);
        assert_eq!(distance(Location::new(0.0, 0.0), Location::new(3.0, 4.0)), 5.0);
        assert!((distance(Location::new(1.0, 1.0), Location::new(2.0, 2.0)) - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn mean_observation_values() {
        let o = Location::new(0.0, 0.0);
        assert_eq!(mean_observation(&params(3.93, 1.0), o, Location::new(1.0, 0.0)).unwrap(), 0.0);
        let m = mean_observation(&params(3.93, 1.0), o, Location::new(10.0, 0.0)).unwrap();
        assert!((m + 39.3).abs() < 1e-12);
        let m = mean_observation(&params(2.0, 1.0), o, Location::new(100.0, 0.0)).unwrap();
        assert!((m + 40.0).abs() < 1e-12);
    }

    #[test]
    fn singular_distance() {
        let p = params(3.0, 1.0);
        let e = mean_observation(&p, Location::new(1.0, 1.0), Location::new(1.0, 1.005)).unwrap_err();
        assert!(matches!(e, Error::SingularDistance { .. }));
    }

    #[test]
    fn loglik_values() {
        let p = params(2.0, 1.0);
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0), Location::new(10.0, 0.0)]).unwrap();
        let r = Location::new(3.0, 4.0);
        let m0 = mean_observation(&p, txs.get("tx0").unwrap(), r).unwrap();
        let m1 = mean_observation(&p, txs.get("tx1").unwrap(), r).unwrap();
        let peak = (1.0 / (2.0 * PI).sqrt()).ln();

        let at_mean = ObservationVector::from_pairs([("tx0", m0)]).unwrap();
        assert!((pathloss_loglik(&p, &txs, &at_mean, r).unwrap() - peak).abs() < 1e-12);

        let one_sigma = ObservationVector::from_pairs([("tx0", m0 + 1.0)]).unwrap();
        assert!((pathloss_loglik(&p, &txs, &one_sigma, r).unwrap() - (peak - 0.5)).abs() < 1e-12);

        let second = ObservationVector::from_pairs([("tx1", m1 - 2.5)]).unwrap();
        let both = ObservationVector::from_pairs([("tx0", m0 + 1.0), ("tx1", m1 - 2.5)]).unwrap();
        let sum = pathloss_loglik(&p, &txs, &one_sigma, r).unwrap()
            + pathloss_loglik(&p, &txs, &second, r).unwrap();
        assert!((pathloss_loglik(&p, &txs, &both, r).unwrap() - sum).abs() < 1e-12);
    }

    #[test]
    fn unknown_transmitter() {
        let p = params(2.0, 1.0);
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0)]).unwrap();
        let obs = ObservationVector::from_pairs([("nope", -50.0)]).unwrap();
        assert_eq!(
            pathloss_loglik(&p, &txs, &obs, Location::new(1.0, 1.0)).unwrap_err(),
            Error::UnknownTransmitter("nope".into())
        );
    }

    #[test]
    fn batch_matches_pointwise() {
        let p = PathLossParams::new(-40.0, 3.0, 4.0, 1.0, 16.0).unwrap();
        let txs = TransmitterSet::numbered(&[Location::new(1.3, 2.2), Location::new(7.7, 0.4)]).unwrap();
        let model = PathLossModel::new(p, txs.clone()).unwrap();
        let grid = Grid::from_space(&Space::rect(8.0, 4.0, 0.5).unwrap());
        let obs = sample_rss(&p, &txs, Location::new(3.0, 3.0), 9).unwrap();
        let batch = model.log_likelihoods(&obs, &grid).unwrap();
        for (i, pt) in grid.points().iter().enumerate() {
            let single = pathloss_loglik(&p, &txs, &obs, *pt).unwrap();
            assert!((batch[i] - single).abs() < 1e-9 * single.abs().max(1.0));
        }
    }

    #[test]
    fn noiseless_sampling_and_determinism() {
        let p = params(3.0, 1e-9);
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0), Location::new(5.0, 5.0)]).unwrap();
        let r = Location::new(2.0, 1.0);
        let o = sample_rss(&p, &txs, r, 1).unwrap();
        for (id, v) in o.iter() {
            let m = mean_observation(&p, txs.get(id).unwrap(), r).unwrap();
            assert!((v - m).abs() < 1e-6);
        }
        let p = params(3.0, 4.0);
        assert_eq!(sample_rss(&p, &txs, r, 77).unwrap(), sample_rss(&p, &txs, r, 77).unwrap());
    }

    #[test]
    fn sample_std_matches_sigma() {
        let p = params(3.0, 4.0);
        let txs = TransmitterSet::numbered(&[Location::new(0.0, 0.0)]).unwrap();
        let r = Location::new(3.0, 4.0);
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let xs: Vec<f64> = (0..10_000)
            .map(|_| sample_rss_with(&p, &txs, r, &mut rng).unwrap().get("tx0").unwrap())
            .collect();
        let mean = xs.iter().sum::<f64>() / xs.len() as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (xs.len() - 1) as f64;
        assert!((var.sqrt() - 4.0).abs() < 0.05 * 4.0, "std {}", var.sqrt());
    }
}

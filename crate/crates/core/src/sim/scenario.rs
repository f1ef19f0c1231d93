use std::f64::consts::PI;
use std::sync::Arc;

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::density::{posterior, posterior_from_log_likelihoods, DensityGrid, ObservationVector};
use crate::error::{Error, Result};
use crate::geometry::{Grid, Location, Space};
use crate::models::{
    sample_rss_with, FingerprintDb, FingerprintModel, PathLossModel, PathLossParams, Scan, TransmitterSet,
};

/// How observations arise and are scored.
#[derive(Debug, Clone)]
pub enum ScenarioMode {
    PathLoss(PathLossModel),
    /// Posterior from a trained database; observations are replayed from
    /// held-out scans taken at the sampled survey location.
    Fingerprint {
        db: FingerprintDb,
        scans: Vec<Scan>,
    },
    /// No observation at all: every posterior equals the prior.
    PriorOnly,
}

/// Everything a Monte Carlo trial needs: the candidate grid, the prior the
/// true location is drawn from, and the observation model.
#[derive(Debug, Clone)]
pub struct Scenario {
    pub name: String,
    pub space: Space,
    pub prior: DensityGrid,
    pub mode: ScenarioMode,
    prior_cdf: Vec<f64>,
    /// Mean normalized observation per transmitter at every grid point.
    tx_means: Vec<(String, Vec<f64>)>,
    /// Replay scans grouped by grid index.
    scans_at: Vec<Vec<usize>>,
}

impl Scenario {
    fn assemble(name: &str, space: Space, prior: DensityGrid, mode: ScenarioMode) -> Result<Self> {
        let grid = prior.grid();
        let mut tx_means = Vec::new();
        let mut scans_at = Vec::new();
        match &mode {
            ScenarioMode::PathLoss(m) => {
                if let Some((id, _)) = m.txs.iter().find(|(_, l)| !space.contains(*l)) {
                    return Err(Error::InvalidParameter(format!(
                        "transmitter `{id}` lies outside the space"
                    )));
                }
                let p = &m.params;
                for (id, tx) in m.txs.iter() {
                    let means = grid
                        .points()
                        .iter()
                        .map(|r| -10.0 * p.eta * (tx.distance(r).max(p.d_min) / p.d0).log10())
                        .collect();
                    tx_means.push((id.to_string(), means));
                }
            }
            ScenarioMode::Fingerprint { scans, .. } => {
                scans_at = vec![Vec::new(); grid.len()];
                for (k, s) in scans.iter().enumerate() {
                    let i = grid
                        .index_of(s.location)
                        .ok_or(Error::UnknownLocation { x: s.location.x, y: s.location.y })?;
                    scans_at[i].push(k);
                }
            }
            ScenarioMode::PriorOnly => {}
        }
        let prior_cdf = prior.cumulative();
        Ok(Scenario { name: name.to_string(), space, prior, mode, prior_cdf, tx_means, scans_at })
    }

    /// Path-loss scenario over the grid of `space`, uniform prior unless
    /// one is given.
    pub fn path_loss(
        name: &str,
        space: Space,
        model: PathLossModel,
        prior: Option<DensityGrid>,
    ) -> Result<Self> {
        model.params.validate()?;
        let prior = match prior {
            Some(p) => p,
            None => DensityGrid::uniform(Arc::new(Grid::from_space(&space))),
        };
        Scenario::assemble(name, space, prior, ScenarioMode::PathLoss(model))
    }

    /// Fingerprint scenario: candidates are the survey locations, the prior
    /// is uniform over those that have replay scans.
    pub fn fingerprint(name: &str, space: Space, db: FingerprintDb, scans: Vec<Scan>) -> Result<Self> {
        if scans.is_empty() {
            return Err(Error::EmptyDataset);
        }
        let grid = Arc::new(db.grid()?);
        let weights = grid
            .points()
            .iter()
            .map(|p| if scans.iter().any(|s| s.location == *p) { 1.0 } else { 0.0 })
            .collect();
        let prior = DensityGrid::from_weights(grid, weights)?;
        Scenario::assemble(name, space, prior, ScenarioMode::Fingerprint { db, scans })
    }

    pub fn prior_only(name: &str, space: Space, prior: DensityGrid) -> Result<Self> {
        Scenario::assemble(name, space, prior, ScenarioMode::PriorOnly)
    }

    pub fn grid(&self) -> &Grid {
        self.prior.grid()
    }

    /// Largest possible error between two candidates.
    pub fn d_star(&self) -> f64 {
        self.prior.grid().d_star()
    }

    pub fn model(&self) -> Option<&PathLossModel> {
        match &self.mode {
            ScenarioMode::PathLoss(m) => Some(m),
            _ => None,
        }
    }

    pub fn params(&self) -> Option<&PathLossParams> {
        self.model().map(|m| &m.params)
    }

    pub fn transmitters(&self) -> Option<&TransmitterSet> {
        self.model().map(|m| &m.txs)
    }

    pub fn fingerprint_db(&self) -> Option<&FingerprintDb> {
        match &self.mode {
            ScenarioMode::Fingerprint { db, .. } => Some(db),
            _ => None,
        }
    }

    /// Grid index of a true location drawn from the prior.
    pub fn sample_truth<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.prior_cdf.last().expect("nonempty prior");
        let u: f64 = rng.random::<f64>() * total;
        let i = self.prior_cdf.partition_point(|&c| c <= u);
        if i < self.prior_cdf.len() {
            i
        } else {
            self.prior.mass().iter().rposition(|&m| m > 0.0).expect("prior has mass")
        }
    }

    /// Observation generated at grid index `truth`; `None` in prior-only mode.
    pub fn sample_observation<R: Rng + ?Sized>(
        &self,
        truth: usize,
        rng: &mut R,
    ) -> Result<Option<ObservationVector>> {
        let r = self.grid().point(truth);
        match &self.mode {
            ScenarioMode::PathLoss(m) => sample_rss_with(&m.params, &m.txs, r, rng).map(Some),
            ScenarioMode::Fingerprint { scans, .. } => {
                let pool = &self.scans_at[truth];
                if pool.is_empty() {
                    return Err(Error::InsufficientData(format!("no replay scan at {r}")));
                }
                let k = pool[rng.random_range(0..pool.len())];
                Ok(Some(scans[k].obs.clone()))
            }
            ScenarioMode::PriorOnly => Ok(None),
        }
    }

    /// Posterior over the scenario grid given an observation.
    pub fn posterior(&self, obs: Option<&ObservationVector>) -> Result<DensityGrid> {
        match (&self.mode, obs) {
            (ScenarioMode::PriorOnly, _) => Ok(self.prior.clone()),
            (_, None) => Err(Error::EmptyObservation),
            (ScenarioMode::PathLoss(m), Some(o)) => {
                posterior_from_log_likelihoods(&self.prior, &self.path_loss_lls(m, o)?)
            }
            (ScenarioMode::Fingerprint { db, .. }, Some(o)) => {
                posterior(&self.prior, &FingerprintModel { db }, o)
            }
        }
    }

    fn path_loss_lls(&self, m: &PathLossModel, obs: &ObservationVector) -> Result<Vec<f64>> {
        let p = &m.params;
        let mut rows = Vec::with_capacity(obs.len());
        for (id, rssi) in obs.iter() {
            let means = self
                .tx_means
                .iter()
                .find(|(t, _)| t == id)
                .map(|(_, v)| v)
                .ok_or_else(|| Error::UnknownTransmitter(id.to_string()))?;
            rows.push((means, rssi - p.pt_dbm - p.k_db));
        }
        let norm = rows.len() as f64 * (-0.5 * (2.0 * PI).ln() - p.sigma_db.ln());
        let inv_var = 1.0 / (p.sigma_db * p.sigma_db);
        let mut q = vec![0.0; self.grid().len()];
        for (means, o) in rows {
            for (qi, mu) in q.iter_mut().zip(means) {
                let dev = o - mu;
                *qi += dev * dev;
            }
        }
        Ok(q.into_iter().map(|v| norm - 0.5 * v * inv_var).collect())
    }
}

/// Transmitters placed uniformly at random inside `space`.
pub fn random_transmitters(space: &Space, n: usize, seed: u64) -> Result<TransmitterSet> {
    if n == 0 {
        return Err(Error::InvalidParameter("need at least one transmitter".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let locs: Vec<Location> = (0..n)
        .map(|_| {
            let x = space.x_min() + rng.random::<f64>() * space.width();
            let y = space.y_min() + rng.random::<f64>() * space.height();
            Location::new(x, y)
        })
        .collect();
    TransmitterSet::numbered(&locs)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::density::ObservationModel;

    fn small() -> Scenario {
        let space = Space::rect(6.0, 4.0, 0.5).unwrap();
        let txs = random_transmitters(&space, 3, 9).unwrap();
        let params = PathLossParams::new(-40.0, 3.0, 4.0, 1.0, 0.0).unwrap();
        Scenario::path_loss("small", space, PathLossModel::new(params, txs).unwrap(), None).unwrap()
    }

    #[test]
    fn cached_loglik_matches_model() {
        let s = small();
        let m = s.model().unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let o = s.sample_observation(20, &mut rng).unwrap().unwrap();
        let fast = s.path_loss_lls(m, &o).unwrap();
        let slow = m.log_likelihoods(&o, s.grid()).unwrap();
        for (a, b) in fast.iter().zip(&slow) {
            assert!((a - b).abs() < 1e-9 * b.abs().max(1.0));
        }
    }

    #[test]
    fn truth_follows_prior() {
        let s = small();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let n = s.grid().len();
        let mut counts = vec![0usize; n];
        for _ in 0..n * 200 {
            counts[s.sample_truth(&mut rng)] += 1;
        }
        assert!(counts.iter().all(|&c| c > 100 && c < 320));
    }

    #[test]
    fn truth_skips_zero_mass() {
        let g = Arc::new(Grid::line(0.0, 3.0, 1.0).unwrap());
        let prior = DensityGrid::from_weights(g, vec![0.0, 1.0, 0.0, 1.0]).unwrap();
        let s = Scenario::prior_only("p", Space::rect(3.0, 1.0, 1.0).unwrap(), prior).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..200 {
            let i = s.sample_truth(&mut rng);
            assert!(i == 1 || i == 3);
        }
    }

    #[test]
    fn transmitters_inside_and_reproducible() {
        let space = Space::rect(50.0, 70.0, 1.0).unwrap();
        let a = random_transmitters(&space, 16, 7).unwrap();
        assert_eq!(a, random_transmitters(&space, 16, 7).unwrap());
        assert!(a.iter().all(|(_, l)| space.contains(l)));
    }
}

//! Synthetic office survey traces and the fingerprint train/test protocol.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use super::scenario::Scenario;
use crate::error::{Error, Result};
use crate::eval::{mean_and_se, trial_rng, Algorithm, Trial};
use crate::geometry::{Location, Space};
use crate::models::fingerprint::{DEFAULT_BIN_WIDTH, DEFAULT_SMOOTHING};
use crate::models::{fingerprint_train, Scan, TraceDataset, TraceRecord};

/// Survey layout: a grid of square cells with one survey point at each
/// cell center, and access points scattered around the room.
#[derive(Debug, Clone, PartialEq)]
pub struct OfficeLayout {
    pub cols: usize,
    pub rows: usize,
    pub cell: f64,
    pub access_points: usize,
    pub scans_per_location: usize,
    pub scan_interval_ms: u64,
}

impl Default for OfficeLayout {
    fn default() -> Self {
        OfficeLayout {
            cols: 4,
            rows: 2,
            cell: 1.0,
            access_points: 10,
            scans_per_location: 250,
            scan_interval_ms: 400,
        }
    }
}

impl OfficeLayout {
    pub fn space(&self) -> Result<Space> {
        Space::rect(self.cols as f64 * self.cell, self.rows as f64 * self.cell, self.cell / 2.0)
    }

    /// Cell centers in `(y, x)` order.
    pub fn survey_points(&self) -> Vec<Location> {
        let h = self.cell / 2.0;
        (0..self.rows)
            .flat_map(|j| (0..self.cols).map(move |i| (i, j)))
            .map(|(i, j)| Location::new(h + i as f64 * self.cell, h + j as f64 * self.cell))
            .collect()
    }
}

/// Reading noise around each location's mean RSS.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum NoiseProfile {
    Gaussian {
        sigma_db: f64,
    },
    /// With probability `fade_prob` the reading drops by `fade_db`, on top
    /// of Gaussian jitter.
    Bimodal {
        fade_db: f64,
        fade_prob: f64,
        sigma_db: f64,
    },
}

impl NoiseProfile {
    /// Readings tightly concentrated around the mean.
    pub fn low() -> Self {
        NoiseProfile::Gaussian { sigma_db: 1.5 }
    }

    /// Two well-separated modes per access point.
    pub fn high() -> Self {
        NoiseProfile::Bimodal { fade_db: 10.0, fade_prob: 0.5, sigma_db: 1.5 }
    }

    fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        match *self {
            NoiseProfile::Gaussian { sigma_db } => Normal::new(0.0, sigma_db).expect("sigma > 0").sample(rng),
            NoiseProfile::Bimodal { fade_db, fade_prob, sigma_db } => {
                let fade = if rng.random::<f64>() < fade_prob { -fade_db } else { 0.0 };
                fade + Normal::new(0.0, sigma_db).expect("sigma > 0").sample(rng)
            }
        }
    }
}

/// Survey traces for `layout`: mean RSS from a log-distance law with a
/// static per-(location, access point) offset, readings rounded to whole
/// dBm, one timestamped scan every `scan_interval_ms`.
pub fn office_traces(layout: &OfficeLayout, profile: NoiseProfile, seed: u64) -> Result<TraceDataset> {
    if layout.cols == 0 || layout.rows == 0 || layout.access_points == 0 || layout.scans_per_location == 0 {
        return Err(Error::InvalidParameter("office layout needs cells, access points and scans".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (w, h) = (layout.cols as f64 * layout.cell, layout.rows as f64 * layout.cell);
    let aps: Vec<Location> = (0..layout.access_points)
        .map(|_| Location::new(rng.random_range(-2.0 * w..3.0 * w), rng.random_range(-4.0 * h..5.0 * h)))
        .collect();
    let offset = Normal::new(0.0, 3.0).expect("valid");
    let mut records = Vec::new();
    for loc in layout.survey_points() {
        let means: Vec<f64> = aps
            .iter()
            .map(|ap| -30.0 - 30.0 * ap.distance(&loc).max(0.5).log10() + offset.sample(&mut rng))
            .collect();
        for s in 0..layout.scans_per_location {
            let ts = (s as u64 * layout.scan_interval_ms).to_string();
            for (k, m) in means.iter().enumerate() {
                records.push(TraceRecord {
                    rx: loc,
                    tx_id: format!("ap{k}"),
                    rssi: (m + profile.sample(&mut rng)).round(),
                    timestamp: Some(ts.clone()),
                });
            }
        }
    }
    TraceDataset::new(records)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Split {
    pub train: Vec<Scan>,
    pub test: Vec<Scan>,
}

/// Random split holding out `test_fraction` of the scans at every survey
/// location (at least one each).
pub fn split_by_location<R: Rng + ?Sized>(scans: &[Scan], test_fraction: f64, rng: &mut R) -> Result<Split> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidParameter(format!("test fraction {test_fraction} must be in (0, 1)")));
    }
    let mut locs: Vec<Location> = Vec::new();
    for s in scans {
        if !locs.contains(&s.location) {
            locs.push(s.location);
        }
    }
    let mut split = Split { train: Vec::new(), test: Vec::new() };
    for loc in locs {
        let mut here: Vec<&Scan> = scans.iter().filter(|s| s.location == loc).collect();
        if here.len() < 2 {
            return Err(Error::InsufficientData(format!("location {loc} has fewer than two scans")));
        }
        here.shuffle(rng);
        let k = ((here.len() as f64 * test_fraction).round() as usize).clamp(1, here.len() - 1);
        split.test.extend(here[..k].iter().map(|s| (*s).clone()));
        split.train.extend(here[k..].iter().map(|s| (*s).clone()));
    }
    Ok(split)
}

/// Mean distance error of each algorithm on `test` after training a
/// fingerprint database on `train`.
pub fn fingerprint_errors(
    space: Space,
    train: &[Scan],
    test: &[Scan],
    algorithms: &[Algorithm],
) -> Result<Vec<f64>> {
    let db = fingerprint_train(&TraceDataset::from_scans(train)?, DEFAULT_BIN_WIDTH, DEFAULT_SMOOTHING)?;
    let scenario = Scenario::fingerprint("survey", space, db, test.to_vec())?;
    let mut sums = vec![0.0; algorithms.len()];
    for (index, s) in test.iter().enumerate() {
        let post = scenario.posterior(Some(&s.obs))?;
        let trial = Trial { index, truth: s.location, obs: Some(s.obs.clone()), post };
        for (a, alg) in algorithms.iter().enumerate() {
            sums[a] += alg.locate(&trial, &scenario)?.distance(&s.location);
        }
    }
    Ok(sums.into_iter().map(|v| v / test.len() as f64).collect())
}

#[derive(Debug, Clone, PartialEq)]
pub struct LearningCurve {
    pub fractions: Vec<f64>,
    pub algorithms: Vec<String>,
    /// `mean_error[a][f]`, averaged over repeats.
    pub mean_error: Vec<Vec<f64>>,
    pub std_error: Vec<Vec<f64>>,
    /// Least-squares slope of mean error against fraction.
    pub slope: Vec<f64>,
    pub repeats: usize,
}

impl LearningCurve {
    /// `fraction,<algorithm>...` rows of mean error.
    pub fn to_csv(&self) -> String {
        let mut s = format!("fraction,{}\n", self.algorithms.join(","));
        for (f, frac) in self.fractions.iter().enumerate() {
            s.push_str(&format!("{frac}"));
            for a in 0..self.algorithms.len() {
                s.push_str(&format!(",{:.6}", self.mean_error[a][f]));
            }
            s.push('\n');
        }
        s
    }
}

fn slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return 0.0;
    }
    xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>() / sxx
}

/// Mean error as the training set grows.
///
/// Each repeat holds out 10% of the scans per location, then trains on the
/// first `fraction` of a shuffled remainder (nested across fractions) and
/// scores the held-out scans.
pub fn learning_curve(
    data: &TraceDataset,
    space: Space,
    fractions: &[f64],
    repeats: usize,
    algorithms: &[Algorithm],
    seed: u64,
) -> Result<LearningCurve> {
    if fractions.is_empty() || fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
        return Err(Error::InvalidParameter("fractions must lie in (0, 1]".into()));
    }
    if repeats == 0 {
        return Err(Error::InvalidParameter("repeats must be at least 1".into()));
    }
    let scans = data.scans();
    let mut per_repeat = vec![vec![Vec::with_capacity(repeats); fractions.len()]; algorithms.len()];
    for r in 0..repeats {
        let mut rng = trial_rng(seed, r);
        let split = split_by_location(&scans, 0.1, &mut rng)?;
        let mut by_loc: Vec<Vec<Scan>> = Vec::new();
        let mut locs: Vec<Location> = Vec::new();
        for s in split.train {
            match locs.iter().position(|l| *l == s.location) {
                Some(i) => by_loc[i].push(s),
                None => {
                    locs.push(s.location);
                    by_loc.push(vec![s]);
                }
            }
        }
        for group in by_loc.iter_mut() {
            group.shuffle(&mut rng);
        }
        for (f, &frac) in fractions.iter().enumerate() {
            let train: Vec<Scan> = by_loc
                .iter()
                .flat_map(|g| g[..((g.len() as f64 * frac).ceil() as usize).max(1)].iter().cloned())
                .collect();
            let errs = fingerprint_errors(space, &train, &split.test, algorithms)?;
            for (a, e) in errs.into_iter().enumerate() {
                per_repeat[a][f].push(e);
            }
        }
    }
    let mut mean_error = Vec::new();
    let mut std_error = Vec::new();
    let mut slopes = Vec::new();
    for per_frac in &per_repeat {
        let (m, s): (Vec<f64>, Vec<f64>) = per_frac.iter().map(|v| mean_and_se(v)).unzip();
        slopes.push(slope(fractions, &m));
        mean_error.push(m);
        std_error.push(s);
    }
    Ok(LearningCurve {
        fractions: fractions.to_vec(),
        algorithms: algorithms.iter().map(Algorithm::name).collect(),
        mean_error,
        std_error,
        slope: slopes,
        repeats,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small_layout() -> OfficeLayout {
        OfficeLayout { scans_per_location: 40, ..OfficeLayout::default() }
    }

    #[test]
    fn layout_matches_survey() {
        let l = OfficeLayout::default();
        let pts = l.survey_points();
        assert_eq!(pts.len(), 8);
        assert_eq!(pts[0], Location::new(0.5, 0.5));
        assert_eq!(pts[7], Location::new(3.5, 1.5));
        let d = office_traces(&l, NoiseProfile::low(), 1).unwrap();
        assert_eq!(d.len(), 8 * 250 * 10);
        assert_eq!(d.scans().len(), 8 * 250);
        assert_eq!(d.transmitters().len(), 10);
    }

    #[test]
    fn split_is_stratified() {
        let d = office_traces(&small_layout(), NoiseProfile::high(), 2).unwrap();
        let scans = d.scans();
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let s = split_by_location(&scans, 0.1, &mut rng).unwrap();
        assert_eq!(s.test.len(), 8 * 4);
        assert_eq!(s.train.len(), 8 * 36);
        for p in small_layout().survey_points() {
            assert_eq!(s.test.iter().filter(|x| x.location == p).count(), 4);
        }
    }

    #[test]
    fn learning_curve_is_reproducible() {
        let l = small_layout();
        let d = office_traces(&l, NoiseProfile::high(), 3).unwrap();
        let algs = [Algorithm::Map, Algorithm::Fing];
        let a = learning_curve(&d, l.space().unwrap(), &[1.0], 2, &algs, 9).unwrap();
        let b = learning_curve(&d, l.space().unwrap(), &[1.0], 2, &algs, 9).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.mean_error[0].len(), 1);
        assert!(a.to_csv().starts_with("fraction,MAP,FING\n1,"));
    }

    #[test]
    fn slope_of_line() {
        assert!((slope(&[0.0, 1.0, 2.0], &[3.0, 1.0, -1.0]) + 2.0).abs() < 1e-12);
    }
}

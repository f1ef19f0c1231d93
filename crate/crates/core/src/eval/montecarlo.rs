//! Counter-seeded Monte Carlo trials and the algorithm suite runner.
//!
//! Trial `k` draws from its own ChaCha stream (`seed`, stream `k`), trials
//! are mapped in parallel and collected in index order, and every reduction
//! runs sequentially afterwards. Results therefore do not depend on the
//! number of worker threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::curve::{trapezoid, ErrorCdfCurve};
use super::table::{Metric, MetricMode, PerformanceTable};
use crate::density::{DensityGrid, ObservationVector};
use crate::error::{Error, Result};
use crate::estimators::{
    capture_probability, estimate, expected_cost, fing_estimate, map_estimate, max_capture_probability,
    mede_estimate, mmse_estimate, mpd_estimate, CostFunction, RADIUS_SLACK,
};
use crate::geometry::Location;
use crate::sim::Scenario;

/// A localization algorithm the suite can run on a trial.
#[derive(Debug, Clone, PartialEq)]
pub enum Algorithm {
    Map,
    Mmse,
    Mede,
    Mpd(f64),
    /// Grid argmin of an arbitrary distance cost.
    Cost(CostFunction),
    /// Ignores the data and always answers the same location.
    Fixed(Location),
    /// Nearest mean fingerprint; needs a fingerprint scenario.
    Fing,
}

impl Algorithm {
    pub fn name(&self) -> String {
        match self {
            Algorithm::Map => "MAP".into(),
            Algorithm::Mmse => "MMSE".into(),
            Algorithm::Mede => "MEDE".into(),
            Algorithm::Mpd(d) => format!("MP({d})"),
            Algorithm::Cost(c) => format!("argmin {}", c.name()),
            Algorithm::Fixed(l) => format!("fixed{l}"),
            Algorithm::Fing => "FING".into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        match self {
            Algorithm::Mpd(d) => CostFunction::within_radius(*d).map(|_| ()),
            Algorithm::Cost(c) => c.validate(),
            Algorithm::Fixed(l) if !l.is_finite() => {
                Err(Error::InvalidParameter("fixed location must be finite".into()))
            }
            _ => Ok(()),
        }
    }

    pub fn locate(&self, trial: &Trial, scenario: &Scenario) -> Result<Location> {
        let post = &trial.post;
        Ok(match self {
            Algorithm::Map => map_estimate(post).location,
            Algorithm::Mmse => mmse_estimate(post).location,
            Algorithm::Mede => mede_estimate(post).location,
            Algorithm::Mpd(d) => mpd_estimate(post, *d)?.location,
            Algorithm::Cost(c) => estimate(post, c).location,
            Algorithm::Fixed(l) => *l,
            Algorithm::Fing => {
                let db = scenario
                    .fingerprint_db()
                    .ok_or_else(|| Error::InvalidParameter("FING needs a fingerprint scenario".into()))?;
                let obs = trial.obs.as_ref().ok_or(Error::EmptyObservation)?;
                fing_estimate(db, obs)?.location
            }
        })
    }
}

/// One sampled truth, its observation and the resulting posterior.
#[derive(Debug, Clone)]
pub struct Trial {
    pub index: usize,
    pub truth: Location,
    pub obs: Option<ObservationVector>,
    pub post: DensityGrid,
}

/// RNG for trial `index` under master `seed`.
pub fn trial_rng(seed: u64, index: usize) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    rng
}

pub fn draw_trial(scenario: &Scenario, seed: u64, index: usize) -> Result<Trial> {
    let mut rng = trial_rng(seed, index);
    let t = scenario.sample_truth(&mut rng);
    let obs = scenario.sample_observation(t, &mut rng)?;
    let post = scenario.posterior(obs.as_ref())?;
    Ok(Trial { index, truth: scenario.grid().point(t), obs, post })
}

/// Failures that exclude a trial instead of aborting the run.
fn is_trial_failure(e: &Error) -> bool {
    matches!(
        e,
        Error::AllZeroLikelihood
            | Error::SingularDistance { .. }
            | Error::NoCommonTransmitters
            | Error::InsufficientData(_)
    )
}

/// Runs `f` on every trial in parallel. Returns the successful outputs in
/// trial order and the number of excluded trials.
pub fn map_trials<T, F>(scenario: &Scenario, trials: usize, seed: u64, f: F) -> Result<(Vec<T>, usize)>
where
    T: Send,
    F: Fn(&Trial) -> Result<T> + Sync,
{
    if trials == 0 {
        return Err(Error::InvalidParameter("trials must be at least 1".into()));
    }
    let outcomes: Vec<Result<T>> =
        (0..trials).into_par_iter().map(|k| draw_trial(scenario, seed, k).and_then(|t| f(&t))).collect();
    let mut ok = Vec::with_capacity(trials);
    let mut failures = 0;
    for o in outcomes {
        match o {
            Ok(v) => ok.push(v),
            Err(e) if is_trial_failure(&e) => failures += 1,
            Err(e) => return Err(e),
        }
    }
    Ok((ok, failures))
}

/// Radii for the P(ε) and P(d) metrics.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricParams {
    pub epsilon: f64,
    pub d: f64,
    pub mode: MetricMode,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuiteConfig {
    pub trials: usize,
    pub seed: u64,
    pub d_grid: Vec<f64>,
    pub fstar: bool,
    pub metrics: Option<MetricParams>,
}

/// Per-trial outputs of a suite run, kept for curves, tables and paired
/// standard errors.
#[derive(Debug, Clone)]
pub struct SuiteRun {
    pub algorithms: Vec<Algorithm>,
    pub d_grid: Vec<f64>,
    /// `errors[a][t]`: error of algorithm `a` on successful trial `t`.
    pub errors: Vec<Vec<f64>>,
    /// `fstar_probs[t][k]`: best capture probability at `d_grid[k]`.
    pub fstar_probs: Option<Vec<Vec<f64>>>,
    /// `metrics[a][t][m]` in [`Metric::ALL`] order.
    pub metrics: Option<Vec<Vec<[f64; 5]>>>,
    pub failures: usize,
}

struct TrialOutput {
    errors: Vec<f64>,
    hits: Option<Vec<f64>>,
    metrics: Option<Vec<[f64; 5]>>,
}

/// Success probability of the per-distance optimal estimate at each `d`,
/// given the posterior: `max_c P(|X - c| <= d | obs)`. Averaging it over
/// trials estimates `F*` with less variance than scoring the estimate
/// against the drawn truth.
pub fn fstar_probabilities(post: &DensityGrid, d_grid: &[f64]) -> Vec<f64> {
    d_grid.iter().map(|&d| max_capture_probability(post, d.max(0.0))).collect()
}

/// Posterior mass interpolated at `at`: bilinear on lattices, nearest
/// point otherwise.
pub fn density_at(post: &DensityGrid, at: Location) -> f64 {
    let grid = post.grid();
    let mass = post.mass();
    let Some(l) = grid.lattice() else {
        return mass[grid.nearest_index(at)];
    };
    let bracket = |axis: &[f64], v: f64| -> (usize, usize, f64) {
        let n = axis.len();
        if n == 1 || v <= axis[0] {
            return (0, 0, 0.0);
        }
        if v >= axis[n - 1] {
            return (n - 1, n - 1, 0.0);
        }
        let k = axis.partition_point(|&a| a <= v).min(n - 1);
        let (a0, a1) = (axis[k - 1], axis[k]);
        (k - 1, k, (v - a0) / (a1 - a0))
    };
    let (x0, x1, tx) = bracket(&l.xs, at.x);
    let (y0, y1, ty) = bracket(&l.ys, at.y);
    let m = |ix, iy| mass[l.index(ix, iy)];
    (1.0 - ty) * ((1.0 - tx) * m(x0, y0) + tx * m(x1, y0)) + ty * ((1.0 - tx) * m(x0, y1) + tx * m(x1, y1))
}

fn trial_metrics(post: &DensityGrid, est: Location, truth: Location, p: &MetricParams) -> [f64; 5] {
    let lik = density_at(post, est);
    match p.mode {
        MetricMode::Expected => [
            lik,
            capture_probability(post, est, p.epsilon),
            capture_probability(post, est, p.d),
            expected_cost(post, est, &CostFunction::SquaredDistance),
            expected_cost(post, est, &CostFunction::Distance),
        ],
        MetricMode::Realized => {
            let e = est.distance(&truth);
            let hit = |r: f64| if e <= r + RADIUS_SLACK { 1.0 } else { 0.0 };
            [lik, hit(p.epsilon), hit(p.d), e * e, e]
        }
    }
}

pub fn run_suite(scenario: &Scenario, algorithms: &[Algorithm], cfg: &SuiteConfig) -> Result<SuiteRun> {
    for a in algorithms {
        a.validate()?;
    }
    if let Some(p) = &cfg.metrics {
        if !(p.epsilon > 0.0) || !(p.d > 0.0) {
            return Err(Error::InvalidParameter("epsilon and d must be positive".into()));
        }
    }
    let (outs, failures) = map_trials(scenario, cfg.trials, cfg.seed, |t| {
        let mut errors = Vec::with_capacity(algorithms.len());
        let mut metrics = cfg.metrics.map(|_| Vec::with_capacity(algorithms.len()));
        for a in algorithms {
            let est = a.locate(t, scenario)?;
            errors.push(est.distance(&t.truth));
            if let (Some(m), Some(p)) = (metrics.as_mut(), cfg.metrics.as_ref()) {
                m.push(trial_metrics(&t.post, est, t.truth, p));
            }
        }
        let hits = cfg.fstar.then(|| fstar_probabilities(&t.post, &cfg.d_grid));
        Ok(TrialOutput { errors, hits, metrics })
    })?;
    if outs.is_empty() {
        return Err(Error::InsufficientData(format!("all {failures} trials failed")));
    }
    let n_alg = algorithms.len();
    let mut errors = vec![Vec::with_capacity(outs.len()); n_alg];
    let mut metrics = cfg.metrics.map(|_| vec![Vec::with_capacity(outs.len()); n_alg]);
    let mut hits = cfg.fstar.then(|| Vec::with_capacity(outs.len()));
    for o in outs {
        for (a, e) in o.errors.into_iter().enumerate() {
            errors[a].push(e);
        }
        if let (Some(all), Some(m)) = (metrics.as_mut(), o.metrics) {
            for (a, row) in m.into_iter().enumerate() {
                all[a].push(row);
            }
        }
        if let (Some(all), Some(h)) = (hits.as_mut(), o.hits) {
            all.push(h);
        }
    }
    Ok(SuiteRun {
        algorithms: algorithms.to_vec(),
        d_grid: cfg.d_grid.clone(),
        errors,
        fstar_probs: hits,
        metrics,
        failures,
    })
}

impl SuiteRun {
    pub fn trials(&self) -> usize {
        self.errors.first().map(Vec::len).or_else(|| self.fstar_probs.as_ref().map(Vec::len)).unwrap_or(0)
    }

    pub fn curve(&self, a: usize) -> Result<ErrorCdfCurve> {
        Ok(ErrorCdfCurve::from_errors(&self.errors[a], &self.d_grid)?.with_failures(self.failures))
    }

    pub fn curves(&self) -> Result<Vec<ErrorCdfCurve>> {
        (0..self.algorithms.len()).map(|a| self.curve(a)).collect()
    }

    pub fn fstar(&self) -> Option<Result<ErrorCdfCurve>> {
        self.fstar_probs
            .as_ref()
            .map(|h| Ok(ErrorCdfCurve::from_trial_means(h, &self.d_grid)?.with_failures(self.failures)))
    }

    pub fn table(&self) -> Option<PerformanceTable> {
        let m = self.metrics.as_ref()?;
        let names = self.algorithms.iter().map(Algorithm::name).collect();
        Some(PerformanceTable::from_samples(names, Metric::ALL.to_vec(), m))
    }

    /// `Θ_a - Θ_ref` and its standard error from paired per-trial areas.
    /// The F* term cancels, leaving the area between the two error steps.
    pub fn theta_gap(&self, a: usize, reference: usize) -> (f64, f64) {
        let per_trial: Vec<f64> = self.errors[a]
            .iter()
            .zip(&self.errors[reference])
            .map(|(&ea, &er)| {
                trapezoid(&self.d_grid, |k| {
                    let d = self.d_grid[k] + RADIUS_SLACK;
                    (er <= d) as u8 as f64 - (ea <= d) as u8 as f64
                })
            })
            .collect();
        mean_and_se(&per_trial)
    }
}

/// Sample mean and its standard error.
pub fn mean_and_se(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    if xs.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = xs.iter().sum::<f64>() / n;
    if xs.len() < 2 {
        return (mean, 0.0);
    }
    let var = xs.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / (n - 1.0);
    (mean, (var / n).sqrt())
}

/// Monte Carlo error CDF of one algorithm.
pub fn error_cdf(
    algorithm: &Algorithm,
    scenario: &Scenario,
    trials: usize,
    seed: u64,
    d_grid: &[f64],
) -> Result<ErrorCdfCurve> {
    let cfg = SuiteConfig { trials, seed, d_grid: d_grid.to_vec(), fstar: false, metrics: None };
    run_suite(scenario, std::slice::from_ref(algorithm), &cfg)?.curve(0)
}

/// Monte Carlo estimate of the upper envelope `F*`.
pub fn fstar(scenario: &Scenario, d_grid: &[f64], trials: usize, seed: u64) -> Result<ErrorCdfCurve> {
    let cfg = SuiteConfig { trials, seed, d_grid: d_grid.to_vec(), fstar: true, metrics: None };
    run_suite(scenario, &[], &cfg)?.fstar().expect("requested")
}

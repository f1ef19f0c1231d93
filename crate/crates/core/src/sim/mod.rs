//! Scenario construction, experiment runs, path-loss fitting and the
//! fingerprint learning-curve protocol.

mod experiment;
mod fit;
mod office;
mod scenario;

use std::sync::Arc;

use crate::density::DensityGrid;
use crate::error::Result;
use crate::geometry::{Grid, Space};
use crate::models::{PathLossModel, PathLossParams};

pub use experiment::{run_experiment, ExperimentConfig, ExperimentOutput, ExperimentPaths};
pub use fit::{fit_pathloss, PathLossFit};
pub use office::{
    fingerprint_errors, learning_curve, office_traces, split_by_location, LearningCurve, NoiseProfile,
    OfficeLayout, Split,
};
pub use scenario::{random_transmitters, Scenario, ScenarioMode};

/// Indoor floor used for the large simulation: 50 m × 70 m, sixteen
/// transmitters at random, `Pt = 16 dBm`, path loss 39.13 dB, `η = 3.93`,
/// `σ = 16.16 dB`, `d0 = 1 m`.
pub fn build_paper_scenario(seed: u64, resolution: f64) -> Result<Scenario> {
    let space = Space::rect(50.0, 70.0, resolution)?;
    let txs = random_transmitters(&space, 16, seed)?;
    let params = PathLossParams::new(-39.13, 3.93, 16.16, 1.0, 16.0)?;
    Scenario::path_loss("paper", space, PathLossModel::new(params, txs)?, None)
}

/// Desk-scale room: 16 m × 16 m, four random transmitters, `η = 3`,
/// `σ = 4 dB`, `K = -40 dB`.
pub fn build_desk_scenario(seed: u64, resolution: f64) -> Result<Scenario> {
    let space = Space::rect(16.0, 16.0, resolution)?;
    let txs = random_transmitters(&space, 4, seed)?;
    let params = PathLossParams::new(-40.0, 3.0, 4.0, 1.0, 0.0)?;
    Scenario::path_loss("desk", space, PathLossModel::new(params, txs)?, None)
}

/// Standard deviation of the symmetric demo's prior, in meters.
pub const SYMMETRIC_DEMO_STD: f64 = 1.5;

/// 10 m × 10 m square whose posterior is always a centered Gaussian bump,
/// so every trial sees the same symmetric unimodal posterior.
pub fn build_symmetric_demo(resolution: f64) -> Result<Scenario> {
    let space = Space::rect(10.0, 10.0, resolution)?;
    let grid = Arc::new(Grid::from_space(&space));
    let prior = DensityGrid::gaussian(grid, space.center(), SYMMETRIC_DEMO_STD)?;
    Scenario::prior_only("symmetric", space, prior)
}

/// One-dimensional density on `[-1, 1]`: `0.8 (1 + x)` left of the origin
/// and `0.8 (1 - x / 2)` right of it. Its mode sits at 0 while the mean,
/// median and window maximizers are pulled right by the longer tail.
pub fn skewed_line_posterior(resolution: f64) -> Result<DensityGrid> {
    let grid = Arc::new(Grid::line(-1.0, 1.0, resolution)?);
    let weights = grid
        .points()
        .iter()
        .map(|p| if p.x < 0.0 { 0.8 * (1.0 + p.x) } else { 0.8 * (1.0 - p.x / 2.0) })
        .collect();
    DensityGrid::from_weights(grid, weights)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn paper_scenario_parameters() {
        let s = build_paper_scenario(7, 1.0).unwrap();
        assert_eq!((s.space.width(), s.space.height()), (50.0, 70.0));
        assert_eq!(s.transmitters().unwrap().len(), 16);
        let p = s.params().unwrap();
        assert_eq!((p.sigma_db, p.eta, p.k_db, p.pt_dbm, p.d0), (16.16, 3.93, -39.13, 16.0, 1.0));
        let again = build_paper_scenario(7, 1.0).unwrap();
        assert_eq!(s.transmitters(), again.transmitters());
    }

    #[test]
    fn skewed_line_peaks_at_origin() {
        let post = skewed_line_posterior(0.01).unwrap();
        let m = post.mass();
        let top = m.iter().copied().enumerate().fold((0, 0.0), |b, (i, v)| if v > b.1 { (i, v) } else { b });
        assert!(post.grid().point(top.0).x.abs() < 1e-9);
        assert!((post.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn symmetric_demo_is_centered() {
        let s = build_symmetric_demo(0.5).unwrap();
        let c = s.space.center();
        let i = s.grid().index_of(c).unwrap();
        let best = s.prior.mass().iter().copied().fold(0.0, f64::max);
        assert_eq!(s.prior.mass()[i], best);
    }
}

//! Error CDFs, stochastic dominance, the envelope `F*`, the area gap Θ,
//! the attainability test and normalized performance tables.

mod curve;
mod dominance;
mod montecarlo;
mod table;

use std::collections::BTreeSet;

use crate::density::DensityGrid;
use crate::estimators::mpd_argmax_indices;
use crate::geometry::Location;

pub use curve::{default_d_grid, expected_cost_from_curve, theta_area, ErrorCdfCurve, DEFAULT_D_POINTS};
pub use dominance::{
    cost_ordering_slack, curve_costs, dominance, witness_costs, Dominance, DominanceVerdict, Tolerance,
    STRICT_RUN,
};
pub use montecarlo::{
    density_at, draw_trial, error_cdf, fstar, fstar_probabilities, map_trials, mean_and_se, run_suite,
    trial_rng, Algorithm, MetricParams, SuiteConfig, SuiteRun, Trial,
};
pub use table::{Metric, MetricMode, PerformanceTable};

/// Grid points that maximize `P(d)` for every `d` in `d_grid` at once.
/// An empty answer means no single estimate attains `F*` on this grid.
pub fn attainability_test(post: &DensityGrid, d_grid: &[f64], tol: f64) -> Vec<Location> {
    let mut keep: Option<BTreeSet<usize>> = None;
    for &d in d_grid {
        let set: BTreeSet<usize> = mpd_argmax_indices(post, d, tol).into_iter().collect();
        let next = match keep {
            None => set,
            Some(k) => k.intersection(&set).copied().collect(),
        };
        if next.is_empty() {
            return Vec::new();
        }
        keep = Some(next);
    }
    keep.unwrap_or_default().into_iter().map(|i| post.grid().point(i)).collect()
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::geometry::{Grid, Space};
    use crate::models::{PathLossModel, PathLossParams};
    use crate::sim::{random_transmitters, Scenario};

    #[test]
    fn attainability_examples() {
        let space = Space::rect(10.0, 10.0, 0.5).unwrap();
        let g = Arc::new(Grid::from_space(&space));
        let post = DensityGrid::gaussian(g.clone(), space.center(), 1.5).unwrap();
        let dg = default_d_grid(g.d_star(), 16);
        assert!(attainability_test(&post, &dg, 1e-9).contains(&space.center()));

        let a = g.index_of(Location::new(1.0, 5.0)).unwrap();
        let b = g.index_of(Location::new(9.0, 5.0)).unwrap();
        let mut w = vec![0.0; g.len()];
        w[a] = 1.0;
        w[b] = 1.0;
        let bimodal = DensityGrid::from_weights(g.clone(), w).unwrap();
        assert!(attainability_test(&bimodal, &[0.0, 0.5, 5.0], 1e-9).is_empty());

        let one = Arc::new(Grid::from_points(vec![Location::new(2.0, 3.0)]).unwrap());
        let post = DensityGrid::uniform(one);
        assert_eq!(attainability_test(&post, &[0.0, 1.0], 1e-9), vec![Location::new(2.0, 3.0)]);
    }

    fn zero_noise() -> Scenario {
        let space = Space::rect(6.0, 6.0, 0.5).unwrap();
        let txs = random_transmitters(&space, 4, 2).unwrap();
        let params = PathLossParams::new(-40.0, 3.0, 1e-6, 1.0, 0.0).unwrap();
        Scenario::path_loss("quiet", space, PathLossModel::new(params, txs).unwrap(), None).unwrap()
    }

    #[test]
    fn zero_noise_map_is_exact() {
        let s = zero_noise();
        let dg = default_d_grid(s.d_star(), 32);
        let c = error_cdf(&Algorithm::Map, &s, 50, 1, &dg).unwrap();
        assert!(c.values.iter().all(|&v| v == 1.0));
    }

    #[test]
    fn fixed_corner_matches_geometry() {
        let space = Space::rect(1.0, 1.0, 0.02).unwrap();
        let g = Arc::new(Grid::from_space(&space));
        let s = Scenario::prior_only("unit", space, DensityGrid::uniform(g.clone())).unwrap();
        let dg = default_d_grid(s.d_star(), 15);
        let c = error_cdf(&Algorithm::Fixed(Location::new(0.0, 0.0)), &s, 4000, 11, &dg).unwrap();
        // Oracle: fraction of grid points within d of the corner, counted directly.
        for (k, &d) in dg.iter().enumerate() {
            let inside =
                g.points().iter().filter(|p| p.x.hypot(p.y) <= d + 1e-9).count() as f64 / g.len() as f64;
            let se = (inside * (1.0 - inside) / 4000.0).sqrt();
            assert!(
                (c.values[k] - inside).abs() <= 4.0 * se + 1e-9,
                "d={d} mc={} exact={inside}",
                c.values[k]
            );
        }
    }

    #[test]
    fn seeds_reproduce_across_pools() {
        let s = zero_noise();
        let dg = default_d_grid(s.d_star(), 8);
        let cfg = SuiteConfig { trials: 40, seed: 3, d_grid: dg, fstar: true, metrics: None };
        let algs = [Algorithm::Map, Algorithm::Mede];
        let run = |n| {
            let pool = rayon::ThreadPoolBuilder::new().num_threads(n).build().unwrap();
            pool.install(|| run_suite(&s, &algs, &cfg).unwrap().errors)
        };
        assert_eq!(run(1), run(3));
    }

    #[test]
    fn zero_trials_rejected() {
        let s = zero_noise();
        assert!(error_cdf(&Algorithm::Map, &s, 0, 1, &[0.0, 1.0]).is_err());
    }

    #[test]
    fn density_interpolates() {
        let g = Arc::new(Grid::from_axes(vec![0.0, 1.0], vec![0.0, 1.0]).unwrap());
        let post = DensityGrid::from_weights(g, vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        assert!((density_at(&post, Location::new(0.5, 0.5)) - 0.25).abs() < 1e-15);
        assert_eq!(density_at(&post, Location::new(1.0, 0.0)), 0.2);
    }
}

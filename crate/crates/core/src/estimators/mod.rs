//! Cost-optimal estimators over a grid posterior.

mod cost;
mod search;

use crate::density::{DensityGrid, ObservationVector};
use crate::error::{Error, Result};
use crate::geometry::Location;
use crate::models::{fingerprint_mean, FingerprintDb};

pub use cost::{CostFunction, Tabulated, RADIUS_SLACK};
pub use search::{
    capture_probabilities, capture_probability, estimate_exhaustive, expected_cost, max_capture_probability,
    posterior_mean, Estimate, TIE_REL,
};

/// Grid point minimizing the posterior expected cost.
pub fn estimate(post: &DensityGrid, cost: &CostFunction) -> Estimate {
    match cost {
        CostFunction::SquaredDistance => search::estimate_squared(post),
        CostFunction::Distance => match post.grid().lattice() {
            Some(l) => search::estimate_distance_bnb(post, l),
            None => estimate_exhaustive(post, cost),
        },
        CostFunction::WithinRadius(d) => search::estimate_within_radius(post, d.max(0.0)),
        CostFunction::TabulatedMonotone(_) => estimate_exhaustive(post, cost),
    }
}

/// Posterior mode. Under a uniform prior this is the maximum-likelihood point.
pub fn map_estimate(post: &DensityGrid) -> Estimate {
    let mass = post.mass();
    let ties = search::argmax_ties(mass);
    let grid = post.grid();
    Estimate {
        location: grid.point(ties[0]),
        expected_cost: 1.0 - mass[ties[0]],
        tie_set: ties.into_iter().map(|i| grid.point(i)).collect(),
    }
}

/// Posterior mean, not snapped to the grid.
pub fn mmse_estimate(post: &DensityGrid) -> Estimate {
    let m = posterior_mean(post);
    Estimate {
        location: m,
        expected_cost: expected_cost(post, m, &CostFunction::SquaredDistance),
        tie_set: vec![m],
    }
}

/// Minimum expected distance error.
pub fn mede_estimate(post: &DensityGrid) -> Estimate {
    estimate(post, &CostFunction::Distance)
}

/// Maximizer of the probability of landing within `d` of the receiver.
/// `expected_cost` is `1 - P(d)`.
pub fn mpd_estimate(post: &DensityGrid, d: f64) -> Result<Estimate> {
    let cost = CostFunction::within_radius(d)?;
    Ok(estimate(post, &cost))
}

/// Grid indices whose `P(d)` is within relative `tol` of the best.
pub fn mpd_argmax_indices(post: &DensityGrid, d: f64, tol: f64) -> Vec<usize> {
    let p = capture_probabilities(post, d.max(0.0));
    let best = p.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let cut = best - tol.max(TIE_REL) * best.abs();
    p.iter().enumerate().filter(|(_, &v)| v >= cut).map(|(i, _)| i).collect()
}

/// Every grid point whose `P(d)` is within relative `tol` of the best.
pub fn mpd_argmax_set(post: &DensityGrid, d: f64, tol: f64) -> Vec<Location> {
    mpd_argmax_indices(post, d, tol).into_iter().map(|i| post.grid().point(i)).collect()
}

/// Survey location whose mean fingerprint is nearest `obs` in Euclidean
/// distance over the transmitters both sides know. `expected_cost` holds
/// that distance in dB.
pub fn fing_estimate(db: &FingerprintDb, obs: &ObservationVector) -> Result<Estimate> {
    let mut scored: Vec<(Location, f64)> = Vec::new();
    for loc in db.locations() {
        let means = fingerprint_mean(db, loc)?;
        let mut n = 0;
        let mut ss = 0.0;
        for (id, v) in obs.iter() {
            if let Some(Some(m)) = means.get(id) {
                n += 1;
                ss += (v - m) * (v - m);
            }
        }
        if n > 0 {
            scored.push((loc, ss.sqrt()));
        }
    }
    if scored.is_empty() {
        return Err(Error::NoCommonTransmitters);
    }
    let best = scored.iter().map(|s| s.1).fold(f64::INFINITY, f64::min);
    let cut = best + TIE_REL * best;
    let tie_set: Vec<Location> = scored.iter().filter(|s| s.1 <= cut).map(|s| s.0).collect();
    Ok(Estimate { location: tie_set[0], expected_cost: best, tie_set })
}

//! Grid-based Bayesian localization from received signal strength.
//!
//! Posteriors over receiver location live on a discretized rectangle.
//! Estimators minimize an explicit distance-error cost against that
//! posterior, and the evaluation layer compares algorithms through their
//! error CDFs.

#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod density;
pub mod error;
pub mod estimators;
pub mod eval;
pub mod geometry;
pub mod models;
pub mod sim;

pub use density::{
    posterior, uniform_prior, DensityGrid, ObservationModel, ObservationVector, Uninformative,
};
pub use error::{Error, Result};
pub use estimators::{CostFunction, Estimate};
pub use geometry::{grid_points, Grid, Location, Space};

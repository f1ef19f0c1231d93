//! Observation models: the log-normal path-loss model and the empirical
//! fingerprint model, plus trace ingestion.

pub mod fingerprint;
pub mod pathloss;
pub mod traces;

pub use crate::geometry::distance;
pub use fingerprint::{
    fingerprint_loglik, fingerprint_mean, fingerprint_train, FingerprintDb, FingerprintModel, Histogram,
};
pub use pathloss::{
    mean_observation, pathloss_loglik, sample_rss, sample_rss_with, PathLossModel, PathLossParams,
    TransmitterSet,
};
pub use traces::{load_traces, read_traces, write_traces, Scan, TraceDataset, TraceRecord};

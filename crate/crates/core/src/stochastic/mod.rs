//! Random streams, correlated increments, time grids, path storage and
//! Monte Carlo statistics.

mod correlation;
mod grid;
mod parallel;
mod paths;
mod rng;
mod stats;

pub use correlation::{build_correlation, CorrelationSpec, CORRELATION_TOLERANCE};
pub use grid::TimeGrid;
pub use parallel::Executor;
pub use paths::{Component, PathBundle};
pub use rng::{sample_increments, GaussianSource, IncrementGenerator, Increments, RngStream, StreamFamily};
pub use stats::{
    batch_means, combined_se, ks_critical_1pct, ks_two_sample, mc_estimate, BatchMeans, MonteCarloEstimate,
};

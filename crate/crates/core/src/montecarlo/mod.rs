//! Reproducible simulation harness: synthetic streams, independent trials
//! through the sketch, aggregation and comparison with the analytic oracle.

mod compare;
mod merge;
mod metric;
mod stats;
mod stream;
mod trials;

pub use crate::par::Execution;
pub use compare::{Check, Report, Tolerance};
pub use merge::{merge_harness, MergeDiscrepancy, MergeReport};
pub use metric::Metric;
pub use stats::{
    joint_tv, ks_critical, ks_statistic, normal_cdf, step_cdf_distance, tv_distance,
    wasserstein_to_normal, TrialStats, Welford,
};
pub use stream::{generate, ColorClass, Multiplicity, Order, StreamItem, StreamSpec};
pub use trials::{
    hash_seed, run_single, run_trials, trial_seed, Pipeline, SketchConfig, TrialConfig,
    TrialOutcome,
};

//! Adaptive sampling sketch for distinct counting.
//!
//! The crate is organised bottom-up:
//!
//! - [`hashing`]: key digests and geometric levels under a bit model.
//! - [`sketch`]: the bounded cache itself, with merge and snapshots.
//! - [`estimators`]: colored proportions, multiplicity statistics and the
//!   black-green extraction variant.
//! - [`analytics`]: closed-form distributions and moments of `R`, `D`, `Z`
//!   and `W`, used as an oracle for simulations and for error bars.
//! - [`montecarlo`]: stream generators, trial runners and comparators.
//! - [`validate`]: the validation suites run by the CLI.

pub mod analytics;
pub mod error;
pub mod estimators;
pub mod hashing;
pub mod montecarlo;
mod par;
pub mod sketch;
pub mod validate;

pub use error::{AnalyticsError, SimulationError, SketchError};
pub use hashing::{digest, level, prefix_matches, BitModel, KeyDigest, Level};
pub use sketch::{AdaptiveSampler, CacheEntry, Color, EstimateReport};

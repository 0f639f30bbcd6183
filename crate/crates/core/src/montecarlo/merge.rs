//! Equivalence harness: a stream split in two, sketched separately and
//! merged, against one sketch of the whole stream.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::trials::{hash_seed, trial_seed};
use crate::error::SimulationError;
use crate::hashing::BitModel;
use crate::par::{map_chunks, Execution};
use crate::sketch::AdaptiveSampler;

/// A trial whose merged sketch differs from the single-stream sketch.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct MergeDiscrepancy {
    pub trial: u64,
    pub single: (u64, u32),
    pub merged: (u64, u32),
    pub same_digests: bool,
    pub same_counts: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MergeReport {
    pub trials: u64,
    pub identical: u64,
    pub discrepancies: Vec<MergeDiscrepancy>,
}

impl MergeReport {
    pub fn identical_fraction(&self) -> f64 {
        self.identical as f64 / self.trials as f64
    }
}

/// For each trial, shuffles `n` distinct keys, feeds the first half to one
/// sampler and the rest to another, merges, and compares `(R, D)`, the
/// digest set and the counters with a sampler fed the whole shuffled stream.
pub fn merge_harness(
    n: u64,
    b: u32,
    q: f64,
    trials: u64,
    master_seed: u64,
    execution: Execution,
) -> Result<MergeReport, SimulationError> {
    if trials == 0 {
        return Err(SimulationError::NoTrials);
    }
    let run = |range: std::ops::Range<u64>| -> Result<Vec<MergeDiscrepancy>, SimulationError> {
        let mut out = Vec::new();
        for t in range {
            let seed = trial_seed(master_seed, t);
            let model = BitModel::new(q, hash_seed(seed))?;
            let mut keys: Vec<u64> = (0..n).collect();
            keys.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let (left, right) = keys.split_at(keys.len() / 2);
            let mut whole = AdaptiveSampler::new(b, model)?;
            let mut a = AdaptiveSampler::new(b, model)?;
            let mut c = AdaptiveSampler::new(b, model)?;
            for k in left {
                a.insert(&k.to_le_bytes(), None)?;
                whole.insert(&k.to_le_bytes(), None)?;
            }
            for k in right {
                c.insert(&k.to_le_bytes(), None)?;
                whole.insert(&k.to_le_bytes(), None)?;
            }
            let merged = a.merge(&c)?;
            let digests = |s: &AdaptiveSampler| s.entries().map(|e| e.digest).collect::<Vec<_>>();
            let counts = |s: &AdaptiveSampler| s.entries().map(|e| e.count).collect::<Vec<_>>();
            let single = (whole.len() as u64, whole.depth());
            let joined = (merged.len() as u64, merged.depth());
            let same_digests = digests(&whole) == digests(&merged);
            let same_counts = counts(&whole) == counts(&merged);
            if single != joined || !same_digests || !same_counts {
                out.push(MergeDiscrepancy {
                    trial: t,
                    single,
                    merged: joined,
                    same_digests,
                    same_counts,
                });
            }
        }
        Ok(out)
    };
    let mut discrepancies = Vec::new();
    for part in map_chunks(trials, execution, run) {
        discrepancies.extend(part?);
    }
    Ok(MergeReport {
        trials,
        identical: trials - discrepancies.len() as u64,
        discrepancies,
    })
}

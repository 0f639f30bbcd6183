//! The adaptive sampling sketch.
//!
//! The sampler holds at most `b` distinct keys whose stream starts with
//! `0^d`. A key passing the prefix test at the current depth is admitted
//! (or has its counter bumped); whenever the cache holds more than `b`
//! keys the depth is raised and the cache filtered, repeatedly, until it
//! fits. The number of distinct keys is estimated by `R * Q^D`.

mod snapshot;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SketchError;
use crate::hashing::{digest, level, prefix_matches, BitModel, KeyDigest};

pub use snapshot::{SNAPSHOT_MAGIC, SNAPSHOT_VERSION};

/// Small integer class attached to a key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct Color(pub u32);

impl Color {
    /// Largest tag representable in the snapshot format (stored as `i32`).
    pub const MAX: u32 = i32::MAX as u32;

    pub fn new(tag: u32) -> Result<Self, SketchError> {
        if tag > Self::MAX {
            return Err(SketchError::InvalidColor(tag));
        }
        Ok(Color(tag))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Slot {
    color: Option<Color>,
    count: u64,
    level: u32,
}

/// A resident key as seen from outside the sampler.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct CacheEntry {
    pub digest: KeyDigest,
    pub color: Option<Color>,
    /// Occurrences observed since the key was admitted.
    pub count: u64,
}

/// Point estimate of the number of distinct keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EstimateReport {
    pub n_hat: f64,
    pub r: u64,
    pub d: u32,
    pub stderr_hat: f64,
    pub b: u32,
    pub q: f64,
}

/// Outcome of offering one key.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Admission {
    Rejected,
    Resident(u64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveSampler {
    capacity: u32,
    depth: u32,
    entries: BTreeMap<KeyDigest, Slot>,
    model: BitModel,
    inserted_total: u64,
}

impl AdaptiveSampler {
    pub fn new(capacity: u32, model: BitModel) -> Result<Self, SketchError> {
        if capacity == 0 {
            return Err(SketchError::InvalidCapacity);
        }
        Ok(Self {
            capacity,
            depth: 0,
            entries: BTreeMap::new(),
            model,
            inserted_total: 0,
        })
    }

    pub fn capacity(&self) -> u32 {
        self.capacity
    }

    /// Current depth `d`.
    pub fn depth(&self) -> u32 {
        self.depth
    }

    /// Number of resident keys `R`.
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn model(&self) -> &BitModel {
        &self.model
    }

    /// Number of keys offered so far (`N`), including repeats and rejects.
    pub fn inserted_total(&self) -> u64 {
        self.inserted_total
    }

    /// Resident keys in digest order.
    pub fn entries(&self) -> impl Iterator<Item = CacheEntry> + '_ {
        self.entries.iter().map(|(d, s)| CacheEntry {
            digest: *d,
            color: s.color,
            count: s.count,
        })
    }

    pub fn get(&self, digest: KeyDigest) -> Option<CacheEntry> {
        self.entries.get(&digest).map(|s| CacheEntry {
            digest,
            color: s.color,
            count: s.count,
        })
    }

    pub fn contains(&self, digest: KeyDigest) -> bool {
        self.entries.contains_key(&digest)
    }

    /// Hashes `key` and offers it to the cache.
    pub fn insert(&mut self, key: &[u8], color: Option<Color>) -> Result<(), SketchError> {
        let d = digest(key, self.model.seed())?;
        self.insert_digest(d, color);
        Ok(())
    }

    /// Offers an already hashed key.
    pub fn insert_digest(&mut self, digest: KeyDigest, color: Option<Color>) {
        if let Admission::Resident(_) = self.admit(digest, color) {
            self.resolve_overflow();
        }
    }

    /// Counts the key and, if it passes the prefix test, admits it or bumps
    /// its counter. Does not resolve overflow.
    pub(crate) fn admit(&mut self, digest: KeyDigest, color: Option<Color>) -> Admission {
        self.inserted_total += 1;
        if !prefix_matches(digest, self.depth, &self.model) {
            return Admission::Rejected;
        }
        let model = self.model;
        let slot = self.entries.entry(digest).or_insert_with(|| Slot {
            color,
            count: 0,
            level: level(digest, &model).0,
        });
        slot.count += 1;
        Admission::Resident(slot.count)
    }

    /// Counts an offered key that is ignored without a prefix test.
    pub(crate) fn note_offer(&mut self) {
        self.inserted_total += 1;
    }

    pub(crate) fn remove(&mut self, digest: KeyDigest) -> Option<CacheEntry> {
        self.entries.remove(&digest).map(|s| CacheEntry {
            digest,
            color: s.color,
            count: s.count,
        })
    }

    /// Raises the depth and filters until at most `b` keys remain.
    pub(crate) fn resolve_overflow(&mut self) {
        while self.entries.len() > self.capacity as usize {
            self.depth += 1;
            let depth = self.depth;
            self.entries.retain(|_, s| s.level >= depth);
        }
    }

    fn filter_to(&mut self, depth: u32) {
        if depth > self.depth {
            self.depth = depth;
            self.entries.retain(|_, s| s.level >= depth);
        }
    }

    /// `R * Q^D` together with its asymptotic standard error.
    pub fn estimate(&self) -> EstimateReport {
        let r = self.entries.len() as u64;
        let n_hat = if r == 0 {
            0.0
        } else {
            r as f64 * self.model.growth().powi(self.depth as i32)
        };
        let b = self.capacity as f64;
        let rel_var = self.model.p() / ((b - 1.0) * self.model.q() * self.model.log_growth());
        EstimateReport {
            n_hat,
            r,
            d: self.depth,
            stderr_hat: n_hat * rel_var.sqrt(),
            b: self.capacity,
            q: self.model.q(),
        }
    }

    pub fn check_compatible(&self, other: &Self) -> Result<(), SketchError> {
        if self.capacity != other.capacity {
            return Err(SketchError::Incompatible {
                field: "b",
                left: self.capacity.to_string(),
                right: other.capacity.to_string(),
            });
        }
        if self.model.q() != other.model.q() {
            return Err(SketchError::Incompatible {
                field: "q",
                left: self.model.q().to_string(),
                right: other.model.q().to_string(),
            });
        }
        if self.model.seed() != other.model.seed() {
            return Err(SketchError::Incompatible {
                field: "seed",
                left: self.model.seed().to_string(),
                right: other.model.seed().to_string(),
            });
        }
        Ok(())
    }

    /// Folds `other` into `self`: both caches are brought to the deeper of
    /// the two depths, entries are unioned with counts summed, and overflow
    /// is resolved as on insert.
    pub fn merge_from(&mut self, other: &Self) -> Result<(), SketchError> {
        self.check_compatible(other)?;
        let depth = self.depth.max(other.depth);
        self.filter_to(depth);
        for (d, s) in other.entries.iter().filter(|(_, s)| s.level >= depth) {
            self.entries
                .entry(*d)
                .and_modify(|mine| mine.count += s.count)
                .or_insert(*s);
        }
        self.inserted_total += other.inserted_total;
        self.resolve_overflow();
        Ok(())
    }

    pub fn merge(&self, other: &Self) -> Result<Self, SketchError> {
        let mut out = self.clone();
        out.merge_from(other)?;
        Ok(out)
    }

    /// Versioned little-endian snapshot; see [`snapshot`](self::snapshot).
    pub fn snapshot(&self) -> Vec<u8> {
        snapshot::encode(self)
    }

    pub fn restore(bytes: &[u8]) -> Result<Self, SketchError> {
        snapshot::decode(bytes)
    }
}

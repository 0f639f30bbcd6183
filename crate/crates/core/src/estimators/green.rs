//! Black-green sampling: keys of known multiplicity `μ_G` leave the cache
//! as soon as their counter reaches `μ_G`, and `H[d]` records how many left
//! at depth `d`.

use std::collections::HashSet;

use serde::{Deserialize, Serialize};

use crate::error::SketchError;
use crate::hashing::{digest, KeyDigest};
use crate::sketch::{AdaptiveSampler, Admission, Color};

/// Extraction state running alongside a sampler.
///
/// Extracted digests are kept in a tombstone set so that further sightings
/// are ignored instead of re-entering the cache with a fresh count.
#[derive(Debug, Clone, PartialEq)]
pub struct GreenExtractor {
    mu_g: u64,
    h: Vec<u64>,
    tombstones: HashSet<KeyDigest>,
}

/// Estimates produced at the end of a black-green run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GreenReport {
    pub mu_g: u64,
    /// `H[d]` for `d = 0..=d_star`.
    pub h: Vec<u64>,
    pub d_star: u32,
    pub r: u64,
    /// `Σ_d Q^d H[d]`.
    pub n_g_hat: f64,
    /// `Q^{D*} R`.
    pub n_b_hat: f64,
    pub n_hat: f64,
    /// `(N - Q^{D*} V) / μ_G` with `V` the sum of resident counts.
    pub n_g_consistency: f64,
    pub tombstones: u64,
}

impl GreenExtractor {
    pub fn new(mu_g: u64) -> Result<Self, SketchError> {
        if mu_g < 2 {
            return Err(SketchError::InvalidGreenMultiplicity(mu_g));
        }
        Ok(Self {
            mu_g,
            h: Vec::new(),
            tombstones: HashSet::new(),
        })
    }

    pub fn mu_g(&self) -> u64 {
        self.mu_g
    }

    /// Extraction counters; `h()[d]` is `H[d]`, missing entries are zero.
    pub fn h(&self) -> &[u64] {
        &self.h
    }

    pub fn tombstone_count(&self) -> usize {
        self.tombstones.len()
    }

    pub fn is_extracted(&self, digest: KeyDigest) -> bool {
        self.tombstones.contains(&digest)
    }

    pub fn insert(
        &mut self,
        sampler: &mut AdaptiveSampler,
        key: &[u8],
        color: Option<Color>,
    ) -> Result<(), SketchError> {
        let d = digest(key, sampler.model().seed())?;
        self.insert_digest(sampler, d, color);
        Ok(())
    }

    pub fn insert_digest(
        &mut self,
        sampler: &mut AdaptiveSampler,
        digest: KeyDigest,
        color: Option<Color>,
    ) {
        if self.tombstones.contains(&digest) {
            sampler.note_offer();
            return;
        }
        if let Admission::Resident(count) = sampler.admit(digest, color) {
            if count == self.mu_g {
                sampler.remove(digest);
                self.tombstones.insert(digest);
                let d = sampler.depth() as usize;
                if self.h.len() <= d {
                    self.h.resize(d + 1, 0);
                }
                self.h[d] += 1;
            }
            sampler.resolve_overflow();
        }
    }

    pub fn report(&self, sampler: &AdaptiveSampler) -> GreenReport {
        let growth = sampler.model().growth();
        let d_star = sampler.depth();
        let mut h = self.h.clone();
        h.resize(d_star as usize + 1, 0);
        let n_g_hat: f64 = h
            .iter()
            .enumerate()
            .map(|(d, &c)| growth.powi(d as i32) * c as f64)
            .sum();
        let r = sampler.len() as u64;
        let scale = growth.powi(d_star as i32);
        let n_b_hat = scale * r as f64;
        let v: u64 = sampler.entries().map(|e| e.count).sum();
        let n_g_consistency =
            (sampler.inserted_total() as f64 - scale * v as f64) / self.mu_g as f64;
        GreenReport {
            mu_g: self.mu_g,
            h,
            d_star,
            r,
            n_g_hat,
            n_b_hat,
            n_hat: n_g_hat + n_b_hat,
            n_g_consistency,
            tombstones: self.tombstones.len() as u64,
        }
    }
}

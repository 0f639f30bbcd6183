//! Key digests and geometric levels.
//!
//! A key is hashed once into a 64-bit [`KeyDigest`]. Its bit stream is read
//! from the most significant bit downward; a key has level `d` when the first
//! `d` bits of that stream are zero. For the symmetric model (`q = 1/2`) the
//! stream is the digest itself, extended past bit 64 by a keyed generator.
//! For a biased model every bit is drawn from a deterministic stream keyed by
//! `(digest, seed)`: bit `i` is zero iff `u_i < q`.

use serde::{Deserialize, Serialize};
use xxhash_rust::xxh3::xxh3_64_with_seed;

use crate::error::SketchError;

/// Seed used by every statistical test in this crate.
pub const TEST_SEED: u64 = 0x5EED_0FA5_0001;

/// 64-bit hash of a raw key.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct KeyDigest(pub u64);

/// Number of leading zero bits of a key's stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Level(pub u32);

/// Probability model for the bits of the hashed stream.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BitModel {
    q: f64,
    seed: u64,
    // u64 cut-off: a uniform word below it is a zero bit.
    threshold: u64,
}

impl BitModel {
    pub fn new(q: f64, seed: u64) -> Result<Self, SketchError> {
        if !(q > 0.0 && q < 1.0) {
            return Err(SketchError::InvalidBias(q));
        }
        // q * 2^64, saturating just below 2^64.
        let threshold = (q * 18_446_744_073_709_551_616.0).min(u64::MAX as f64) as u64;
        Ok(Self { q, seed, threshold })
    }

    pub fn symmetric(seed: u64) -> Self {
        Self::new(0.5, seed).expect("1/2 is a valid bias")
    }

    /// Probability that a generated bit is 0.
    pub fn q(&self) -> f64 {
        self.q
    }

    /// Probability that a generated bit is 1.
    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn is_symmetric(&self) -> bool {
        self.q == 0.5
    }

    /// Growth factor `Q = 1/q`: one depth step multiplies the estimate by `Q`.
    pub fn growth(&self) -> f64 {
        1.0 / self.q
    }

    /// `L = ln(1/q)`.
    pub fn log_growth(&self) -> f64 {
        -self.q.ln()
    }
}

/// Hashes `key` under `seed`. Empty keys are rejected.
pub fn digest(key: &[u8], seed: u64) -> Result<KeyDigest, SketchError> {
    if key.is_empty() {
        return Err(SketchError::EmptyKey);
    }
    Ok(KeyDigest(xxh3_64_with_seed(key, seed)))
}

#[inline]
fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Deterministic word stream keyed by `(digest, seed)`.
#[derive(Debug, Clone)]
struct KeyedStream {
    state: u64,
}

impl KeyedStream {
    fn new(digest: KeyDigest, seed: u64) -> Self {
        Self {
            state: splitmix64(digest.0 ^ splitmix64(seed ^ 0xA5A5_5A5A_C3C3_3C3C)),
        }
    }

    #[inline]
    fn next_word(&mut self) -> u64 {
        self.state = self.state.wrapping_add(0x9E37_79B9_7F4A_7C15);
        let mut z = self.state;
        z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
        z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
        z ^ (z >> 31)
    }
}

/// Counts leading zero bits of `digest`, continuing into the keyed stream
/// when all 64 digest bits are zero. Stops once `cap` is reached.
fn symmetric_level(digest: KeyDigest, seed: u64, cap: u32) -> u32 {
    let lz = digest.0.leading_zeros();
    if lz < 64 || cap <= 64 {
        return lz;
    }
    let mut level = 64u32;
    let mut stream = KeyedStream::new(digest, seed);
    while level < cap {
        let w = stream.next_word();
        let z = w.leading_zeros();
        level += z;
        if z < 64 {
            break;
        }
    }
    level
}

fn biased_level(digest: KeyDigest, model: &BitModel, cap: u32) -> u32 {
    let mut stream = KeyedStream::new(digest, model.seed);
    let mut level = 0u32;
    while level < cap && stream.next_word() < model.threshold {
        level += 1;
    }
    level
}

/// Level of `digest` under `model`.
pub fn level(digest: KeyDigest, model: &BitModel) -> Level {
    if model.is_symmetric() {
        Level(symmetric_level(digest, model.seed, u32::MAX))
    } else {
        Level(biased_level(digest, model, u32::MAX))
    }
}

/// True iff the first `depth` bits of the stream are all zero.
#[inline]
pub fn prefix_matches(digest: KeyDigest, depth: u32, model: &BitModel) -> bool {
    if depth == 0 {
        return true;
    }
    if model.is_symmetric() {
        if depth <= 64 {
            return digest.0.leading_zeros() >= depth;
        }
        symmetric_level(digest, model.seed, depth) >= depth
    } else {
        biased_level(digest, model, depth) >= depth
    }
}

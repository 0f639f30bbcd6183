//! Binary snapshot codec.
//!
//! Layout (all integers little-endian):
//!
//! ```text
//! magic "ASK1" | u8 version | f64 q | u64 seed | u32 b | u32 d
//! | u64 inserted_total | u32 entry count
//! | entry count x (u64 digest, i32 color or -1, u64 count)
//! ```
//!
//! Entries are written in ascending digest order.

use std::collections::BTreeMap;

use super::{AdaptiveSampler, Color, Slot};
use crate::error::SketchError;
use crate::hashing::{level, prefix_matches, BitModel, KeyDigest};

pub const SNAPSHOT_MAGIC: &[u8; 4] = b"ASK1";
pub const SNAPSHOT_VERSION: u8 = 1;

const HEADER_LEN: usize = 4 + 1 + 8 + 8 + 4 + 4 + 8 + 4;
const ENTRY_LEN: usize = 8 + 4 + 8;

pub(super) fn encode(s: &AdaptiveSampler) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + ENTRY_LEN * s.entries.len());
    out.extend_from_slice(SNAPSHOT_MAGIC);
    out.push(SNAPSHOT_VERSION);
    out.extend_from_slice(&s.model.q().to_le_bytes());
    out.extend_from_slice(&s.model.seed().to_le_bytes());
    out.extend_from_slice(&s.capacity.to_le_bytes());
    out.extend_from_slice(&s.depth.to_le_bytes());
    out.extend_from_slice(&s.inserted_total.to_le_bytes());
    out.extend_from_slice(&(s.entries.len() as u32).to_le_bytes());
    for (d, slot) in &s.entries {
        out.extend_from_slice(&d.0.to_le_bytes());
        let color = slot.color.map_or(-1i32, |c| c.0 as i32);
        out.extend_from_slice(&color.to_le_bytes());
        out.extend_from_slice(&slot.count.to_le_bytes());
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
}

impl<'a> Reader<'a> {
    fn take<const N: usize>(&mut self) -> Result<[u8; N], SketchError> {
        if self.buf.len() < N {
            return Err(SketchError::Snapshot("truncated".into()));
        }
        let (head, rest) = self.buf.split_at(N);
        self.buf = rest;
        Ok(head.try_into().expect("length checked"))
    }

    fn u32(&mut self) -> Result<u32, SketchError> {
        self.take().map(u32::from_le_bytes)
    }

    fn u64(&mut self) -> Result<u64, SketchError> {
        self.take().map(u64::from_le_bytes)
    }
}

pub(super) fn decode(bytes: &[u8]) -> Result<AdaptiveSampler, SketchError> {
    let mut r = Reader { buf: bytes };
    let magic: [u8; 4] = r.take()?;
    if &magic != SNAPSHOT_MAGIC {
        return Err(SketchError::Snapshot("bad magic".into()));
    }
    let [version] = r.take()?;
    if version != SNAPSHOT_VERSION {
        return Err(SketchError::SnapshotVersion(version));
    }
    let q = f64::from_le_bytes(r.take()?);
    let seed = r.u64()?;
    let model = BitModel::new(q, seed)?;
    let capacity = r.u32()?;
    let depth = r.u32()?;
    let inserted_total = r.u64()?;
    let count = r.u32()? as usize;
    if count > capacity as usize {
        return Err(SketchError::Snapshot(format!(
            "{count} entries exceed capacity {capacity}"
        )));
    }
    if r.buf.len() != count * ENTRY_LEN {
        return Err(SketchError::Snapshot(format!(
            "expected {} entry bytes, found {}",
            count * ENTRY_LEN,
            r.buf.len()
        )));
    }
    let mut sampler = AdaptiveSampler::new(capacity, model)?;
    let mut entries = BTreeMap::new();
    let mut previous: Option<u64> = None;
    for _ in 0..count {
        let digest = r.u64()?;
        let color = i32::from_le_bytes(r.take()?);
        let hits = r.u64()?;
        if previous.is_some_and(|p| p >= digest) {
            return Err(SketchError::Snapshot("entries not in ascending order".into()));
        }
        previous = Some(digest);
        let digest = KeyDigest(digest);
        if hits == 0 {
            return Err(SketchError::Snapshot("resident entry with zero count".into()));
        }
        if !prefix_matches(digest, depth, &model) {
            return Err(SketchError::Snapshot(format!(
                "digest {:#018x} does not match depth {depth}",
                digest.0
            )));
        }
        let color = match color {
            -1 => None,
            c if c >= 0 => Some(Color(c as u32)),
            c => return Err(SketchError::Snapshot(format!("invalid color {c}"))),
        };
        entries.insert(
            digest,
            Slot {
                color,
                count: hits,
                level: level(digest, &model).0,
            },
        );
    }
    sampler.depth = depth;
    sampler.entries = entries;
    sampler.inserted_total = inserted_total;
    Ok(sampler)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::TEST_SEED;

    fn filled(n: u32) -> AdaptiveSampler {
        let mut s = AdaptiveSampler::new(32, BitModel::symmetric(TEST_SEED)).unwrap();
        for i in 0..n {
            let color = Color::new(i % 3).ok();
            s.insert(&(i % 7000).to_le_bytes(), color).unwrap();
        }
        s
    }

    #[test]
    fn fresh_round_trip() {
        let s = AdaptiveSampler::new(8, BitModel::new(0.7, 9).unwrap()).unwrap();
        assert_eq!(AdaptiveSampler::restore(&s.snapshot()).unwrap(), s);
    }

    #[test]
    fn round_trip_after_inserts() {
        let s = filled(10_000);
        let back = AdaptiveSampler::restore(&s.snapshot()).unwrap();
        assert_eq!(back.estimate(), s.estimate());
        assert_eq!(back.entries().collect::<Vec<_>>(), s.entries().collect::<Vec<_>>());
        assert_eq!(back, s);
    }

    #[test]
    fn header_layout() {
        let s = filled(100);
        let bytes = s.snapshot();
        assert_eq!(&bytes[..4], b"ASK1");
        assert_eq!(bytes[4], 1);
        assert_eq!(f64::from_le_bytes(bytes[5..13].try_into().unwrap()), 0.5);
        assert_eq!(u64::from_le_bytes(bytes[13..21].try_into().unwrap()), TEST_SEED);
        assert_eq!(u32::from_le_bytes(bytes[21..25].try_into().unwrap()), 32);
        assert_eq!(bytes.len(), HEADER_LEN + ENTRY_LEN * s.len());
    }

    #[test]
    fn truncated_snapshot_rejected() {
        let bytes = filled(500).snapshot();
        for cut in [0, 3, 10, HEADER_LEN, bytes.len() - 1] {
            assert!(AdaptiveSampler::restore(&bytes[..cut]).is_err(), "cut {cut}");
        }
    }

    #[test]
    fn wrong_version_and_magic_rejected() {
        let mut bytes = filled(10).snapshot();
        bytes[4] = 9;
        assert_eq!(
            AdaptiveSampler::restore(&bytes),
            Err(SketchError::SnapshotVersion(9))
        );
        bytes[4] = 1;
        bytes[0] = b'X';
        assert!(AdaptiveSampler::restore(&bytes).is_err());
    }

    #[test]
    fn entry_violating_depth_rejected() {
        let s = filled(5000);
        assert!(s.depth() > 0);
        let mut bytes = s.snapshot();
        // Overwrite the first digest with one whose top bit is set.
        bytes[HEADER_LEN..HEADER_LEN + 8].copy_from_slice(&u64::MAX.to_le_bytes());
        assert!(AdaptiveSampler::restore(&bytes).is_err());
    }
}

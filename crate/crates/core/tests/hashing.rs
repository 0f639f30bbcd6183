use adasketch::{digest, level, prefix_matches, BitModel, KeyDigest};
use proptest::prelude::*;

fn digests(n: u64, seed: u64) -> Vec<KeyDigest> {
    (0..n).map(|i| digest(&i.to_le_bytes(), seed).unwrap()).collect()
}

#[test]
fn bit_census_is_balanced() {
    let n = 100_000u64;
    let ds = digests(n, 11);
    for bit in 0..64 {
        let ones = ds.iter().filter(|d| d.0 >> bit & 1 == 1).count() as f64;
        // 5 sigma of Bin(n, 1/2)
        assert!((ones - n as f64 / 2.0).abs() < 5.0 * (n as f64 / 4.0).sqrt(), "bit {bit}: {ones}");
    }
}

#[test]
fn single_bit_flips_avalanche() {
    let mut total = 0u64;
    let mut count = 0u64;
    for i in 0..2_000u64 {
        let key = i.to_le_bytes();
        let base = digest(&key, 3).unwrap().0;
        for bit in 0..64 {
            let mut k = key;
            k[bit / 8] ^= 1 << (bit % 8);
            total += (digest(&k, 3).unwrap().0 ^ base).count_ones() as u64;
            count += 1;
        }
    }
    let mean = total as f64 / count as f64;
    assert!((mean - 32.0).abs() < 0.2, "{mean}");
}

#[test]
fn levels_follow_the_geometric_law() {
    let n = 200_000u64;
    for q in [0.3, 0.5, 0.8] {
        let model = BitModel::new(q, 5).unwrap();
        let ds = digests(n, model.seed());
        for d in 0..6u32 {
            let observed = ds.iter().filter(|x| level(**x, &model).0 >= d).count() as f64 / n as f64;
            let expected = q.powi(d as i32);
            let sigma = (expected * (1.0 - expected) / n as f64).sqrt();
            assert!((observed - expected).abs() < 5.0 * sigma + 1e-12, "q={q} d={d}: {observed} vs {expected}");
        }
    }
}

proptest! {
    #[test]
    fn prefix_matching_is_monotone(raw in any::<u64>(), q in 0.05f64..0.95, seed in any::<u64>()) {
        let model = BitModel::new(q, seed).unwrap();
        let d = KeyDigest(raw);
        let lvl = level(d, &model).0;
        for depth in 0..lvl.min(40) + 2 {
            prop_assert_eq!(prefix_matches(d, depth, &model), depth <= lvl);
        }
    }

    #[test]
    fn digests_depend_on_seed(key in proptest::collection::vec(any::<u8>(), 1..32), a in any::<u64>()) {
        prop_assert_eq!(digest(&key, a).unwrap(), digest(&key, a).unwrap());
        prop_assert_ne!(digest(&key, a).unwrap(), digest(&key, a.wrapping_add(1)).unwrap());
    }
}

#[test]
fn empty_key_is_rejected() {
    assert!(digest(b"", 0).is_err());
}

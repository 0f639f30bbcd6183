//! Statistics read off a sampler: per-color proportions and cardinalities,
//! per-color multiplicity mean and variance, the count-based partition used
//! when colors are told apart by their multiplicity, and the black-green
//! extraction variant ([`GreenExtractor`]).
//!
//! Error bars use the large-`b` value `E(1/R; R>0) ≈ (Q-1)/(L b)`, which is
//! `1/(L b)` for symmetric bits.

mod green;

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::SketchError;
use crate::sketch::{AdaptiveSampler, Color, EstimateReport};

pub use green::{GreenExtractor, GreenReport};

/// Proportion and cardinality of one color in the sample.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColorReport {
    /// `None` groups keys inserted without a color.
    pub color: Option<Color>,
    pub u: u64,
    pub p_hat: f64,
    pub n_c_hat: f64,
    pub ci_low: f64,
    pub ci_high: f64,
}

/// Multiplicity statistics of one color over its resident keys.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MultiplicityReport {
    pub color: Option<Color>,
    pub u: u64,
    /// Sum of the resident counts (`V`).
    pub v: u64,
    pub mu_hat: f64,
    /// `None` when `u = 1`.
    pub sigma2_hat: Option<f64>,
    pub stderr: Option<f64>,
}

/// Divisor used for the sample variance of the multiplicities.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum VarianceDivisor {
    /// `Σ (ν - μ̂)^2 / U`.
    #[default]
    Count,
    /// `Σ (ν - μ̂)^2 / (U - 1)`.
    CountMinusOne,
}

/// Resident keys sharing one observed count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CountGroup {
    pub count: u64,
    pub u: u64,
    pub n_hat: f64,
    pub p_hat: f64,
}

/// Everything the CLI prints for one sampler.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SketchReport {
    #[serde(flatten)]
    pub estimate: EstimateReport,
    pub colors: Vec<ColorReport>,
    pub multiplicities: Vec<MultiplicityReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub green: Option<GreenReport>,
}

fn inverse_r_factor(s: &AdaptiveSampler) -> f64 {
    let m = s.model();
    (m.growth() - 1.0) / (m.log_growth() * s.capacity() as f64)
}

fn counts_by_color(s: &AdaptiveSampler) -> BTreeMap<Option<Color>, Vec<u64>> {
    let mut groups: BTreeMap<Option<Color>, Vec<u64>> = BTreeMap::new();
    for e in s.entries() {
        groups.entry(e.color).or_default().push(e.count);
    }
    groups
}

/// Per-color `U`, `U/R`, `Q^D U` and the interval
/// `p̂ ∓ 2 sqrt(p̂(1-p̂) E(1/R))`, clamped to `[0, 1]`.
pub fn color_report(s: &AdaptiveSampler) -> Result<Vec<ColorReport>, SketchError> {
    if s.is_empty() {
        return Err(SketchError::NoSample);
    }
    let r = s.len() as f64;
    let scale = s.model().growth().powi(s.depth() as i32);
    let inv_r = inverse_r_factor(s);
    Ok(counts_by_color(s)
        .into_iter()
        .map(|(color, counts)| {
            let u = counts.len() as u64;
            let p_hat = u as f64 / r;
            let half = 2.0 * (p_hat * (1.0 - p_hat) * inv_r).sqrt();
            ColorReport {
                color,
                u,
                p_hat,
                n_c_hat: scale * u as f64,
                ci_low: (p_hat - half).max(0.0),
                ci_high: (p_hat + half).min(1.0),
            }
        })
        .collect())
}

pub fn multiplicity_report(s: &AdaptiveSampler) -> Vec<MultiplicityReport> {
    multiplicity_report_with(s, VarianceDivisor::Count)
}

/// Per-color `V/U` and sample variance of the resident counts. Colors with
/// no resident key are omitted.
pub fn multiplicity_report_with(
    s: &AdaptiveSampler,
    divisor: VarianceDivisor,
) -> Vec<MultiplicityReport> {
    let r = s.len() as f64;
    let inv_r = inverse_r_factor(s);
    counts_by_color(s)
        .into_iter()
        .map(|(color, counts)| {
            let u = counts.len() as u64;
            let v: u64 = counts.iter().sum();
            let mu_hat = v as f64 / u as f64;
            let sigma2_hat = (u >= 2).then(|| {
                let ss: f64 = counts.iter().map(|&c| (c as f64 - mu_hat).powi(2)).sum();
                match divisor {
                    VarianceDivisor::Count => ss / u as f64,
                    VarianceDivisor::CountMinusOne => ss / (u - 1) as f64,
                }
            });
            let p_hat = u as f64 / r;
            let stderr = sigma2_hat.map(|s2| (s2 * inv_r / p_hat).sqrt());
            MultiplicityReport {
                color,
                u,
                v,
                mu_hat,
                sigma2_hat,
                stderr,
            }
        })
        .collect()
}

/// Partition of the cache by observed count, for streams in which each
/// class has its own constant multiplicity.
pub fn model1_classify(s: &AdaptiveSampler) -> Vec<CountGroup> {
    let mut by_count: BTreeMap<u64, u64> = BTreeMap::new();
    for e in s.entries() {
        *by_count.entry(e.count).or_default() += 1;
    }
    let r = s.len() as f64;
    let scale = s.model().growth().powi(s.depth() as i32);
    by_count
        .into_iter()
        .map(|(count, u)| CountGroup {
            count,
            u,
            n_hat: scale * u as f64,
            p_hat: u as f64 / r,
        })
        .collect()
}

/// Cardinality, color and multiplicity reports in one value. Color reports
/// are empty when the cache is empty.
pub fn sketch_report(s: &AdaptiveSampler, green: Option<&GreenExtractor>) -> SketchReport {
    SketchReport {
        estimate: s.estimate(),
        colors: color_report(s).unwrap_or_default(),
        multiplicities: multiplicity_report(s),
        green: green.map(|g| g.report(s)),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::hashing::{BitModel, KeyDigest, TEST_SEED};

    fn sampler(b: u32) -> AdaptiveSampler {
        AdaptiveSampler::new(b, BitModel::symmetric(TEST_SEED)).unwrap()
    }

    #[test]
    fn empty_cache_has_no_color_report() {
        assert_eq!(color_report(&sampler(8)), Err(SketchError::NoSample));
        assert!(multiplicity_report(&sampler(8)).is_empty());
        assert!(model1_classify(&sampler(8)).is_empty());
    }

    #[test]
    fn single_color_is_degenerate() {
        let mut s = sampler(64);
        for i in 0..1000u32 {
            s.insert(&i.to_le_bytes(), Some(Color(7))).unwrap();
        }
        let reports = color_report(&s).unwrap();
        assert_eq!(reports.len(), 1);
        let c = reports[0];
        assert_eq!(c.p_hat, 1.0);
        assert_eq!(c.ci_high, 1.0);
        assert_eq!(c.ci_low, 1.0);
        assert_eq!(c.n_c_hat, s.estimate().n_hat);
    }

    #[test]
    fn colors_partition_the_cache() {
        let mut s = sampler(32);
        for i in 0..5000u32 {
            let color = if i % 5 == 0 { None } else { Some(Color(i % 3)) };
            s.insert(&i.to_le_bytes(), color).unwrap();
        }
        let reports = color_report(&s).unwrap();
        assert_eq!(reports.iter().map(|c| c.u).sum::<u64>(), s.len() as u64);
        let total: f64 = reports.iter().map(|c| c.p_hat).sum();
        assert!((total - 1.0).abs() < 1e-12);
        assert!(reports.iter().any(|c| c.color.is_none()));
        for c in &reports {
            assert!(c.ci_low <= c.p_hat && c.p_hat <= c.ci_high);
            assert!(c.ci_low >= 0.0 && c.ci_high <= 1.0);
        }
    }

    #[test]
    fn interval_width() {
        // R = 4 of 2 colors at b = 8: half width 2 sqrt(1/4 / (8 ln 2))
        let mut s = sampler(8);
        for (i, c) in [(1u64, 0u32), (2, 0), (3, 1), (4, 1)] {
            s.insert_digest(KeyDigest(i << 40), Some(Color(c)));
        }
        let reports = color_report(&s).unwrap();
        let half = 2.0 * (0.25 / (8.0 * std::f64::consts::LN_2)).sqrt();
        assert!((reports[0].ci_high - 0.5 - half).abs() < 1e-15);
        assert!((reports[0].ci_low - 0.5 + half).abs() < 1e-15);
    }

    #[test]
    fn constant_multiplicity() {
        let mut s = sampler(64);
        for _ in 0..3 {
            for i in 0..40u32 {
                s.insert(&i.to_le_bytes(), Some(Color(1))).unwrap();
            }
        }
        let m = multiplicity_report(&s);
        assert_eq!(m.len(), 1);
        assert_eq!(m[0].mu_hat, 3.0);
        assert_eq!(m[0].sigma2_hat, Some(0.0));
        assert_eq!(m[0].v, 120);
    }

    #[test]
    fn variance_divisors() {
        let mut s = sampler(8);
        for (i, reps) in [(1u64, 1), (2, 2), (3, 6)] {
            for _ in 0..reps {
                s.insert_digest(KeyDigest(i << 40), None);
            }
        }
        let by_count = multiplicity_report(&s)[0];
        let unbiased = multiplicity_report_with(&s, VarianceDivisor::CountMinusOne)[0];
        assert_eq!(by_count.mu_hat, 3.0);
        assert!((by_count.sigma2_hat.unwrap() - 14.0 / 3.0).abs() < 1e-12);
        assert!((unbiased.sigma2_hat.unwrap() - 7.0).abs() < 1e-12);
    }

    #[test]
    fn single_resident_has_no_variance() {
        let mut s = sampler(8);
        s.insert(b"only", Some(Color(2))).unwrap();
        s.insert(b"only", Some(Color(2))).unwrap();
        let m = multiplicity_report(&s)[0];
        assert_eq!(m.mu_hat, 2.0);
        assert_eq!(m.sigma2_hat, None);
        assert_eq!(m.stderr, None);
    }

    #[test]
    fn classify_by_count() {
        // counts {1,1,3,3,3} on level-5 digests; one level-3 key then forces
        // the depth up to 4
        let mut s = sampler(5);
        let deep = |i: u64| KeyDigest((1 << 58) | i);
        for i in 0..2 {
            s.insert_digest(deep(i), None);
        }
        for i in 2..5 {
            for _ in 0..3 {
                s.insert_digest(deep(i), None);
            }
        }
        s.insert_digest(KeyDigest(1 << 60), None);
        assert_eq!((s.len(), s.depth()), (5, 4));
        let groups = model1_classify(&s);
        assert_eq!(groups.len(), 2);
        assert_eq!((groups[0].count, groups[0].u, groups[0].n_hat), (1, 2, 32.0));
        assert_eq!((groups[1].count, groups[1].u, groups[1].n_hat), (3, 3, 48.0));
        assert!((groups[0].p_hat - 0.4).abs() < 1e-15);
    }

    #[test]
    fn report_serializes_with_flat_estimate() {
        let mut s = sampler(8);
        s.insert(b"a", Some(Color(1))).unwrap();
        let json = serde_json::to_value(sketch_report(&s, None)).unwrap();
        assert_eq!(json["n_hat"], 1.0);
        assert_eq!(json["r"], 1);
        assert_eq!(json["colors"][0]["color"], 1);
        assert!(json.get("green").is_none());
    }
}

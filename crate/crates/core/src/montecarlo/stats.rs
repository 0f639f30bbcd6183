//! Aggregation of trial outcomes and distance measures between empirical and
//! theoretical distributions.

use std::collections::BTreeMap;

use super::metric::Metric;
use crate::analytics::JointLaw;

/// Running mean and variance (Welford), mergeable (Chan et al.).
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Welford {
    count: u64,
    mean: f64,
    m2: f64,
}

impl Welford {
    pub fn push(&mut self, x: f64) {
        self.count += 1;
        let delta = x - self.mean;
        self.mean += delta / self.count as f64;
        self.m2 += delta * (x - self.mean);
    }

    pub fn merge(&mut self, other: &Welford) {
        if other.count == 0 {
            return;
        }
        if self.count == 0 {
            *self = *other;
            return;
        }
        let n = (self.count + other.count) as f64;
        let delta = other.mean - self.mean;
        self.mean += delta * other.count as f64 / n;
        self.m2 += other.m2 + delta * delta * self.count as f64 * other.count as f64 / n;
        self.count += other.count;
    }

    pub fn count(&self) -> u64 {
        self.count
    }

    pub fn mean(&self) -> f64 {
        if self.count == 0 {
            f64::NAN
        } else {
            self.mean
        }
    }

    /// Sample variance with divisor `count - 1`.
    pub fn variance(&self) -> f64 {
        if self.count < 2 {
            f64::NAN
        } else {
            self.m2 / (self.count - 1) as f64
        }
    }
}

/// Collected outcomes of a trial campaign.
///
/// Each metric keeps its per-trial values in trial order (`NaN` where the
/// metric is undefined for that trial) plus a running mean/variance over the
/// defined values. The joint `(R, D)` counts are always recorded.
#[derive(Debug, Clone, PartialEq)]
pub struct TrialStats {
    metrics: Vec<Metric>,
    columns: Vec<Vec<f64>>,
    moments: Vec<Welford>,
    joint: BTreeMap<(u64, u32), u64>,
    trials: u64,
}

impl TrialStats {
    pub fn new(metrics: &[Metric]) -> Self {
        Self {
            metrics: metrics.to_vec(),
            columns: vec![Vec::new(); metrics.len()],
            moments: vec![Welford::default(); metrics.len()],
            joint: BTreeMap::new(),
            trials: 0,
        }
    }

    /// Records one trial; `values` follows the metric order.
    pub fn record(&mut self, r: u64, d: u32, values: &[f64]) {
        debug_assert_eq!(values.len(), self.metrics.len());
        for ((col, w), &v) in self.columns.iter_mut().zip(&mut self.moments).zip(values) {
            col.push(v);
            if v.is_finite() {
                w.push(v);
            }
        }
        *self.joint.entry((r, d)).or_default() += 1;
        self.trials += 1;
    }

    /// Appends `other`, which must track the same metrics.
    pub fn merge(&mut self, other: TrialStats) {
        assert_eq!(self.metrics, other.metrics, "merging stats of different metrics");
        for (mine, theirs) in self.columns.iter_mut().zip(other.columns) {
            mine.extend(theirs);
        }
        for (mine, theirs) in self.moments.iter_mut().zip(&other.moments) {
            mine.merge(theirs);
        }
        for (k, c) in other.joint {
            *self.joint.entry(k).or_default() += c;
        }
        self.trials += other.trials;
    }

    pub fn trials(&self) -> u64 {
        self.trials
    }

    pub fn metrics(&self) -> &[Metric] {
        &self.metrics
    }

    fn index(&self, m: Metric) -> Option<usize> {
        self.metrics.iter().position(|x| *x == m)
    }

    /// Per-trial values, `NaN` where undefined.
    pub fn column(&self, m: Metric) -> Option<&[f64]> {
        self.index(m).map(|i| self.columns[i].as_slice())
    }

    /// Defined values only.
    pub fn values(&self, m: Metric) -> Vec<f64> {
        self.column(m)
            .map(|c| c.iter().copied().filter(|v| v.is_finite()).collect())
            .unwrap_or_default()
    }

    pub fn summary(&self, m: Metric) -> Option<Welford> {
        self.index(m).map(|i| self.moments[i])
    }

    pub fn mean(&self, m: Metric) -> f64 {
        self.summary(m).map_or(f64::NAN, |w| w.mean())
    }

    pub fn variance(&self, m: Metric) -> f64 {
        self.summary(m).map_or(f64::NAN, |w| w.variance())
    }

    /// Sample covariance over trials where both metrics are defined.
    pub fn covariance(&self, a: Metric, b: Metric) -> f64 {
        let (Some(x), Some(y)) = (self.column(a), self.column(b)) else {
            return f64::NAN;
        };
        let pairs: Vec<(f64, f64)> = x
            .iter()
            .zip(y)
            .filter(|(u, v)| u.is_finite() && v.is_finite())
            .map(|(u, v)| (*u, *v))
            .collect();
        if pairs.len() < 2 {
            return f64::NAN;
        }
        let n = pairs.len() as f64;
        let mx = pairs.iter().map(|p| p.0).sum::<f64>() / n;
        let my = pairs.iter().map(|p| p.1).sum::<f64>() / n;
        pairs.iter().map(|(u, v)| (u - mx) * (v - my)).sum::<f64>() / (n - 1.0)
    }

    /// Empirical `P(R = r, D = d)`.
    pub fn joint_pmf(&self) -> BTreeMap<(u64, u32), f64> {
        let t = self.trials as f64;
        self.joint.iter().map(|(k, c)| (*k, *c as f64 / t)).collect()
    }

    /// Empirical `P(R = r)` for `r = 0..=b`.
    pub fn r_pmf(&self, b: u32) -> Vec<f64> {
        let mut pmf = vec![0.0; b as usize + 1];
        for ((r, _), c) in &self.joint {
            pmf[*r as usize] += *c as f64;
        }
        let t = self.trials as f64;
        pmf.iter_mut().for_each(|p| *p /= t);
        pmf
    }
}

/// `½ Σ |a_i - b_i|`, padding the shorter side with zeros.
pub fn tv_distance(a: &[f64], b: &[f64]) -> f64 {
    let len = a.len().max(b.len());
    let at = |v: &[f64], i: usize| v.get(i).copied().unwrap_or(0.0);
    0.5 * (0..len).map(|i| (at(a, i) - at(b, i)).abs()).sum::<f64>()
}

/// Total variation between an empirical joint pmf and the exact law.
pub fn joint_tv(empirical: &BTreeMap<(u64, u32), f64>, law: &JointLaw) -> f64 {
    let mut acc = 0.0;
    let mut covered = 0.0;
    for (d, row) in law.rows.iter().enumerate() {
        for (r, &p) in row.iter().enumerate() {
            let e = empirical.get(&(r as u64, d as u32)).copied().unwrap_or(0.0);
            acc += (e - p).abs();
            covered += e;
        }
    }
    // empirical mass outside the tabulated support
    let total: f64 = empirical.values().sum();
    0.5 * (acc + (total - covered))
}

/// Kolmogorov-Smirnov statistic of `samples` against a continuous CDF.
pub fn ks_statistic(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

/// Asymptotic KS critical value at significance `alpha` for `n` samples.
pub fn ks_critical(n: usize, alpha: f64) -> f64 {
    (-(alpha / 2.0).ln() / 2.0).sqrt() / (n as f64).sqrt()
}

/// Sup distance between the empirical CDF of `samples` (normalised by
/// `total`, which may exceed the sample count) and a right-continuous step
/// CDF whose jumps sit at the sample atoms. `cdf` is evaluated just to the
/// right of each atom and at the midpoints between consecutive atoms.
pub fn step_cdf_distance(samples: &[f64], total: u64, cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let t = total as f64;
    let mut atoms: Vec<(f64, usize)> = Vec::new();
    for (i, &x) in xs.iter().enumerate() {
        match atoms.last_mut() {
            Some((a, c)) if (x - *a).abs() < 1e-9 => *c = i + 1,
            _ => atoms.push((x, i + 1)),
        }
    }
    let mut worst: f64 = 0.0;
    let mut below = 0usize;
    for (k, &(a, upto)) in atoms.iter().enumerate() {
        let left = if k == 0 { a - 1.0 } else { 0.5 * (atoms[k - 1].0 + a) };
        worst = worst.max((cdf(left) - below as f64 / t).abs());
        worst = worst.max((cdf(a + 1e-7) - upto as f64 / t).abs());
        below = upto;
    }
    if let Some(&(a, upto)) = atoms.last() {
        worst = worst.max((cdf(a + 1.0) - upto as f64 / t).abs());
    }
    worst
}

/// First Wasserstein distance between `samples` and the standard normal.
pub fn wasserstein_to_normal(samples: &[f64]) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    let normal = Normal::new(0.0, 1.0).expect("unit normal");
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    if n == 0 {
        return f64::NAN;
    }
    // ∫ |F_n - Φ| over a fine grid spanning the samples and the normal mass
    let lo = xs[0].min(-8.0);
    let hi = xs[n - 1].max(8.0);
    let steps = 200_000usize;
    let h = (hi - lo) / steps as f64;
    let mut idx = 0usize;
    let mut acc = 0.0;
    for s in 0..steps {
        let x = lo + (s as f64 + 0.5) * h;
        while idx < n && xs[idx] <= x {
            idx += 1;
        }
        acc += (idx as f64 / n as f64 - normal.cdf(x)).abs();
    }
    acc * h
}

/// Standard normal CDF.
pub fn normal_cdf(x: f64) -> f64 {
    use statrs::distribution::{ContinuousCDF, Normal};
    Normal::new(0.0, 1.0).expect("unit normal").cdf(x)
}

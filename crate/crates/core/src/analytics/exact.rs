//! Finite-`n` joint law of the final cache size `R` and depth `D`.
//!
//! With `N_d` the number of keys of level at least `d`, the process stops at
//! the first depth with `N_d <= b`, so `P(R = r, D = d) = P(N_d = r,
//! N_{d-1} > b)`. `N_d ~ Bin(n, q^d)` and, given `N_d = r`, the `n - r`
//! remaining keys reach level `d - 1` independently with probability
//! `p q^(d-1) / (1 - q^d)`.

use super::special::{ln_choose, sum, NeumaierSum};
use super::ModelParams;
use crate::error::AnalyticsError;

fn binomial_ln_pmf(k: u64, trials: u64, x: f64) -> f64 {
    if k > trials {
        return f64::NEG_INFINITY;
    }
    if x <= 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    if x >= 1.0 {
        return if k == trials { 0.0 } else { f64::NEG_INFINITY };
    }
    let (k_f, t_f) = (k as f64, trials as f64);
    ln_choose(t_f, k_f) + k_f * x.ln() + (t_f - k_f) * (-x).ln_1p()
}

/// `P(Bin(trials, x) >= m)`.
pub(crate) fn binomial_upper_tail(m: u64, trials: u64, x: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if m > trials || x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let mean = trials as f64 * x;
    if mean < m as f64 {
        let ratio = x / (1.0 - x);
        let mut acc = NeumaierSum::default();
        let mut k = m;
        let mut t = binomial_ln_pmf(k, trials, x).exp();
        while t > 0.0 && k <= trials {
            acc.add(t);
            if t < acc.value() * 1e-18 {
                break;
            }
            t *= (trials - k) as f64 / (k + 1) as f64 * ratio;
            k += 1;
        }
        acc.value()
    } else {
        1.0 - sum((0..m).map(|k| binomial_ln_pmf(k, trials, x).exp()))
    }
}

/// Joint pmf of `(R, D)` tabulated over the depths that carry mass.
#[derive(Debug, Clone)]
pub struct JointLaw {
    /// `rows[d][r] = P(R = r, D = d)`.
    pub rows: Vec<Vec<f64>>,
}

impl JointLaw {
    pub fn prob(&self, r: u32, d: u32) -> f64 {
        self.rows
            .get(d as usize)
            .and_then(|row| row.get(r as usize))
            .copied()
            .unwrap_or(0.0)
    }

    pub fn total_mass(&self) -> f64 {
        sum(self.rows.iter().flatten().copied())
    }

    /// `P(R = r)` for `r = 0..=b`.
    pub fn marginal_r(&self) -> Vec<f64> {
        let width = self.rows.first().map_or(0, Vec::len);
        (0..width)
            .map(|r| sum(self.rows.iter().map(|row| row[r])))
            .collect()
    }

    /// `P(D = d)`.
    pub fn marginal_d(&self) -> Vec<f64> {
        self.rows.iter().map(|row| sum(row.iter().copied())).collect()
    }
}

impl ModelParams {
    fn check_n(n: u64) -> Result<(), AnalyticsError> {
        if n == 0 {
            return Err(AnalyticsError::InvalidParameter("n must be at least 1".into()));
        }
        Ok(())
    }

    /// `P(R = r, D = d)` for `n` distinct keys.
    pub fn exact_joint_prob(&self, n: u64, r: u32, d: u32) -> Result<f64, AnalyticsError> {
        Self::check_n(n)?;
        self.check_r(r)?;
        Ok(self.joint_prob_with(n, r, d, |d| {
            let qd = self.q.powi(d as i32);
            self.p() * self.q.powi(d as i32 - 1) / (1.0 - qd)
        }))
    }

    /// The classical printed form of the joint law, which draws the twin
    /// bucket from `Bin(n - r, p q^(d-1))` without conditioning on the keys
    /// already counted at level `d`. Its total mass falls short of 1 by
    /// `O(b/n)`; kept for comparison with [`exact_joint_prob`](Self::exact_joint_prob).
    pub fn printed_joint_prob(&self, n: u64, r: u32, d: u32) -> Result<f64, AnalyticsError> {
        Self::check_n(n)?;
        self.check_r(r)?;
        Ok(self.joint_prob_with(n, r, d, |d| self.p() * self.q.powi(d as i32 - 1)))
    }

    fn joint_prob_with(&self, n: u64, r: u32, d: u32, twin: impl Fn(u32) -> f64) -> f64 {
        let r64 = r as u64;
        if r64 > n {
            return 0.0;
        }
        if d == 0 {
            return if r64 == n && n <= self.b as u64 { 1.0 } else { 0.0 };
        }
        let qd = self.q.powi(d as i32);
        let head = binomial_ln_pmf(r64, n, qd).exp();
        if head == 0.0 {
            return 0.0;
        }
        let need = (self.b - r) as u64 + 1;
        head * binomial_upper_tail(need, n - r64, twin(d))
    }

    /// Tabulates the exact joint law for `n` keys, stopping once
    /// `q^d n < 1e-12`.
    pub fn joint_law(&self, n: u64) -> Result<JointLaw, AnalyticsError> {
        Self::check_n(n)?;
        let mut rows = Vec::new();
        let mut d = 0u32;
        loop {
            let row = (0..=self.b)
                .map(|r| self.exact_joint_prob(n, r, d))
                .collect::<Result<Vec<_>, _>>()?;
            rows.push(row);
            if self.q.powi(d as i32) * (n as f64) < 1e-12 {
                break;
            }
            d += 1;
        }
        Ok(JointLaw { rows })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn r_larger_than_n_vanishes() {
        let m = ModelParams::symmetric(16).unwrap();
        assert_eq!(m.exact_joint_prob(5, 7, 3).unwrap(), 0.0);
        assert!(m.exact_joint_prob(5, 17, 3).is_err());
        assert!(m.exact_joint_prob(0, 1, 3).is_err());
    }

    #[test]
    fn small_stream_stays_at_depth_zero() {
        let m = ModelParams::symmetric(8).unwrap();
        assert_eq!(m.exact_joint_prob(5, 5, 0).unwrap(), 1.0);
        let law = m.joint_law(5).unwrap();
        assert!((law.total_mass() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn total_mass_is_one() {
        for (n, b, q) in [(4096u64, 16u32, 0.5), (1000, 8, 0.7), (100_000, 32, 0.5), (50, 10, 0.3)] {
            let m = ModelParams::new(b, q).unwrap();
            let mass = m.joint_law(n).unwrap().total_mass();
            assert!((mass - 1.0).abs() < 1e-10, "n={n} b={b} q={q}: {mass}");
        }
    }

    #[test]
    fn large_n_in_log_space() {
        let m = ModelParams::symmetric(64).unwrap();
        let law = m.joint_law(1_000_000).unwrap();
        // ln Γ(1e6) carries ~1e-10 absolute error
        assert!((law.total_mass() - 1.0).abs() < 1e-8);
        assert!(law.rows.iter().flatten().all(|p| (0.0..=1.0).contains(p)));
    }

    #[test]
    fn printed_form_is_deficient() {
        let m = ModelParams::symmetric(16).unwrap();
        let mut mass = 0.0;
        for d in 0..40 {
            for r in 0..=16 {
                mass += m.printed_joint_prob(4096, r, d).unwrap();
            }
        }
        assert!((mass - 0.998_384).abs() < 1e-5, "{mass}");
    }

    #[test]
    fn binomial_tail_against_brute_force() {
        for (m, t, x) in [(3u64, 10u64, 0.1), (8, 20, 0.5), (1, 5, 0.9), (15, 40, 0.05)] {
            let brute: f64 = (m..=t).map(|k| binomial_ln_pmf(k, t, x).exp()).sum();
            assert!((binomial_upper_tail(m, t, x) - brute).abs() < 1e-14);
        }
    }

    #[test]
    fn joint_law_by_enumeration() {
        // n = 3 keys, b = 1, q = 1/2: enumerate levels 0..30 for independent keys.
        let m = ModelParams::symmetric(1).unwrap();
        let law = m.joint_law(3).unwrap();
        let mut brute = vec![vec![0.0; 2]; 40];
        let lv = 30usize;
        for a in 0..lv {
            for b in 0..lv {
                for c in 0..lv {
                    let pr = 0.5f64.powi((a + b + c) as i32 + 3);
                    let levels = [a, b, c];
                    let mut d = 0;
                    while levels.iter().filter(|&&l| l >= d).count() > 1 {
                        d += 1;
                    }
                    let r = levels.iter().filter(|&&l| l >= d).count();
                    brute[d][r] += pr;
                }
            }
        }
        for d in 0..10 {
            for r in 0..=1 {
                assert!((law.prob(r as u32, d as u32) - brute[d][r]).abs() < 1e-6);
            }
        }
    }
}

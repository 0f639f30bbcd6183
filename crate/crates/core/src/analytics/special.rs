//! Special functions: log-gamma, gamma, digamma, trigamma, Stirling numbers
//! of the second kind, harmonic numbers, plus compensated summation.

#![allow(clippy::excessive_precision)]

use std::f64::consts::PI;

/// Euler-Mascheroni constant.
pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_860_606_512_090_082;

// Lanczos approximation, g = 7, n = 9.
const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_93,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_13,
    -176.615_029_162_140_59,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_571_6e-6,
    1.505_632_735_149_311_6e-7,
];

fn lanczos_sum(x: f64) -> f64 {
    // x is the shifted argument (z - 1).
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (x + i as f64);
    }
    a
}

/// `ln |Γ(x)|`.
pub fn ln_gamma(x: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::INFINITY;
    }
    if x < 0.5 {
        return (PI / (PI * x).sin().abs()).ln() - ln_gamma(1.0 - x);
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    0.5 * (2.0 * PI).ln() + (z + 0.5) * t.ln() - t + lanczos_sum(z).ln()
}

/// `Γ(x)`; infinite at the poles.
pub fn gamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::NAN;
    }
    if x < 0.5 {
        return PI / ((PI * x).sin() * gamma(1.0 - x));
    }
    if x > 171.7 {
        return f64::INFINITY;
    }
    let z = x - 1.0;
    let t = z + LANCZOS_G + 0.5;
    (2.0 * PI).sqrt() * t.powf(z + 0.5) * (-t).exp() * lanczos_sum(z)
}

/// Digamma `ψ(x) = Γ'(x)/Γ(x)`.
pub fn digamma(x: f64) -> f64 {
    if x.is_nan() || x == f64::NEG_INFINITY {
        return f64::NAN;
    }
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::NAN;
    }
    if x < 0.0 {
        return digamma(1.0 - x) - PI / (PI * x).tan();
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 12.0 {
        acc -= 1.0 / z;
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    // Bernoulli asymptotic series.
    let tail = r2
        * (1.0 / 12.0
            - r2 * (1.0 / 120.0
                - r2 * (1.0 / 252.0 - r2 * (1.0 / 240.0 - r2 * (1.0 / 132.0 - r2 * 691.0 / 32_760.0)))));
    acc + z.ln() - 0.5 * r - tail
}

/// Trigamma `ψ'(x)`.
pub fn trigamma(x: f64) -> f64 {
    if x <= 0.0 && x.fract() == 0.0 {
        return f64::NAN;
    }
    if x < 0.0 {
        let s = PI / (PI * x).sin();
        return -trigamma(1.0 - x) + s * s;
    }
    let mut acc = 0.0;
    let mut z = x;
    while z < 12.0 {
        acc += 1.0 / (z * z);
        z += 1.0;
    }
    let r = 1.0 / z;
    let r2 = r * r;
    let series = r
        + 0.5 * r2
        + r * r2
            * (1.0 / 6.0
                - r2 * (1.0 / 30.0 - r2 * (1.0 / 42.0 - r2 * (1.0 / 30.0 - r2 * 5.0 / 66.0))));
    acc + series
}

/// `ln C(n, k)` for real `n >= k >= 0`.
pub fn ln_choose(n: f64, k: f64) -> f64 {
    ln_gamma(n + 1.0) - ln_gamma(k + 1.0) - ln_gamma(n - k + 1.0)
}

/// `ln k!`, computed from `ln_gamma`.
pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Harmonic number `H_n`.
pub fn harmonic(n: u64) -> f64 {
    let mut s = NeumaierSum::default();
    for i in 1..=n {
        s.add(1.0 / i as f64);
    }
    s.value()
}

/// Triangle of Stirling numbers of the second kind, `S(k, i)` for
/// `0 <= i <= k <= max_k`, stored as `f64`.
#[derive(Debug, Clone)]
pub struct StirlingTable {
    rows: Vec<Vec<f64>>,
}

impl StirlingTable {
    pub fn new(max_k: usize) -> Self {
        let mut rows = vec![vec![1.0]];
        for k in 1..=max_k {
            let prev = &rows[k - 1];
            let mut row = vec![0.0; k + 1];
            for (i, slot) in row.iter_mut().enumerate().skip(1) {
                let carry = if i < k { i as f64 * prev[i] } else { 0.0 };
                *slot = carry + prev[i - 1];
            }
            rows.push(row);
        }
        Self { rows }
    }

    pub fn max_k(&self) -> usize {
        self.rows.len() - 1
    }

    /// `S(k, i)`; zero outside the triangle.
    pub fn get(&self, k: usize, i: usize) -> f64 {
        self.rows
            .get(k)
            .and_then(|row| row.get(i))
            .copied()
            .unwrap_or(0.0)
    }
}

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct NeumaierSum {
    sum: f64,
    comp: f64,
}

impl NeumaierSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl std::iter::FromIterator<f64> for NeumaierSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// Compensated sum of an iterator.
pub fn sum<I: IntoIterator<Item = f64>>(iter: I) -> f64 {
    iter.into_iter().collect::<NeumaierSum>().value()
}

/// Upper tail `P(Poisson(mean) >= m)`, accurate when the tail is tiny.
pub fn poisson_upper_tail(m: u64, mean: f64) -> f64 {
    if m == 0 {
        return 1.0;
    }
    if mean <= 0.0 {
        return 0.0;
    }
    let ln_mean = mean.ln();
    let term = |k: u64| (-mean + k as f64 * ln_mean - ln_factorial(k)).exp();
    if mean < m as f64 {
        // Terms decrease from k = m onward.
        let mut s = NeumaierSum::default();
        let mut k = m;
        let mut t = term(k);
        while t > 0.0 {
            s.add(t);
            if t < s.value() * 1e-18 {
                break;
            }
            k += 1;
            t *= mean / k as f64;
        }
        s.value()
    } else {
        1.0 - sum((0..m).map(term))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gamma_values() {
        assert!((ln_gamma(1.0)).abs() < 1e-14);
        assert!((ln_gamma(2.0)).abs() < 1e-14);
        assert!((ln_gamma(10.0) - 362_880f64.ln()).abs() < 1e-12);
        assert!((gamma(0.5) - PI.sqrt()).abs() < 1e-13);
        assert!((gamma(5.0) - 24.0).abs() < 1e-11);
        assert!((gamma(-0.5) + 2.0 * PI.sqrt()).abs() < 1e-12);
        // ln Γ(100) reference value
        assert!((ln_gamma(100.0) - 359.134_205_369_575_4).abs() < 1e-10);
    }

    #[test]
    fn digamma_values() {
        assert!((digamma(1.0) + EULER_GAMMA).abs() < 1e-12);
        assert!((digamma(0.5) + EULER_GAMMA + 2.0 * 2f64.ln()).abs() < 1e-12);
        // recurrence ψ(x+1) = ψ(x) + 1/x
        for x in [0.3, 1.7, 4.2, 15.5] {
            assert!((digamma(x + 1.0) - digamma(x) - 1.0 / x).abs() < 1e-12);
        }
    }

    #[test]
    fn trigamma_values() {
        assert!((trigamma(1.0) - PI * PI / 6.0).abs() < 1e-12);
        assert!((trigamma(0.5) - PI * PI / 2.0).abs() < 1e-11);
        for x in [0.3, 2.5, 20.0] {
            assert!((trigamma(x) - trigamma(x + 1.0) - 1.0 / (x * x)).abs() < 1e-12);
        }
    }

    #[test]
    fn stirling_edges() {
        let t = StirlingTable::new(64);
        for k in 1..=64 {
            assert_eq!(t.get(k, 1), 1.0);
            assert_eq!(t.get(k, k), 1.0);
        }
        assert_eq!(t.get(4, 2), 7.0);
        assert_eq!(t.get(5, 3), 25.0);
        assert_eq!(t.get(10, 5), 42_525.0);
        // Σ_i S(k,i) = Bell numbers
        let bell5: f64 = (0..=5).map(|i| t.get(5, i)).sum();
        assert_eq!(bell5, 52.0);
    }

    #[test]
    fn harmonic_values() {
        assert_eq!(harmonic(1), 1.0);
        assert!((harmonic(4) - 25.0 / 12.0).abs() < 1e-15);
    }

    #[test]
    fn poisson_tail_matches_complement() {
        for (m, mean) in [(3u64, 0.5), (10, 2.0), (5, 7.0), (20, 19.0)] {
            let direct = poisson_upper_tail(m, mean);
            let lower: f64 = (0..m)
                .map(|k| (-mean + k as f64 * mean.ln() - ln_factorial(k)).exp())
                .sum();
            assert!((direct - (1.0 - lower)).abs() < 1e-13, "{m} {mean}");
        }
        assert!(poisson_upper_tail(40, 1e-3) > 0.0);
    }
}

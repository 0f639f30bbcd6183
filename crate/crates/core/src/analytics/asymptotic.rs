//! Large-`n` law: Poisson urn density, its Laplace transform and the
//! non-periodic components of the moments of `R`, `D`, `Z` and `W`.

use std::f64::consts::PI;

use super::special::{
    digamma, ln_factorial, ln_gamma, poisson_upper_tail, sum, trigamma, StirlingTable,
    EULER_GAMMA,
};
use super::ModelParams;
use crate::error::AnalyticsError;

/// Marginal distribution and first two moments of the final cache size.
#[derive(Debug, Clone, PartialEq)]
pub struct RMoments {
    pub mean: f64,
    pub second_moment: f64,
    pub variance: f64,
    /// `pmf[r] = P(R = r)`, `r = 0..=b`.
    pub pmf: Vec<f64>,
}

/// `λ` above which `exp(-λ)` underflows.
const EXP_UNDERFLOW: f64 = 745.0;

impl ModelParams {
    /// Asymptotic density `f(r, eta)` of `(R, D)` with `eta = d - log_Q n`:
    /// `e^{-λ} λ^r / r! * P(Poisson(λ p/q) > b - r)` with `λ = Q^{-eta}`.
    pub fn asym_density(&self, r: u32, eta: f64) -> Result<f64, AnalyticsError> {
        self.check_r(r)?;
        Ok(self.density_unchecked(r, eta))
    }

    fn density_unchecked(&self, r: u32, eta: f64) -> f64 {
        let lambda = (-self.l * eta).exp();
        if !lambda.is_finite() || lambda > EXP_UNDERFLOW {
            return 0.0;
        }
        if lambda == 0.0 {
            return 0.0;
        }
        let head = (-lambda + r as f64 * lambda.ln() - ln_factorial(r as u64)).exp();
        let twin = lambda * self.p() / self.q;
        head * poisson_upper_tail((self.b - r) as u64 + 1, twin)
    }

    /// Laplace transform `phi(r, alpha) = ∫ e^{alpha eta} f(r, eta) d eta`.
    ///
    /// For `r > 0` requires `r - alpha/L > 0`. For `r = 0` the removable
    /// singularity at `alpha = 0` is evaluated through
    /// `Γ(-x)(1 - e^{xL}) = Γ(1-x) expm1(xL)/x`, valid for `x < 1`.
    pub fn laplace_phi(&self, r: u32, alpha: f64) -> Result<f64, AnalyticsError> {
        self.check_r(r)?;
        let x = alpha / self.l;
        let (ln_q, ln_pq) = (self.q.ln(), (self.p() / self.q).ln());
        // Everything is scaled by 1/r! inside the exponent to avoid overflow.
        let ln_rf = ln_factorial(r as u64);
        let term = |k: u32| {
            let c = (r + k) as f64 - x;
            (ln_gamma(c) + c * ln_q + k as f64 * ln_pq - ln_factorial(k as u64) - ln_rf).exp()
        };
        if r == 0 {
            if x >= 1.0 {
                return Err(AnalyticsError::GammaPole(-x));
            }
            let singular = if x == 0.0 {
                self.l
            } else {
                (self.l * x).exp_m1() / x
            };
            let head = (ln_gamma(1.0 - x)).exp() * singular;
            let tail = sum((1..=self.b).map(term));
            return Ok((head - tail) / self.l);
        }
        if r as f64 - x <= 0.0 {
            return Err(AnalyticsError::GammaPole(r as f64 - x));
        }
        let head = (ln_gamma(r as f64 - x) - ln_rf).exp();
        let tail = sum((0..=self.b - r).map(term));
        Ok((head - tail) / self.l)
    }

    /// Grid marginal `Σ_j f(r, j - frac)`, the finite-`n` analogue of
    /// `P(R = r)` when `frac = {log_Q n}` (periodic part included).
    pub fn grid_marginal_r(&self, r: u32, frac: f64) -> Result<f64, AnalyticsError> {
        self.check_r(r)?;
        // λ = Q^{-eta} in [1e-300, 745] covers every non-negligible term.
        let lo = (-(EXP_UNDERFLOW.ln()) / self.l).floor() as i64 - 1;
        let hi = (300.0 * 10f64.ln() / self.l).ceil() as i64 + 1;
        Ok(sum((lo..=hi).map(|j| self.density_unchecked(r, j as f64 - frac))))
    }

    /// Non-periodic component `m_{k,r} = phi^{(k)}(r, 0)` of
    /// `E[(D - log_Q n)^k; R = r]`, for `k ∈ {1, 2}`.
    pub fn moments_d(&self, k: u32, r: u32) -> Result<f64, AnalyticsError> {
        self.check_r(r)?;
        match k {
            1 => Ok(self.m1(r)),
            2 => Ok(self.m2(r)),
            _ => Err(AnalyticsError::InvalidOrder { k, b: self.b }),
        }
    }

    fn weight(&self, r: u32, k: u32) -> f64 {
        // q^r p^k Γ(r+k) / (Γ(r+1) Γ(k+1))
        let c = (r + k) as f64;
        (r as f64 * self.q.ln() + k as f64 * self.p().ln() + ln_gamma(c)
            - ln_factorial(r as u64)
            - ln_factorial(k as u64))
        .exp()
    }

    fn m1(&self, r: u32) -> f64 {
        let l = self.l;
        let l2 = l * l;
        if r == 0 {
            let s = sum((1..=self.b).map(|i| {
                (digamma(i as f64) - l) * self.p().powi(i as i32) / (i as f64 * l2)
            }));
            return 0.5 + EULER_GAMMA / l + s;
        }
        let head = -digamma(r as f64) / (l2 * r as f64);
        let s = sum((0..=self.b - r).map(|k| {
            (digamma((r + k) as f64) - l) * self.weight(r, k) / l2
        }));
        head + s
    }

    fn m2(&self, r: u32) -> f64 {
        let l = self.l;
        let l3 = l * l * l;
        let bracket = |c: f64| {
            let psi = digamma(c);
            psi * psi + trigamma(c) - 2.0 * l * psi + l * l
        };
        if r == 0 {
            let s = sum((1..=self.b).map(|i| bracket(i as f64) * self.p().powi(i as i32) / (i as f64 * l3)));
            return 1.0 / 3.0
                + EULER_GAMMA / l
                + (EULER_GAMMA * EULER_GAMMA + PI * PI / 6.0) / (l * l)
                - s;
        }
        let rf = r as f64;
        let psi = digamma(rf);
        let head = (trigamma(rf) + psi * psi) / (l3 * rf);
        let s = sum((0..=self.b - r).map(|k| bracket((r + k) as f64) * self.weight(r, k) / l3));
        head - s
    }

    /// Non-periodic `E(D - log_Q n) = Σ_{r=0}^{b} m_{1,r}`.
    pub fn expected_depth_offset(&self) -> f64 {
        sum((0..=self.b).map(|r| self.m1(r)))
    }

    /// Non-periodic `(E(W; R>0), E(W^2; R>0))` with `W = D - log_Q n + log_Q R`.
    pub fn w_moments(&self) -> Result<(f64, f64), AnalyticsError> {
        let mut first = Vec::new();
        let mut second = Vec::new();
        for r in 1..=self.b {
            let lr = self.log_q(r as f64);
            let m1 = self.m1(r);
            let pr = self.laplace_phi(r, 0.0)?;
            first.push(m1 + pr * lr);
            second.push(self.m2(r) + 2.0 * m1 * lr + pr * lr * lr);
        }
        Ok((sum(first), sum(second)))
    }

    /// `P(W <= alpha, R > 0)` for symmetric bits, `frac = {lg n}`.
    pub fn w_cdf(&self, alpha: f64, frac: f64) -> Result<f64, AnalyticsError> {
        if !self.is_symmetric() {
            return Err(AnalyticsError::InvalidParameter(
                "the W distribution is defined for q = 1/2 only".into(),
            ));
        }
        if !(0.0..1.0).contains(&frac) {
            return Err(AnalyticsError::InvalidParameter(format!("frac = {frac} not in [0,1)")));
        }
        if alpha == f64::NEG_INFINITY {
            return Ok(0.0);
        }
        // Beyond this, 2^{-phi} < 1e-300 and the terms vanish.
        let top = 996.0;
        let mut acc = Vec::new();
        for r in 1..=self.b {
            let mut j = (frac - (r as f64).log2() + alpha).floor();
            if !j.is_finite() || j - frac > top {
                j = (top + frac).floor();
            }
            let mut ell = 0.0;
            loop {
                let phi = j - frac - ell;
                if (-phi).exp2() > EXP_UNDERFLOW {
                    break;
                }
                acc.push(self.density_unchecked(r, phi));
                ell += 1.0;
            }
        }
        Ok(sum(acc))
    }

    /// Non-periodic `E(Z^k)` with `Z = R Q^D / n`, `1 <= k <= b`.
    pub fn moments_z(&self, k: u32) -> Result<f64, AnalyticsError> {
        if k == 0 || k > self.b {
            return Err(AnalyticsError::InvalidOrder { k, b: self.b });
        }
        let table = StirlingTable::new(k as usize);
        let b = self.b as f64;
        let s = sum((1..k).map(|i| {
            let ratio = (ln_gamma(b - k as f64 + 1.0) - ln_gamma(b - i as f64 + 1.0)).exp();
            table.get(k as usize, i as usize) * (self.q.powi(i as i32 - k as i32) - 1.0)
                / (k - i) as f64
                * ratio
        }));
        Ok(1.0 + s / self.l)
    }

    /// Non-periodic `Var(Z) = m_{1,2} - 1`.
    pub fn variance_z(&self) -> Result<f64, AnalyticsError> {
        Ok(self.moments_z(2)? - 1.0)
    }

    /// Distribution and moments of `R`.
    pub fn moments_r(&self) -> Result<RMoments, AnalyticsError> {
        if self.b < 2 {
            return Err(AnalyticsError::InvalidParameter("b must be at least 2".into()));
        }
        let mut pmf = Vec::with_capacity(self.b as usize + 1);
        let zero = 1.0
            - sum((1..=self.b).map(|u| self.p().powi(u as i32) / (u as f64 * self.l)));
        pmf.push(zero);
        for r in 1..=self.b {
            pmf.push(self.laplace_phi(r, 0.0)?);
        }
        let (b, p, q, l) = (self.b as f64, self.p(), self.q, self.l);
        let mean = p * b / l;
        let second_moment = (b * (b + 1.0) / 2.0 - q * q * b * (b - 1.0) / 2.0 - q * b) / l;
        Ok(RMoments {
            mean,
            second_moment,
            variance: second_moment - mean * mean,
            pmf,
        })
    }

    /// Large-`b` value of `E(R^{-alpha}; R > 0)`: `(Q^alpha - 1) / (L alpha b^alpha)`.
    pub fn inv_r_moment(&self, alpha: f64) -> Result<f64, AnalyticsError> {
        if alpha.is_nan() || alpha <= 0.0 {
            return Err(AnalyticsError::InvalidParameter(format!("alpha = {alpha} must be > 0")));
        }
        let b = self.b as f64;
        Ok((self.growth().powf(alpha) - 1.0) / (self.l * alpha * b.powf(alpha)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::LN_2;

    fn sym(b: u32) -> ModelParams {
        ModelParams::symmetric(b).unwrap()
    }

    /// Trapezoid rule on a uniform grid; the integrand is smooth and decays
    /// faster than exponentially on both sides.
    fn quadrature(m: &ModelParams, r: u32, alpha: f64) -> f64 {
        let h = 2e-3;
        let (lo, hi) = (-12.0 / m.l() * LN_2, 60.0);
        let steps = ((hi - lo) / h) as usize;
        let mut acc = Vec::with_capacity(steps + 1);
        for i in 0..=steps {
            let eta = lo + i as f64 * h;
            let w = if i == 0 || i == steps { 0.5 } else { 1.0 };
            acc.push(w * (alpha * eta).exp() * m.asym_density(r, eta).unwrap());
        }
        sum(acc) * h
    }

    fn richardson_derivative(f: impl Fn(f64) -> f64, order: u32) -> f64 {
        let h = 1e-3;
        let d = |h: f64| match order {
            1 => (f(h) - f(-h)) / (2.0 * h),
            _ => (f(h) - 2.0 * f(0.0) + f(-h)) / (h * h),
        };
        (4.0 * d(h / 2.0) - d(h)) / 3.0
    }

    #[test]
    fn density_nonnegative_on_grid() {
        let m = sym(8);
        for r in 0..=8 {
            for i in 0..=2000 {
                let eta = -10.0 + i as f64 * 0.01;
                assert!(m.asym_density(r, eta).unwrap() >= 0.0);
            }
        }
    }

    #[test]
    fn symmetric_density_matches_closed_form() {
        // f(r,eta) = exp(-2^-eta) 2^{-r eta}/r! [1 - exp(-2^-eta) Σ_{k<=b-r} 2^{-k eta}/k!]
        let b = 8u32;
        let m = sym(b);
        for r in 0..=b {
            for eta in [-3.0, -1.2, 0.0, 0.7, 2.5, 5.0] {
                let lam: f64 = (-eta * LN_2).exp();
                let fact = |k: u32| (1..=k).map(f64::from).product::<f64>();
                let inner: f64 = (0..=b - r).map(|k| lam.powi(k as i32) / fact(k)).sum();
                let direct = (-lam).exp() * lam.powi(r as i32) / fact(r) * (1.0 - (-lam).exp() * inner);
                assert!((m.asym_density(r, eta).unwrap() - direct).abs() < 1e-13);
            }
        }
    }

    #[test]
    fn phi_matches_quadrature() {
        for (b, q) in [(8, 0.7), (8, 0.5), (16, 0.5), (5, 0.3)] {
            let m = ModelParams::new(b, q).unwrap();
            for r in 0..=b {
                let closed = m.laplace_phi(r, 0.0).unwrap();
                let quad = quadrature(&m, r, 0.0);
                assert!((closed - quad).abs() < 1e-8, "b={b} q={q} r={r}: {closed} vs {quad}");
            }
            // off zero as well
            for r in 1..=b {
                let alpha = -0.3;
                assert!((m.laplace_phi(r, alpha).unwrap() - quadrature(&m, r, alpha)).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn phi_normalizes() {
        for (b, q) in [(8, 0.5), (50, 0.5), (64, 0.7), (16, 0.3)] {
            let m = ModelParams::new(b, q).unwrap();
            let total: f64 = sum((0..=b).map(|r| m.laplace_phi(r, 0.0).unwrap()));
            assert!((total - 1.0).abs() < 1e-10, "{b} {q}: {total}");
            let pmf = m.moments_r().unwrap().pmf;
            assert!((sum(pmf.iter().copied()) - 1.0).abs() < 1e-10);
            assert!((pmf[0] - m.laplace_phi(0, 0.0).unwrap()).abs() < 1e-12);
        }
    }

    #[test]
    fn pole_rejected() {
        let m = sym(8);
        assert!(matches!(m.laplace_phi(2, 2.0 * LN_2), Err(AnalyticsError::GammaPole(_))));
        assert!(m.laplace_phi(0, LN_2).is_err());
    }

    #[test]
    fn moment_formulas_match_phi_derivatives() {
        for (b, q) in [(16, 0.5), (8, 0.7), (12, 0.3)] {
            let m = ModelParams::new(b, q).unwrap();
            for r in 0..=b {
                let f = |a: f64| m.laplace_phi(r, a).unwrap();
                let d1 = richardson_derivative(f, 1);
                let d2 = richardson_derivative(f, 2);
                let m1 = m.moments_d(1, r).unwrap();
                let m2 = m.moments_d(2, r).unwrap();
                assert!((d1 - m1).abs() < 1e-6, "b={b} q={q} r={r}: {d1} vs {m1}");
                assert!((d2 - m2).abs() < 1e-5, "b={b} q={q} r={r}: {d2} vs {m2}");
            }
        }
        assert!(sym(4).moments_d(3, 1).is_err());
    }

    #[test]
    fn depth_offset_large_b_slope() {
        let xs: Vec<f64> = [64u32, 128, 256, 512].iter().map(|&b| (b as f64).log2()).collect();
        let ys: Vec<f64> = [64u32, 128, 256, 512]
            .iter()
            .map(|&b| sym(b).expected_depth_offset())
            .collect();
        let mx = xs.iter().sum::<f64>() / 4.0;
        let my = ys.iter().sum::<f64>() / 4.0;
        let slope = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum::<f64>()
            / xs.iter().map(|x| (x - mx).powi(2)).sum::<f64>();
        assert!((slope + 1.0).abs() < 0.05, "slope {slope}");
    }

    #[test]
    fn z_moments() {
        let m = sym(101);
        assert_eq!(m.moments_z(1).unwrap(), 1.0);
        let var = m.variance_z().unwrap();
        assert!((var - 1.0 / (100.0 * LN_2)).abs() < 1e-14);
        assert!((var - 0.014427).abs() < 1e-6);
        assert!((var.sqrt() - 0.12).abs() < 0.001);
        assert!(m.moments_z(102).is_err());
        assert!(m.moments_z(0).is_err());
        let a = ModelParams::new(64, 0.7).unwrap();
        let expected = 0.3 / (63.0 * 0.7 * a.l());
        assert!((a.variance_z().unwrap() - expected).abs() < 1e-14);
    }

    #[test]
    fn z_moments_symmetric_specialization() {
        // 1 + ((b-k)!/L) Σ S(k,i) (2^{k-i}-1)/((k-i)(b-i)!) with integer arithmetic where possible
        let b = 16u32;
        let m = sym(b);
        let t = StirlingTable::new(5);
        for k in 1..=5u32 {
            let mut s = 0.0;
            for i in 1..k {
                let falling: f64 = ((b - k + 1)..=(b - i)).map(f64::from).product();
                s += t.get(k as usize, i as usize) * (2f64.powi((k - i) as i32) - 1.0)
                    / ((k - i) as f64 * falling);
            }
            let direct = 1.0 + s / LN_2;
            assert!((m.moments_z(k).unwrap() - direct).abs() < 1e-10);
        }
    }

    #[test]
    fn r_moments_symmetric() {
        let b = 50u32;
        let m = sym(b);
        let rm = m.moments_r().unwrap();
        let (bf, l) = (b as f64, LN_2);
        assert!((rm.mean - bf / (2.0 * l)).abs() < 1e-10);
        assert!((rm.second_moment - bf * (3.0 * bf + 1.0) / (8.0 * l)).abs() < 1e-9);
        let var = bf * (3.0 * l * bf - 2.0 * bf + l) / (8.0 * l * l);
        assert!((rm.variance - var).abs() < 1e-9);
        // moments of the pmf agree with the closed forms
        let mean: f64 = rm.pmf.iter().enumerate().map(|(r, p)| r as f64 * p).sum();
        let second: f64 = rm.pmf.iter().enumerate().map(|(r, p)| (r * r) as f64 * p).sum();
        assert!((mean - rm.mean).abs() < 1e-9);
        assert!((second - rm.second_moment).abs() < 1e-7);
        // r = 0 closed form 1 - Σ 1/(u 2^u L)
        let p0 = 1.0 - (1..=b).map(|u| 1.0 / (u as f64 * 2f64.powi(u as i32) * l)).sum::<f64>();
        assert!((rm.pmf[0] - p0).abs() < 1e-14);
        // a unimodal bump on [b/2, b]
        let mode = rm.pmf.iter().enumerate().max_by(|a, b| a.1.total_cmp(b.1)).unwrap().0;
        assert!(mode > 25 && mode < 40, "mode {mode}");
        assert!(rm.pmf[..20].iter().all(|p| *p < 0.01));
        assert!(sym(1).moments_r().is_err());
    }

    #[test]
    fn r_moments_asymmetric_from_pmf() {
        let m = ModelParams::new(64, 0.7).unwrap();
        let rm = m.moments_r().unwrap();
        let mean: f64 = rm.pmf.iter().enumerate().map(|(r, p)| r as f64 * p).sum();
        let second: f64 = rm.pmf.iter().enumerate().map(|(r, p)| (r * r) as f64 * p).sum();
        assert!((mean - rm.mean).abs() < 1e-9);
        assert!((second - rm.second_moment).abs() < 1e-7);
    }

    #[test]
    fn inverse_r_constants() {
        let b = 100u32;
        let m = sym(b);
        let (bf, l) = (b as f64, LN_2);
        assert!((m.inv_r_moment(1.0).unwrap() - 1.0 / (l * bf)).abs() < 1e-15);
        assert!((m.inv_r_moment(2.0).unwrap() - 3.0 / (2.0 * l * bf * bf)).abs() < 1e-15);
        let half = 2.0 * (2f64.sqrt() - 1.0) / (l * bf.sqrt());
        assert!((m.inv_r_moment(0.5).unwrap() - half).abs() < 1e-15);
        assert!(m.inv_r_moment(0.0).is_err());
        let a = ModelParams::new(64, 0.7).unwrap();
        assert!((a.inv_r_moment(1.0).unwrap() - 0.3 / (0.7 * a.l() * 64.0)).abs() < 1e-15);
    }

    #[test]
    fn inverse_r_from_pmf_b256() {
        let m = sym(256);
        let pmf = m.moments_r().unwrap().pmf;
        let direct = sum(pmf.iter().enumerate().skip(1).map(|(r, p)| p / r as f64));
        let target = m.inv_r_moment(1.0).unwrap();
        assert!((direct / target - 1.0).abs() < 0.10);
    }

    #[test]
    fn w_cdf_limits_and_monotonicity() {
        let m = sym(16);
        let frac = 0.37;
        assert_eq!(m.w_cdf(f64::NEG_INFINITY, frac).unwrap(), 0.0);
        assert!(m.w_cdf(-60.0, frac).unwrap() < 1e-12);
        let mass_positive = 1.0 - m.grid_marginal_r(0, frac).unwrap();
        assert!((m.w_cdf(1e3, frac).unwrap() - mass_positive).abs() < 1e-8);
        let mut prev = 0.0;
        for i in 0..=1000 {
            let alpha = -5.0 + i as f64 * 0.01;
            let v = m.w_cdf(alpha, frac).unwrap();
            assert!(v + 1e-15 >= prev);
            prev = v;
        }
        assert!(ModelParams::new(16, 0.7).unwrap().w_cdf(0.0, 0.0).is_err());
    }

    #[test]
    fn grid_marginals_sum_to_one() {
        for frac in [0.0, 0.25, 0.9] {
            let m = ModelParams::new(12, 0.6).unwrap();
            let total = sum((0..=12).map(|r| m.grid_marginal_r(r, frac).unwrap()));
            assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn grid_marginal_averages_to_phi() {
        // ∫_0^1 Σ_j f(r, j - t) dt = ∫ f(r, eta) d eta; the integrand is smooth
        // and periodic in t, so the midpoint rule converges geometrically.
        let m = sym(16);
        let k = 64;
        for r in 0..=16 {
            let avg = sum((0..k).map(|i| m.grid_marginal_r(r, (i as f64 + 0.5) / k as f64).unwrap()))
                / k as f64;
            let f = m.laplace_phi(r, 0.0).unwrap();
            assert!((avg - f).abs() < 1e-10, "r={r}: {avg} vs {f}");
        }
    }

    #[test]
    fn exact_marginal_converges_to_grid_marginal() {
        let m = sym(16);
        let law = m.joint_law(1 << 16).unwrap();
        let exact = law.marginal_r();
        for r in 0..=16u32 {
            let g = m.grid_marginal_r(r, 0.0).unwrap();
            assert!((exact[r as usize] - g).abs() < 1e-3, "r={r}");
        }
    }
}

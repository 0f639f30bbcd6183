//! Closed-form oracle for the adaptive sampling process.
//!
//! Everything here is a pure function of the bucket capacity `b` and the
//! bit-zero probability `q` (plus `n` for the finite-size law). The
//! asymptotic quantities are the non-periodic components only: the
//! oscillating terms in `log_Q n` are not evaluated, so simulations that are
//! compared against these values should use `n` a power of `Q` where
//! possible.
//!
//! Notation used in the docs: `p = 1 - q`, `Q = 1/q`, `L = ln Q`,
//! `eta = d - log_Q n`, `x = alpha / L`.

mod asymptotic;
mod exact;
pub mod special;

pub use asymptotic::RMoments;
pub use exact::JointLaw;

use crate::error::AnalyticsError;

/// Parameters of the analytic model.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ModelParams {
    b: u32,
    q: f64,
    l: f64,
}

impl ModelParams {
    pub fn new(b: u32, q: f64) -> Result<Self, AnalyticsError> {
        if b == 0 {
            return Err(AnalyticsError::InvalidParameter("b must be at least 1".into()));
        }
        if !(q > 0.0 && q < 1.0) {
            return Err(AnalyticsError::InvalidParameter(format!("q = {q} not in (0,1)")));
        }
        Ok(Self { b, q, l: -q.ln() })
    }

    pub fn symmetric(b: u32) -> Result<Self, AnalyticsError> {
        Self::new(b, 0.5)
    }

    pub fn b(&self) -> u32 {
        self.b
    }

    pub fn q(&self) -> f64 {
        self.q
    }

    pub fn p(&self) -> f64 {
        1.0 - self.q
    }

    /// `Q = 1/q`.
    pub fn growth(&self) -> f64 {
        1.0 / self.q
    }

    /// `L = ln(1/q)`.
    pub fn l(&self) -> f64 {
        self.l
    }

    pub fn is_symmetric(&self) -> bool {
        self.q == 0.5
    }

    /// `log_Q x`.
    pub fn log_q(&self, x: f64) -> f64 {
        x.ln() / self.l
    }

    fn check_r(&self, r: u32) -> Result<(), AnalyticsError> {
        if r > self.b {
            return Err(AnalyticsError::InvalidParameter(format!(
                "r = {r} exceeds b = {}",
                self.b
            )));
        }
        Ok(())
    }
}

/// First-order large-`b` approximation of `E(1/U; R > 0)` for a color of
/// proportion `p_color`, symmetric bits:
/// `1/(L b p) + 3(1-p)/(4 p^2 L b^2)`.
pub fn e_inv_u(b: u32, p_color: f64) -> Result<f64, AnalyticsError> {
    if b < 2 {
        return Err(AnalyticsError::InvalidParameter("b must be at least 2".into()));
    }
    if !(p_color > 0.0 && p_color <= 1.0) {
        return Err(AnalyticsError::InvalidParameter(format!(
            "color proportion {p_color} not in (0,1]"
        )));
    }
    let l = std::f64::consts::LN_2;
    let b = b as f64;
    Ok(1.0 / (l * b * p_color) + 3.0 * (1.0 - p_color) / (4.0 * p_color * p_color * l * b * b))
}

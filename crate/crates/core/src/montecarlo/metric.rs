//! Per-trial quantities collected by the trial runner.
//!
//! Names accepted by [`Metric::from_str`]:
//!
//! | name | value |
//! |------|-------|
//! | `r`, `d` | final cache size and depth |
//! | `z` | `R Q^D / n` |
//! | `w` | `log_Q Z`, on `R > 0` |
//! | `inv_r` | `1/R`, on `R > 0` |
//! | `u:<tag>` | resident keys of the color |
//! | `p_hat:<tag>` | `U/R`, on `R > 0` |
//! | `inv_u:<tag>` | `1/U`, on `U > 0` |
//! | `n_c_ratio:<tag>` | `Q^D U / n_C` |
//! | `mu_hat:<tag>` | mean resident count, on `U > 0` |
//! | `sigma2_hat:<tag>` | resident count variance (divisor `U`), on `U > 1` |
//! | `d_star` | depth of the black-green sampler |
//! | `d_plain` | depth of a plain sampler fed the same stream |
//! | `depth_gap` | `d_plain - d_star` |
//! | `h_total` | `Σ_d H[d]` |
//! | `n_g_ratio`, `n_b_ratio`, `n_hat_ratio` | green, black and total estimates over their true values |

use std::fmt;
use std::str::FromStr;

use crate::error::SimulationError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Metric {
    R,
    D,
    Z,
    W,
    InvR,
    U(u32),
    PHat(u32),
    InvU(u32),
    NcRatio(u32),
    MuHat(u32),
    Sigma2Hat(u32),
    DStar,
    DPlain,
    DepthGap,
    HTotal,
    NgRatio,
    NbRatio,
    NHatRatio,
}

impl Metric {
    /// Whether the metric needs the black-green extractor.
    pub fn needs_green(&self) -> bool {
        matches!(
            self,
            Metric::DStar
                | Metric::DPlain
                | Metric::DepthGap
                | Metric::HTotal
                | Metric::NgRatio
                | Metric::NbRatio
                | Metric::NHatRatio
        )
    }

    pub fn color(&self) -> Option<u32> {
        match *self {
            Metric::U(t)
            | Metric::PHat(t)
            | Metric::InvU(t)
            | Metric::NcRatio(t)
            | Metric::MuHat(t)
            | Metric::Sigma2Hat(t) => Some(t),
            _ => None,
        }
    }

    /// Parses a comma-separated list.
    pub fn parse_list(names: &str) -> Result<Vec<Metric>, SimulationError> {
        names
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(str::parse)
            .collect()
    }
}

impl FromStr for Metric {
    type Err = SimulationError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let unknown = || SimulationError::UnknownMetric(s.to_string());
        if let Some((head, tag)) = s.split_once(':') {
            let tag: u32 = tag.parse().map_err(|_| unknown())?;
            return Ok(match head {
                "u" => Metric::U(tag),
                "p_hat" => Metric::PHat(tag),
                "inv_u" => Metric::InvU(tag),
                "n_c_ratio" => Metric::NcRatio(tag),
                "mu_hat" => Metric::MuHat(tag),
                "sigma2_hat" => Metric::Sigma2Hat(tag),
                _ => return Err(unknown()),
            });
        }
        Ok(match s {
            "r" => Metric::R,
            "d" => Metric::D,
            "z" => Metric::Z,
            "w" => Metric::W,
            "inv_r" => Metric::InvR,
            "d_star" => Metric::DStar,
            "d_plain" => Metric::DPlain,
            "depth_gap" => Metric::DepthGap,
            "h_total" => Metric::HTotal,
            "n_g_ratio" => Metric::NgRatio,
            "n_b_ratio" => Metric::NbRatio,
            "n_hat_ratio" => Metric::NHatRatio,
            _ => return Err(unknown()),
        })
    }
}

impl fmt::Display for Metric {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Metric::R => write!(f, "r"),
            Metric::D => write!(f, "d"),
            Metric::Z => write!(f, "z"),
            Metric::W => write!(f, "w"),
            Metric::InvR => write!(f, "inv_r"),
            Metric::U(t) => write!(f, "u:{t}"),
            Metric::PHat(t) => write!(f, "p_hat:{t}"),
            Metric::InvU(t) => write!(f, "inv_u:{t}"),
            Metric::NcRatio(t) => write!(f, "n_c_ratio:{t}"),
            Metric::MuHat(t) => write!(f, "mu_hat:{t}"),
            Metric::Sigma2Hat(t) => write!(f, "sigma2_hat:{t}"),
            Metric::DStar => write!(f, "d_star"),
            Metric::DPlain => write!(f, "d_plain"),
            Metric::DepthGap => write!(f, "depth_gap"),
            Metric::HTotal => write!(f, "h_total"),
            Metric::NgRatio => write!(f, "n_g_ratio"),
            Metric::NbRatio => write!(f, "n_b_ratio"),
            Metric::NHatRatio => write!(f, "n_hat_ratio"),
        }
    }
}

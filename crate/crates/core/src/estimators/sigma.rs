//! Single-parameter estimation: invert a TV estimate and its confidence
//! interval into the noise scale of a known mechanism family.

use super::invert_monotone;
use crate::error::{AuditError, Result};
use crate::mechanisms::{GaussianMech, SubsampledGaussianMech};
use serde::{Deserialize, Serialize};

/// Mechanism family whose TV distance is a strictly decreasing function of σ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case")]
pub enum SigmaFamily {
    Gaussian { sensitivity: f64 },
    Mixture { q: f64 },
}

/// Search range for σ.
pub const SIGMA_BRACKET: (f64, f64) = (0.01, 100.0);

impl SigmaFamily {
    pub fn validate(&self) -> Result<()> {
        match *self {
            SigmaFamily::Gaussian { sensitivity } => {
                GaussianMech::new(1.0, sensitivity).map(|_| ())
            }
            SigmaFamily::Mixture { q } => SubsampledGaussianMech::new(q, 1.0).map(|_| ()),
        }
    }

    /// TV distance at noise scale `sigma`.
    pub fn tv(&self, sigma: f64) -> f64 {
        match *self {
            SigmaFamily::Gaussian { sensitivity } => GaussianMech {
                sigma,
                delta_sens: sensitivity,
            }
            .tv(),
            SigmaFamily::Mixture { q } => SubsampledGaussianMech { q, sigma }.tv_quadrature(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SigmaEstimate {
    pub family: SigmaFamily,
    pub tv: f64,
    pub tau: f64,
    pub tv_interval: (f64, f64),
    pub sigma: f64,
    pub sigma_interval: (f64, f64),
}

/// Inverts `tv_hat` and `[tv_hat − τ, tv_hat + τ]` through the family's
/// TV map. Interval endpoints beyond the attainable TV range on
/// [`SIGMA_BRACKET`] are clamped to it; a point estimate outside it is an error.
pub fn estimate_sigma_from_tv(tv_hat: f64, tau: f64, family: SigmaFamily) -> Result<SigmaEstimate> {
    family.validate()?;
    let f = |s: f64| family.tv(s);
    let (smin, smax) = SIGMA_BRACKET;
    let (tv_min, tv_max) = (f(smax), f(smin));
    if !(tv_hat >= tv_min && tv_hat <= tv_max) {
        return Err(AuditError::Bracket {
            target: tv_hat,
            lo: tv_min,
            hi: tv_max,
        });
    }
    let sigma = invert_monotone(f, tv_hat, SIGMA_BRACKET)?;
    let iv = crate::confidence::tv_interval(tv_hat, tau);
    let clamped = (iv.0.max(tv_min), iv.1.min(tv_max));
    let sigma_interval = crate::confidence::sigma_interval_from_tv(clamped, f, SIGMA_BRACKET)?;
    Ok(SigmaEstimate {
        family,
        tv: tv_hat,
        tau,
        tv_interval: iv,
        sigma,
        sigma_interval,
    })
}

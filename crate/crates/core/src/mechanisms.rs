//! Analytic mechanisms: privacy profiles, trade-off functions and densities
//! for the Gaussian, subsampled-Gaussian mixture and Laplace mechanisms.

use crate::discrete::DiscreteDistribution;
use crate::error::{check_positive, check_unit, AuditError, Result};
use crate::histogram::BinningSpec;
use crate::pld::{self, PldGridSpec};
use crate::profile::PrivacyProfile;
use crate::sampling::ScoreDistribution;
use crate::special::{compensated_sum, normal_cdf, normal_pdf, normal_quantile, normal_sf};
use serde::{Deserialize, Serialize};

/// Gaussian mechanism with noise scale `sigma` and L2 sensitivity `delta_sens`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GaussianMech {
    pub sigma: f64,
    pub delta_sens: f64,
}

impl GaussianMech {
    pub fn new(sigma: f64, delta_sens: f64) -> Result<Self> {
        check_positive("sigma", sigma)?;
        check_positive("sensitivity", delta_sens)?;
        Ok(Self { sigma, delta_sens })
    }

    /// `δ(ε) = Φ(−εσ/Δ + Δ/2σ) − e^ε Φ(−εσ/Δ − Δ/2σ)`.
    pub fn delta(&self, eps: f64) -> f64 {
        let a = self.delta_sens / (2.0 * self.sigma);
        let b = self.sigma / self.delta_sens;
        let t1 = normal_cdf(-eps * b + a);
        let c2 = normal_cdf(-eps * b - a);
        let t2 = if c2 > 0.0 { (eps + c2.ln()).exp() } else { 0.0 };
        (t1 - t2).clamp(0.0, 1.0)
    }

    /// Total variation distance, `2Φ(Δ/2σ) − 1`.
    pub fn tv(&self) -> f64 {
        1.0 - 2.0 * normal_sf(self.delta_sens / (2.0 * self.sigma))
    }

    /// GDP parameter `Δ/σ`.
    pub fn mu(&self) -> f64 {
        self.delta_sens / self.sigma
    }

    /// Output distributions `(N(Δ, σ²), N(0, σ²))`.
    pub fn pair(&self) -> (ScoreDistribution, ScoreDistribution) {
        (
            ScoreDistribution::Normal {
                mean: self.delta_sens,
                sd: self.sigma,
            },
            ScoreDistribution::Normal {
                mean: 0.0,
                sd: self.sigma,
            },
        )
    }
}

/// Free-function form of [`GaussianMech::delta`].
pub fn gaussian_delta(mech: &GaussianMech, eps: f64) -> f64 {
    mech.delta(eps)
}

/// Poisson-subsampled Gaussian: `P = q N(1, σ²) + (1 − q) N(0, σ²)` against
/// `Q = N(0, σ²)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SubsampledGaussianMech {
    pub q: f64,
    pub sigma: f64,
}

/// Trapezoid nodes used by the mixture quadrature.
pub const QUADRATURE_NODES: usize = 1 << 16;

impl SubsampledGaussianMech {
    pub fn new(q: f64, sigma: f64) -> Result<Self> {
        if !(q > 0.0 && q <= 1.0) {
            return Err(AuditError::Domain {
                name: "q",
                value: q,
            });
        }
        check_positive("sigma", sigma)?;
        Ok(Self { q, sigma })
    }

    pub fn p_density(&self, x: f64) -> f64 {
        mixture_density(self, x)
    }

    pub fn q_density(&self, x: f64) -> f64 {
        normal_pdf(x / self.sigma) / self.sigma
    }

    /// Point where `P = αQ` (or `Q = αP` when `reverse`). The likelihood
    /// ratio is increasing in `x`, so the positive part lies on one side.
    fn crossing(&self, alpha: f64, reverse: bool) -> Option<f64> {
        let s2 = self.sigma * self.sigma;
        let ratio = if reverse {
            (1.0 - alpha * (1.0 - self.q)) / (alpha * self.q)
        } else {
            (alpha - 1.0 + self.q) / self.q
        };
        (ratio > 0.0 && ratio.is_finite()).then(|| 0.5 + s2 * ratio.ln())
    }

    /// `∫[P − αQ]_+` (or `∫[Q − αP]_+` when `reverse`) by the trapezoid rule
    /// over the part of `[−20σ, 1 + 20σ]` where the integrand is positive.
    pub fn hockey_stick_quadrature(&self, alpha: f64, reverse: bool) -> f64 {
        let (mut lo, mut hi) = (-20.0 * self.sigma, 1.0 + 20.0 * self.sigma);
        match (self.crossing(alpha, reverse), reverse) {
            (Some(x), false) => lo = lo.max(x),
            (Some(x), true) => hi = hi.min(x),
            (None, false) if alpha > 1.0 - self.q => return 0.0,
            (None, true) if alpha * (1.0 - self.q) >= 1.0 => return 0.0,
            (None, _) => {}
        }
        if !(hi > lo) {
            return 0.0;
        }
        let h = (hi - lo) / QUADRATURE_NODES as f64;
        let vals = (0..=QUADRATURE_NODES).map(|i| {
            let x = lo + i as f64 * h;
            let (p, q) = (self.p_density(x), self.q_density(x));
            let v = if reverse {
                q - alpha * p
            } else {
                p - alpha * q
            };
            let w = if i == 0 || i == QUADRATURE_NODES {
                0.5
            } else {
                1.0
            };
            w * v.max(0.0)
        });
        (h * compensated_sum(vals)).clamp(0.0, 1.0)
    }

    /// Total variation distance by quadrature.
    pub fn tv_quadrature(&self) -> f64 {
        self.hockey_stick_quadrature(1.0, false)
    }

    /// Bin masses of `(P, Q)` on `spec`.
    pub fn analytic_bins(
        &self,
        spec: &BinningSpec,
    ) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
        let p = spec.analytic_masses(|a, b| mixture_interval_mass(self, a, b))?;
        let q = spec.analytic_masses(|a, b| gaussian_interval_mass(0.0, self.sigma, a, b))?;
        Ok((p, q))
    }

    /// Bins of width `σ/200` (capped at 0.01) over `[−12σ, 1 + 12σ]`.
    pub fn reference_binning(&self) -> Result<BinningSpec> {
        let (a, b) = (-12.0 * self.sigma, 1.0 + 12.0 * self.sigma);
        let width = (self.sigma / 200.0).min(0.01);
        BinningSpec::new(a, b, ((b - a) / width).ceil() as usize)
    }

    pub fn pair(&self) -> (ScoreDistribution, ScoreDistribution) {
        (
            ScoreDistribution::Mixture(*self),
            ScoreDistribution::Normal {
                mean: 0.0,
                sd: self.sigma,
            },
        )
    }
}

/// Laplace mechanism with scale `lambda` and L1 sensitivity `l1_sens`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LaplaceMech {
    pub lambda: f64,
    pub l1_sens: f64,
}

impl LaplaceMech {
    pub fn new(lambda: f64, l1_sens: f64) -> Result<Self> {
        check_positive("lambda", lambda)?;
        check_positive("sensitivity", l1_sens)?;
        Ok(Self { lambda, l1_sens })
    }

    /// Shift in units of the scale, `Δ₁/λ`, the parameter of [`laplace_tradeoff`].
    pub fn tradeoff_mu(&self) -> f64 {
        self.l1_sens / self.lambda
    }

    pub fn pair(&self) -> (ScoreDistribution, ScoreDistribution) {
        (
            ScoreDistribution::Laplace {
                loc: self.l1_sens,
                scale: self.lambda,
            },
            ScoreDistribution::Laplace {
                loc: 0.0,
                scale: self.lambda,
            },
        )
    }
}

pub fn gaussian_density(mu: f64, sigma: f64, x: f64) -> Result<f64> {
    check_positive("sigma", sigma)?;
    Ok(normal_pdf((x - mu) / sigma) / sigma)
}

pub fn laplace_density(b: f64, mu: f64, x: f64) -> Result<f64> {
    check_positive("b", b)?;
    Ok((-(x - mu).abs() / b).exp() / (2.0 * b))
}

pub fn mixture_density(mech: &SubsampledGaussianMech, x: f64) -> f64 {
    let s = mech.sigma;
    (mech.q * normal_pdf((x - 1.0) / s) + (1.0 - mech.q) * normal_pdf(x / s)) / s
}

/// `P(lo ≤ X < hi)` for `X ~ N(mu, sigma²)`, using whichever tail keeps
/// relative precision.
pub fn gaussian_interval_mass(mu: f64, sigma: f64, lo: f64, hi: f64) -> f64 {
    let (zl, zh) = ((lo - mu) / sigma, (hi - mu) / sigma);
    if zl >= 0.0 {
        (normal_sf(zl) - normal_sf(zh)).max(0.0)
    } else {
        (normal_cdf(zh) - normal_cdf(zl)).max(0.0)
    }
}

pub fn laplace_interval_mass(mu: f64, b: f64, lo: f64, hi: f64) -> f64 {
    let cdf = |x: f64| {
        if x < mu {
            0.5 * ((x - mu) / b).exp()
        } else {
            1.0 - 0.5 * (-(x - mu) / b).exp()
        }
    };
    let sf = |x: f64| {
        if x < mu {
            1.0 - 0.5 * ((x - mu) / b).exp()
        } else {
            0.5 * (-(x - mu) / b).exp()
        }
    };
    if lo >= mu {
        (sf(lo) - sf(hi)).max(0.0)
    } else {
        (cdf(hi) - cdf(lo)).max(0.0)
    }
}

pub fn mixture_interval_mass(mech: &SubsampledGaussianMech, lo: f64, hi: f64) -> f64 {
    mech.q * gaussian_interval_mass(1.0, mech.sigma, lo, hi)
        + (1.0 - mech.q) * gaussian_interval_mass(0.0, mech.sigma, lo, hi)
}

/// Accurate profile of the subsampled Gaussian, composed `compositions`
/// times, from fine analytic bins pushed through the PLD accountant.
pub fn subsampled_gaussian_composed_profile(
    mech: &SubsampledGaussianMech,
    compositions: usize,
    eps_grid: &[f64],
) -> Result<PrivacyProfile> {
    if eps_grid.is_empty() {
        return Err(AuditError::Empty("epsilon grid"));
    }
    let spec = mech.reference_binning()?;
    let (p, q) = mech.analytic_bins(&spec)?;
    let grid = PldGridSpec::covering(&p, &q);
    pld::compose_profile(&p, &q, compositions, eps_grid, &grid)
}

/// Tabulated profile of the subsampled Gaussian on `eps_grid`.
pub fn subsampled_gaussian_profile(
    mech: &SubsampledGaussianMech,
    eps_grid: &[f64],
) -> Result<PrivacyProfile> {
    subsampled_gaussian_composed_profile(mech, 1, eps_grid)
}

/// Trade-off function of `Lap(0, 1)` against `Lap(μ, 1)`.
pub fn laplace_tradeoff(mu: f64, alpha: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    if mu.is_nan() || mu < 0.0 {
        return Err(AuditError::Domain {
            name: "mu",
            value: mu,
        });
    }
    let em = (-mu).exp();
    Ok(if alpha < em / 2.0 {
        1.0 - alpha / em
    } else if alpha <= 0.5 {
        em / (4.0 * alpha)
    } else {
        em * (1.0 - alpha)
    })
}

/// μ-GDP trade-off `Φ(Φ⁻¹(1 − α) − μ)`.
pub fn gdp_tradeoff(mu: f64, alpha: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    if mu.is_nan() || mu < 0.0 {
        return Err(AuditError::Domain {
            name: "mu",
            value: mu,
        });
    }
    if alpha == 0.0 {
        return Ok(1.0);
    }
    if alpha == 1.0 {
        return Ok(0.0);
    }
    // Φ⁻¹(1 − α) = −Φ⁻¹(α) keeps precision for small α.
    Ok(normal_cdf(-normal_quantile(alpha) - mu))
}

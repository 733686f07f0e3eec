//! Privacy profiles `ε ↦ δ(ε)` and their inversion.

use crate::discrete::{self, DiscreteDistribution};
use crate::error::{AuditError, Result};
use crate::mechanisms::GaussianMech;
use serde::{Deserialize, Serialize};

/// Outcome of inverting a profile at a δ target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "status", content = "value", rename_all = "kebab-case")]
pub enum EpsEstimate {
    Finite(f64),
    /// No finite ε reaches the target, e.g. mass where the other side has none.
    Unbounded,
    /// The estimator has no informative value (the attack is worse than random).
    Undefined,
}

impl EpsEstimate {
    pub fn value(&self) -> Option<f64> {
        match self {
            EpsEstimate::Finite(x) => Some(*x),
            _ => None,
        }
    }

    pub fn is_finite(&self) -> bool {
        matches!(self, EpsEstimate::Finite(_))
    }
}

/// A profile tabulated on a strictly increasing ε-grid, interpolated
/// linearly in `α = e^ε` between nodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabulatedProfile {
    eps: Vec<f64>,
    delta: Vec<f64>,
}

const MONOTONE_SLACK: f64 = 1e-9;

impl TabulatedProfile {
    pub fn new(eps: Vec<f64>, delta: Vec<f64>) -> Result<Self> {
        if eps.is_empty() {
            return Err(AuditError::Empty("profile has no grid points"));
        }
        if eps.len() != delta.len() {
            return Err(AuditError::DimensionMismatch {
                left: eps.len(),
                right: delta.len(),
            });
        }
        if eps.iter().any(|e| !e.is_finite()) {
            return Err(AuditError::InvalidArgument(
                "epsilon grid must be finite".into(),
            ));
        }
        if let Some(i) = eps.windows(2).position(|w| w[1] <= w[0]) {
            return Err(AuditError::InvalidArgument(format!(
                "epsilon grid must be strictly increasing (row {})",
                i + 2
            )));
        }
        if let Some(&d) = delta.iter().find(|d| !(0.0..=1.0).contains(*d)) {
            return Err(AuditError::Domain {
                name: "delta",
                value: d,
            });
        }
        if let Some(i) = delta.windows(2).position(|w| w[1] > w[0] + MONOTONE_SLACK) {
            return Err(AuditError::NotMonotone(format!(
                "delta increases from {} to {} between eps={} and eps={}",
                delta[i],
                delta[i + 1],
                eps[i],
                eps[i + 1]
            )));
        }
        Ok(Self { eps, delta })
    }

    /// Tabulates `f` on `eps`.
    pub fn from_fn<F: FnMut(f64) -> f64>(eps: &[f64], mut f: F) -> Result<Self> {
        let delta = eps.iter().map(|&e| f(e).clamp(0.0, 1.0)).collect();
        Self::new(eps.to_vec(), delta)
    }

    pub fn eps(&self) -> &[f64] {
        &self.eps
    }

    pub fn delta(&self) -> &[f64] {
        &self.delta
    }

    pub fn len(&self) -> usize {
        self.eps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eps.is_empty()
    }

    /// Evaluates the profile.
    ///
    /// Beyond the right end the last value is held. Left of the grid, a
    /// symmetric profile satisfies `δ(−ε) = 1 − e^{−ε} + e^{−ε} δ(ε)`, which
    /// is used whenever the reflected point is covered.
    pub fn delta_at(&self, eps: f64) -> f64 {
        let n = self.eps.len();
        let (e0, en) = (self.eps[0], self.eps[n - 1]);
        if eps >= en {
            return self.delta[n - 1];
        }
        if eps < e0 {
            if eps < 0.0 && -eps >= e0 {
                let a = eps.exp();
                return (1.0 - a + a * self.delta_at(-eps)).clamp(0.0, 1.0);
            }
            return self.delta[0].max(1.0 - eps.exp());
        }
        let i = self
            .eps
            .partition_point(|&e| e <= eps)
            .saturating_sub(1)
            .min(n - 2);
        let (a0, a1) = (self.eps[i].exp(), self.eps[i + 1].exp());
        let t = ((eps.exp() - a0) / (a1 - a0)).clamp(0.0, 1.0);
        self.delta[i] + t * (self.delta[i + 1] - self.delta[i])
    }
}

/// A privacy profile, analytic or tabulated.
#[derive(Debug, Clone, PartialEq)]
pub enum PrivacyProfile {
    Gaussian(GaussianMech),
    /// Exact symmetric profile of a pair of discrete distributions.
    Discrete {
        p: DiscreteDistribution,
        q: DiscreteDistribution,
    },
    /// Confidence lower bound on a discrete pair's profile for TV radius `tau`.
    DiscreteLower {
        p: DiscreteDistribution,
        q: DiscreteDistribution,
        tau: f64,
    },
    Tabulated(TabulatedProfile),
}

impl PrivacyProfile {
    pub fn discrete(p: DiscreteDistribution, q: DiscreteDistribution) -> Result<Self> {
        if p.len() != q.len() {
            return Err(AuditError::DimensionMismatch {
                left: p.len(),
                right: q.len(),
            });
        }
        Ok(PrivacyProfile::Discrete { p, q })
    }

    pub fn delta(&self, eps: f64) -> f64 {
        match self {
            PrivacyProfile::Gaussian(m) => m.delta(eps),
            PrivacyProfile::Discrete { p, q } => {
                discrete::symmetric_delta(p, q, eps).unwrap_or(f64::NAN)
            }
            PrivacyProfile::DiscreteLower { p, q, tau } => {
                discrete::symmetric_delta_lower(p, q, *tau, eps).unwrap_or(f64::NAN)
            }
            PrivacyProfile::Tabulated(t) => t.delta_at(eps),
        }
    }

    pub fn tabulate(&self, eps_grid: &[f64]) -> Result<TabulatedProfile> {
        TabulatedProfile::from_fn(eps_grid, |e| self.delta(e))
    }

    /// Smallest ε with `δ(ε) ≤ target`.
    pub fn eps_for_delta(&self, target: f64) -> Result<EpsEstimate> {
        if !(0.0..1.0).contains(&target) {
            return Err(AuditError::Domain {
                name: "delta",
                value: target,
            });
        }
        match self {
            PrivacyProfile::Discrete { p, q } => {
                // H_α ≥ 1 − α, so the answer lies above α = (1 − target) / 2.
                let eps_min = ((1.0 - target) / 2.0).ln();
                discrete::symmetric_eps_for_delta(p, q, target, eps_min)
            }
            PrivacyProfile::DiscreteLower { p, q, tau } => {
                let eps_min = ((1.0 - target) / 2.0).ln();
                discrete::symmetric_eps_for_delta_lower(p, q, *tau, target, eps_min)
            }
            PrivacyProfile::Gaussian(_) => bisect_profile(|e| self.delta(e), target, -800.0, 800.0),
            PrivacyProfile::Tabulated(t) => {
                let e0 = t.eps[0];
                let lo = if e0 <= 0.0 {
                    -t.eps[t.len() - 1].abs().max(-e0) - 50.0
                } else {
                    e0
                };
                if t.delta_at(lo) < target {
                    return Err(AuditError::NotInvertible(format!(
                        "delta {target} exceeds the profile value {} at the smallest tabulated epsilon {lo}",
                        t.delta_at(lo)
                    )));
                }
                let hi = t.eps[t.len() - 1];
                bisect_profile(|e| t.delta_at(e), target, lo, hi)
            }
        }
    }
}

/// Smallest ε in `[lo, hi]` with `f(ε) ≤ target` for non-increasing `f`.
fn bisect_profile<F: Fn(f64) -> f64>(f: F, target: f64, lo: f64, hi: f64) -> Result<EpsEstimate> {
    if f(lo) <= target {
        return Ok(EpsEstimate::Finite(lo));
    }
    if f(hi) > target {
        return Ok(EpsEstimate::Unbounded);
    }
    let (mut a, mut b) = (lo, hi);
    for _ in 0..200 {
        let m = 0.5 * (a + b);
        if m <= a || m >= b {
            break;
        }
        if f(m) <= target {
            b = m;
        } else {
            a = m;
        }
    }
    Ok(EpsEstimate::Finite(b))
}

//! End-to-end histogram audit of two score samples.

use super::sigma::{estimate_sigma_from_tv, SigmaEstimate, SigmaFamily};
use crate::confidence::canonne_radius;
use crate::discrete::{self, tv_distance};
use crate::error::{AuditError, Result};
use crate::histogram::{auto_spec, build_histograms, BinningMode, BinningSpec, HistogramEstimate};
use crate::io::{curve_to_csv, profile_to_csv};
use crate::profile::{EpsEstimate, PrivacyProfile, TabulatedProfile};
use crate::tradeoff::{
    profile_to_tradeoff, TradeoffCurve, DEFAULT_DELTA_TARGET, DEFAULT_TRADEOFF_POINTS,
};
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

/// Which pipeline produced a report.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Method {
    Histogram,
    Threshold,
    OneShot,
    ComposedHeuristic,
}

impl Method {
    pub fn as_str(&self) -> &'static str {
        match self {
            Method::Histogram => "histogram",
            Method::Threshold => "threshold",
            Method::OneShot => "one-shot",
            Method::ComposedHeuristic => "composed-heuristic",
        }
    }
}

/// `m` evenly spaced points on `[lo, hi]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsGrid {
    pub lo: f64,
    pub hi: f64,
    pub m: usize,
}

impl EpsGrid {
    pub fn new(lo: f64, hi: f64, m: usize) -> Result<Self> {
        if !(lo.is_finite() && hi.is_finite()) || m < 2 || !(lo < hi) {
            return Err(AuditError::InvalidArgument(format!(
                "invalid epsilon grid {lo}:{hi}:{m}"
            )));
        }
        Ok(Self { lo, hi, m })
    }

    /// Parses `lo:hi:m`.
    pub fn parse(s: &str) -> Result<Self> {
        let parts: Vec<&str> = s.split(':').collect();
        let bad = || AuditError::InvalidArgument(format!("expected lo:hi:m, got {s:?}"));
        if parts.len() != 3 {
            return Err(bad());
        }
        let lo = parts[0].trim().parse().map_err(|_| bad())?;
        let hi = parts[1].trim().parse().map_err(|_| bad())?;
        let m = parts[2].trim().parse().map_err(|_| bad())?;
        Self::new(lo, hi, m)
    }

    pub fn points(&self) -> Vec<f64> {
        (0..self.m)
            .map(|i| self.lo + (self.hi - self.lo) * i as f64 / (self.m - 1) as f64)
            .collect()
    }
}

impl Default for EpsGrid {
    fn default() -> Self {
        Self {
            lo: 0.0,
            hi: 10.0,
            m: 201,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AuditConfig {
    pub binning: BinningMode,
    pub delta_targets: Vec<f64>,
    pub confidence: f64,
    pub eps_grid: EpsGrid,
    pub tradeoff_delta: f64,
    pub tradeoff_points: usize,
    pub fit_sigma: Option<SigmaFamily>,
}

impl Default for AuditConfig {
    fn default() -> Self {
        Self {
            binning: BinningMode::ScottGaussian,
            delta_targets: vec![0.01, 0.05, 0.1],
            confidence: 0.95,
            eps_grid: EpsGrid::default(),
            tradeoff_delta: DEFAULT_DELTA_TARGET,
            tradeoff_points: DEFAULT_TRADEOFF_POINTS,
            fit_sigma: None,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<()> {
        crate::error::check_open_unit("confidence", self.confidence)?;
        if self.delta_targets.is_empty() {
            return Err(AuditError::InvalidArgument(
                "at least one delta target is required".into(),
            ));
        }
        for &d in &self.delta_targets {
            crate::error::check_open_unit("delta target", d)?;
        }
        if let Some(f) = &self.fit_sigma {
            f.validate()?;
        }
        Ok(())
    }
}

/// ε point estimate and confidence lower bound at one δ target.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpsEntry {
    pub delta: f64,
    pub point: EpsEstimate,
    pub lower: EpsEstimate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct AuditReport {
    pub method: Method,
    pub n: usize,
    pub confidence: f64,
    pub binning: BinningSpec,
    pub histogram: HistogramEstimate,
    pub tv: f64,
    /// TV radius applied to each estimated distribution.
    pub tau: f64,
    pub eps: Vec<EpsEntry>,
    pub profile: TabulatedProfile,
    pub profile_lower: TabulatedProfile,
    pub tradeoff_estimate: TradeoffCurve,
    /// Trade-off curve of the lower-bound profile. Not a certified bound.
    pub tradeoff_bound: TradeoffCurve,
    pub sigma_estimate: Option<SigmaEstimate>,
    pub warnings: Vec<String>,
}

fn eps_json(e: &EpsEstimate) -> Value {
    match e {
        EpsEstimate::Finite(x) => json!(x),
        _ => Value::Null,
    }
}

fn status(e: &EpsEstimate) -> &'static str {
    match e {
        EpsEstimate::Finite(_) => "finite",
        EpsEstimate::Unbounded => "unbounded",
        EpsEstimate::Undefined => "undefined",
    }
}

impl AuditReport {
    pub fn eps_lookup(&self, delta: f64) -> Option<&EpsEntry> {
        self.eps.iter().find(|e| e.delta == delta)
    }

    pub fn to_json(&self) -> Value {
        let eps: Vec<Value> = self
            .eps
            .iter()
            .map(|e| {
                json!({
                    "delta": e.delta,
                    "point": eps_json(&e.point),
                    "lower": eps_json(&e.lower),
                    "point_status": status(&e.point),
                    "lower_status": status(&e.lower),
                })
            })
            .collect();
        let mut v = json!({
            "method": self.method.as_str(),
            "n": self.n,
            "confidence": self.confidence,
            "binning": {"a": self.binning.a, "b": self.binning.b, "k": self.binning.k, "h": self.binning.h},
            "tv": {"estimate": self.tv, "radius": self.tau},
            "eps": eps,
            "curves": {
                "profile": profile_to_csv(&self.profile),
                "profile_lower": profile_to_csv(&self.profile_lower),
                "tradeoff_estimate": curve_to_csv(&self.tradeoff_estimate),
                "tradeoff_bound": curve_to_csv(&self.tradeoff_bound),
            },
            "tradeoff_bound_certified": false,
            "warnings": self.warnings,
        });
        if let Some(s) = &self.sigma_estimate {
            v["sigma_estimation"] = json!({
                "family": s.family,
                "tv": s.tv,
                "tau": s.tau,
                "tv_interval": [s.tv_interval.0, s.tv_interval.1],
                "sigma": s.sigma,
                "sigma_interval": [s.sigma_interval.0, s.sigma_interval.1],
            });
        }
        v
    }
}

/// Bins both samples, estimates the symmetric profile, inverts it at every
/// δ target, and attaches confidence lower bounds and trade-off curves.
///
/// Each estimated distribution gets half of the failure budget
/// `1 − confidence`; the lower-bound profile is
/// `max(0, 1 − e^ε, δ̂(ε) − (1 + e^ε)τ)`.
pub fn histogram_audit(
    samples_p: &[f64],
    samples_q: &[f64],
    config: &AuditConfig,
) -> Result<AuditReport> {
    config.validate()?;
    let spec = auto_spec(samples_p, samples_q, config.binning)?;
    let hist = build_histograms(samples_p, samples_q, &spec)?;
    audit_histogram(hist, config, Method::Histogram)
}

/// Audits precomputed histograms; `method` tags the report.
pub fn audit_histogram(
    hist: HistogramEstimate,
    config: &AuditConfig,
    method: Method,
) -> Result<AuditReport> {
    config.validate()?;
    let (p, q) = (&hist.p_hat, &hist.q_hat);
    let n = hist.n;
    let k = hist.spec.k;
    let (_, _, tau) = crate::confidence::split_radius(n, k, config.confidence)?;

    let mut warnings = Vec::new();
    let mut targets = config.delta_targets.clone();
    targets.sort_by(f64::total_cmp);
    targets.dedup();
    let mut eps = Vec::with_capacity(targets.len());
    for &d in &targets {
        let point = discrete::symmetric_eps_for_delta(p, q, d, 0.0)?;
        let lower = discrete::symmetric_eps_for_delta_lower(p, q, tau, d, 0.0)?;
        if !point.is_finite() {
            warnings.push(format!(
                "delta={d}: no finite epsilon reaches this target on the estimated profile"
            ));
        }
        eps.push(EpsEntry {
            delta: d,
            point,
            lower,
        });
    }

    let grid = config.eps_grid.points();
    let point_profile = PrivacyProfile::discrete(p.clone(), q.clone())?;
    let lower_profile = PrivacyProfile::DiscreteLower {
        p: p.clone(),
        q: q.clone(),
        tau,
    };
    let profile = point_profile.tabulate(&grid)?;
    let profile_lower = lower_profile.tabulate(&grid)?;
    let tradeoff_estimate = profile_to_tradeoff(
        &point_profile,
        config.tradeoff_delta,
        config.tradeoff_points,
    )?;
    let tradeoff_bound = profile_to_tradeoff(
        &lower_profile,
        config.tradeoff_delta,
        config.tradeoff_points,
    )?;

    let tv = tv_distance(p, q)?;
    let sigma_estimate = match config.fit_sigma {
        Some(family) => {
            let r = canonne_radius(n, k, 1.0 - config.confidence)?;
            Some(estimate_sigma_from_tv(tv, r.tau, family)?)
        }
        None => None,
    };

    Ok(AuditReport {
        method,
        n,
        confidence: config.confidence,
        binning: hist.spec,
        histogram: hist,
        tv,
        tau,
        eps,
        profile,
        profile_lower,
        tradeoff_estimate,
        tradeoff_bound,
        sigma_estimate,
        warnings,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grid_parsing() {
        let g = EpsGrid::parse("0:2:5").unwrap();
        assert_eq!(g.points(), vec![0.0, 0.5, 1.0, 1.5, 2.0]);
        assert!(EpsGrid::parse("0:2").is_err());
        assert!(EpsGrid::parse("2:0:5").is_err());
        assert!(EpsGrid::parse("a:1:5").is_err());
    }

    #[test]
    fn identical_samples_give_zero() {
        let x: Vec<f64> = (0..2000).map(|i| (i as f64 * 0.618).fract()).collect();
        let r = histogram_audit(&x, &x, &AuditConfig::default()).unwrap();
        for e in &r.eps {
            assert_eq!(e.point, EpsEstimate::Finite(0.0));
            assert_eq!(e.lower, EpsEstimate::Finite(0.0));
        }
        assert_eq!(r.tv, 0.0);
        let j = r.to_json();
        assert_eq!(j["method"], "histogram");
        assert!(j["curves"]["tradeoff_estimate"]
            .as_str()
            .unwrap()
            .starts_with("alpha,beta\n"));
    }
}

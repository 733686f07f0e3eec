//! Frequentist confidence bounds: the multinomial TV radius, its transfer to
//! hockey-stick divergences, and Clopper–Pearson intervals.

use crate::error::{check_open_unit, AuditError, Result};
use crate::estimators::invert_monotone;
use crate::special::beta_quantile;
use serde::{Deserialize, Serialize};

/// Radius `τ` such that the empirical distribution over `k` bins from `n`
/// samples is within TV distance `τ` of the truth with probability `confidence`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TvRadius {
    pub tau: f64,
    pub confidence: f64,
    pub n: usize,
    pub k: usize,
}

/// `τ = max(√(k/n), √((2/n) ln(2/failure_prob)))`.
pub fn canonne_radius(n: usize, k: usize, failure_prob: f64) -> Result<TvRadius> {
    check_open_unit("failure probability", failure_prob)?;
    if n == 0 || k == 0 {
        return Err(AuditError::InvalidArgument("need n ≥ 1 and k ≥ 1".into()));
    }
    let nf = n as f64;
    let tau = (k as f64 / nf)
        .sqrt()
        .max((2.0 / nf * (2.0 / failure_prob).ln()).sqrt());
    Ok(TvRadius {
        tau,
        confidence: 1.0 - failure_prob,
        n,
        k,
    })
}

/// Smallest `n` with `canonne_radius(n, k, failure_prob).tau ≤ tau`.
pub fn required_samples(k: usize, tau: f64, failure_prob: f64) -> Result<u64> {
    crate::error::check_positive("tau", tau)?;
    check_open_unit("failure probability", failure_prob)?;
    let t2 = tau * tau;
    let n = (k as f64 / t2).max(2.0 / t2 * (2.0 / failure_prob).ln());
    // Guard against ceil() of values a few ulps above an integer.
    Ok((n * (1.0 - 4.0 * f64::EPSILON)).ceil() as u64)
}

/// Radii for two samples sharing the failure budget `1 − confidence`
/// equally, and the combined `τ = max(τ_p, τ_q)`.
pub fn split_radius(n: usize, k: usize, confidence: f64) -> Result<(TvRadius, TvRadius, f64)> {
    check_open_unit("confidence", confidence)?;
    let fp = (1.0 - confidence) / 2.0;
    let rp = canonne_radius(n, k, fp)?;
    let rq = canonne_radius(n, k, fp)?;
    Ok((rp, rq, rp.tau.max(rq.tau)))
}

/// Slack `(1 + e^ε) τ` of the hockey-stick transfer bound.
pub fn hs_slack(eps: f64, tau: f64) -> f64 {
    (1.0 + eps.exp()) * tau
}

/// `[δ̂ − (1+e^ε)τ, δ̂ + (1+e^ε)τ] ∩ [0, 1]` with `τ = max(τ_p, τ_q)`.
pub fn hs_interval(
    delta_hat: f64,
    eps: f64,
    tau_p: &TvRadius,
    tau_q: &TvRadius,
) -> Result<(f64, f64)> {
    crate::error::check_unit("delta_hat", delta_hat)?;
    let s = hs_slack(eps, tau_p.tau.max(tau_q.tau));
    Ok(((delta_hat - s).max(0.0), (delta_hat + s).min(1.0)))
}

/// `[x̂ − τ, x̂ + τ] ∩ [0, 1]`.
pub fn tv_interval(tv_hat: f64, tau: f64) -> (f64, f64) {
    ((tv_hat - tau).max(0.0), (tv_hat + tau).min(1.0))
}

/// Two-sided Clopper–Pearson interval for a binomial proportion.
pub fn clopper_pearson(successes: u64, trials: u64, confidence: f64) -> Result<(f64, f64)> {
    check_open_unit("confidence", confidence)?;
    if trials == 0 || successes > trials {
        return Err(AuditError::InvalidArgument(format!(
            "invalid counts {successes}/{trials}"
        )));
    }
    let (s, t) = (successes as f64, trials as f64);
    let tail = (1.0 - confidence) / 2.0;
    let lo = if successes == 0 {
        0.0
    } else {
        beta_quantile(tail, s, t - s + 1.0)
    };
    let hi = if successes == trials {
        1.0
    } else {
        beta_quantile(1.0 - tail, s + 1.0, t - s)
    };
    Ok((lo, hi))
}

/// Maps a TV interval through the inverse of a strictly decreasing
/// `forward: σ ↦ TV` searched on `bracket`. The upper TV endpoint gives the
/// lower σ endpoint.
pub fn sigma_interval_from_tv<F: Fn(f64) -> f64>(
    tv_interval: (f64, f64),
    forward: F,
    bracket: (f64, f64),
) -> Result<(f64, f64)> {
    let (lo, hi) = tv_interval;
    if lo > hi {
        return Err(AuditError::InvalidArgument(format!(
            "interval endpoints reversed: ({lo}, {hi})"
        )));
    }
    let s_lo = invert_monotone(&forward, hi, bracket)?;
    let s_hi = if hi == lo {
        s_lo
    } else {
        invert_monotone(&forward, lo, bracket)?
    };
    Ok((s_lo, s_hi))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn radius_examples() {
        let r = canonne_radius(10_000, 10, 0.01).unwrap();
        assert!((r.tau - 0.032_552).abs() < 1e-6);
        assert!((r.confidence - 0.99).abs() < 1e-15);
        let r = canonne_radius(10_000, 10, 0.999_999).unwrap();
        assert!((r.tau - 0.001f64.sqrt()).abs() < 1e-15);
        let a = canonne_radius(1000, 10, 0.05).unwrap().tau;
        let b = canonne_radius(4000, 10, 0.05).unwrap().tau;
        assert!((a / b - 2.0).abs() < 1e-12);
        assert!(canonne_radius(10, 2, 1.0).is_err());
        assert!(canonne_radius(10, 2, 0.0).is_err());
    }

    #[test]
    fn required_samples_examples() {
        let n = required_samples(10, 0.031_622_776_601_683_79, 0.5).unwrap();
        assert!((9_999..=10_001).contains(&n));
        let d = 2.0 / std::f64::consts::E.powi(2);
        assert_eq!(required_samples(1, 1.0, d).unwrap(), 4);
        let a = required_samples(1000, 0.1, 0.5).unwrap();
        let b = required_samples(2000, 0.1, 0.5).unwrap();
        assert_eq!(b, 2 * a);
        assert!(required_samples(1, 0.0, 0.5).is_err());
    }

    #[test]
    fn hs_interval_examples() {
        let r = |tau| TvRadius {
            tau,
            confidence: 0.99,
            n: 1,
            k: 1,
        };
        assert_eq!(hs_interval(0.3, 1.0, &r(0.0), &r(0.0)).unwrap(), (0.3, 0.3));
        let (lo, hi) = hs_interval(0.4, 0.0, &r(0.03), &r(0.01)).unwrap();
        assert!((lo - 0.34).abs() < 1e-15 && (hi - 0.46).abs() < 1e-15);
        assert_eq!(hs_interval(0.01, 5.0, &r(0.01), &r(0.01)).unwrap().0, 0.0);
        assert!(hs_interval(1.2, 0.0, &r(0.0), &r(0.0)).is_err());
    }

    #[test]
    fn clopper_pearson_examples() {
        let (lo, hi) = clopper_pearson(0, 100, 0.95).unwrap();
        assert_eq!(lo, 0.0);
        assert!((hi - (1.0 - 0.025f64.powf(0.01))).abs() < 1e-9);
        assert_eq!(clopper_pearson(7, 7, 0.9).unwrap().1, 1.0);
        let (lo, hi) = clopper_pearson(50, 100, 0.95).unwrap();
        assert!(lo < 0.5 && hi > 0.5);
        assert!((hi - lo - 0.2).abs() < 0.01);
        assert!(((0.5 - lo) - (hi - 0.5)).abs() < 1e-9);
        assert!(clopper_pearson(5, 4, 0.9).is_err());
        assert!(clopper_pearson(0, 0, 0.9).is_err());
    }

    #[test]
    fn sigma_interval_gaussian() {
        use crate::mechanisms::GaussianMech;
        let f = |s: f64| GaussianMech::new(s, 1.0).unwrap().delta(0.0);
        let (a, b) = sigma_interval_from_tv(
            (0.382_924_922_548_026, 0.382_924_922_548_026),
            f,
            (0.01, 100.0),
        )
        .unwrap();
        assert!((a - 1.0).abs() < 1e-8 && a == b);
        let (a, b) = sigma_interval_from_tv((0.3, 0.4), f, (0.01, 100.0)).unwrap();
        assert!(a < 1.0 && b > 1.0);
        assert!(sigma_interval_from_tv((0.3, 1.5), f, (0.01, 100.0)).is_err());
    }
}

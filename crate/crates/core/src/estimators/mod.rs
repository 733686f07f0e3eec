//! Audit pipelines and baselines built on the estimators of the other modules.

pub(crate) mod audit;
mod gdp;
mod sigma;
mod threshold;

pub use audit::{
    audit_histogram, histogram_audit, AuditConfig, AuditReport, EpsEntry, EpsGrid, Method,
};
pub use gdp::{f_alpha_sensitivity, fit_mu_gdp, fit_mu_gdp_detailed, GdpFit};
pub use sigma::{estimate_sigma_from_tv, SigmaEstimate, SigmaFamily};
pub use threshold::{
    exposure, threshold_epsilon, threshold_epsilon_cp, threshold_mu_lower, threshold_rates,
    two_bin_histograms, ThresholdRates,
};

use crate::error::{AuditError, Result};

/// Solves `forward(x) = target` for strictly monotone `forward` on `bracket`
/// by bisection, stopping at `|f(x) − target| ≤ 1e−10` or after 200 steps.
pub fn invert_monotone<F: Fn(f64) -> f64>(
    forward: F,
    target: f64,
    bracket: (f64, f64),
) -> Result<f64> {
    let (mut lo, mut hi) = bracket;
    if !(lo < hi) {
        return Err(AuditError::InvalidArgument(format!(
            "empty bracket ({lo}, {hi})"
        )));
    }
    let (flo, fhi) = (forward(lo), forward(hi));
    let (fmin, fmax) = (flo.min(fhi), flo.max(fhi));
    if !(target >= fmin && target <= fmax) {
        return Err(AuditError::Bracket {
            target,
            lo: fmin,
            hi: fmax,
        });
    }
    let increasing = fhi >= flo;
    let mut x = 0.5 * (lo + hi);
    for _ in 0..200 {
        x = 0.5 * (lo + hi);
        let fx = forward(x);
        if fx == target {
            break;
        }
        if (fx - target).abs() <= 1e-10 && hi - lo <= 1e-9 * x.abs().max(1e-300) {
            break;
        }
        if (fx < target) == increasing {
            lo = x;
        } else {
            hi = x;
        }
    }
    Ok(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::GaussianMech;

    #[test]
    fn invert_examples() {
        let f = |s: f64| GaussianMech::new(s, 1.0).unwrap().delta(0.0);
        let s = invert_monotone(f, 0.382_924_922_548_026, (0.01, 100.0)).unwrap();
        assert!((s - 1.0).abs() < 1e-8);
        let x = invert_monotone(|x| x, 0.5, (0.0, 1.0)).unwrap();
        assert!((x - 0.5).abs() < 1e-12);
        assert!(matches!(
            invert_monotone(|x| x, 2.0, (0.0, 1.0)),
            Err(AuditError::Bracket { .. })
        ));
    }
}

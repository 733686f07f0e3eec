//! Single-threshold membership-inference baseline and the exposure metric.

use crate::confidence::clopper_pearson;
use crate::discrete::DiscreteDistribution;
use crate::error::{AuditError, Result};
use crate::profile::EpsEstimate;
use crate::tradeoff::mu_lower_from_rates;

/// Empirical rates of the rule "score < threshold ⇒ member".
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdRates {
    pub hits_p: u64,
    pub n_p: u64,
    pub hits_q: u64,
    pub n_q: u64,
}

impl ThresholdRates {
    pub fn tpr(&self) -> f64 {
        self.hits_p as f64 / self.n_p as f64
    }

    pub fn fpr(&self) -> f64 {
        self.hits_q as f64 / self.n_q as f64
    }
}

pub fn threshold_rates(
    samples_p: &[f64],
    samples_q: &[f64],
    threshold: f64,
) -> Result<ThresholdRates> {
    if samples_p.is_empty() || samples_q.is_empty() {
        return Err(AuditError::Empty("samples"));
    }
    let below = |s: &[f64]| s.iter().filter(|&&x| x < threshold).count() as u64;
    Ok(ThresholdRates {
        hits_p: below(samples_p),
        n_p: samples_p.len() as u64,
        hits_q: below(samples_q),
        n_q: samples_q.len() as u64,
    })
}

/// `ln(num/den)` with the degenerate cells mapped to ±∞.
fn log_ratio(num: f64, den: f64) -> f64 {
    if num <= 0.0 {
        f64::NEG_INFINITY
    } else if den <= 0.0 {
        f64::INFINITY
    } else {
        (num / den).ln()
    }
}

fn classify(x: f64) -> EpsEstimate {
    if x == f64::INFINITY {
        EpsEstimate::Unbounded
    } else if x == f64::NEG_INFINITY {
        EpsEstimate::Undefined
    } else {
        EpsEstimate::Finite(x)
    }
}

fn eps_from_rates(tpr: f64, fpr: f64, tnr: f64, fnr: f64, delta: f64) -> EpsEstimate {
    classify(log_ratio(tpr - delta, fpr).max(log_ratio(tnr - delta, fnr)))
}

/// `max{ln((TPR − δ)/FPR), ln((TNR − δ)/FNR)}` from plug-in rates.
pub fn threshold_epsilon(
    samples_p: &[f64],
    samples_q: &[f64],
    threshold: f64,
    delta: f64,
) -> Result<EpsEstimate> {
    if !(0.0..1.0).contains(&delta) {
        return Err(AuditError::Domain {
            name: "delta",
            value: delta,
        });
    }
    let r = threshold_rates(samples_p, samples_q, threshold)?;
    let (tpr, fpr) = (r.tpr(), r.fpr());
    Ok(eps_from_rates(tpr, fpr, 1.0 - fpr, 1.0 - tpr, delta))
}

/// Like [`threshold_epsilon`] with each rate replaced by the pessimistic end
/// of its Clopper–Pearson interval; the failure budget is split over the two
/// binomials.
pub fn threshold_epsilon_cp(
    samples_p: &[f64],
    samples_q: &[f64],
    threshold: f64,
    delta: f64,
    confidence: f64,
) -> Result<EpsEstimate> {
    if !(0.0..1.0).contains(&delta) {
        return Err(AuditError::Domain {
            name: "delta",
            value: delta,
        });
    }
    let r = threshold_rates(samples_p, samples_q, threshold)?;
    let c = 1.0 - (1.0 - confidence) / 2.0;
    let (tpr_lo, tpr_hi) = clopper_pearson(r.hits_p, r.n_p, c)?;
    let (fpr_lo, fpr_hi) = clopper_pearson(r.hits_q, r.n_q, c)?;
    Ok(
        eps_from_rates(tpr_lo, fpr_hi, 1.0 - fpr_hi, 1.0 - tpr_lo, delta).max_with(eps_from_rates(
            1.0 - tpr_hi,
            1.0 - fpr_lo,
            fpr_lo,
            tpr_hi,
            delta,
        )),
    )
}

impl EpsEstimate {
    fn rank(&self) -> f64 {
        match *self {
            EpsEstimate::Undefined => f64::NEG_INFINITY,
            EpsEstimate::Finite(x) => x,
            EpsEstimate::Unbounded => f64::INFINITY,
        }
    }

    fn max_with(self, other: EpsEstimate) -> EpsEstimate {
        if other.rank() > self.rank() {
            other
        } else {
            self
        }
    }
}

/// Empirical μ-GDP lower bound from Clopper–Pearson upper bounds on the
/// false-positive and false-negative rates.
pub fn threshold_mu_lower(
    samples_p: &[f64],
    samples_q: &[f64],
    threshold: f64,
    confidence: f64,
) -> Result<f64> {
    let r = threshold_rates(samples_p, samples_q, threshold)?;
    let c = 1.0 - (1.0 - confidence) / 2.0;
    let (_, fpr_hi) = clopper_pearson(r.hits_q, r.n_q, c)?;
    let (_, fnr_hi) = clopper_pearson(r.n_p - r.hits_p, r.n_p, c)?;
    mu_lower_from_rates(fpr_hi, fnr_hi)
}

/// Two-bin histograms `(TPR, FNR)` and `(FPR, TNR)` induced by the threshold.
pub fn two_bin_histograms(
    samples_p: &[f64],
    samples_q: &[f64],
    threshold: f64,
) -> Result<(DiscreteDistribution, DiscreteDistribution)> {
    let r = threshold_rates(samples_p, samples_q, threshold)?;
    Ok((
        DiscreteDistribution::from_counts(&[r.hits_p, r.n_p - r.hits_p])?,
        DiscreteDistribution::from_counts(&[r.hits_q, r.n_q - r.hits_q])?,
    ))
}

/// `log₂ n − log₂ rank` per canary, where rank is one plus the number of
/// reference losses strictly below the canary loss, capped at `n` so the
/// exposure is never negative.
pub fn exposure(canary_losses: &[f64], reference_losses: &[f64]) -> Result<Vec<f64>> {
    if reference_losses.is_empty() {
        return Err(AuditError::Empty("reference losses"));
    }
    let mut sorted = reference_losses.to_vec();
    sorted.sort_by(f64::total_cmp);
    let log_n = (sorted.len() as f64).log2();
    Ok(canary_losses
        .iter()
        .map(|&x| {
            let rank = (1 + sorted.partition_point(|&r| r < x)).min(sorted.len());
            log_n - (rank as f64).log2()
        })
        .collect())
}

//! Finite distributions over ordered bins and the hockey-stick family of
//! divergences between them.

use crate::error::{AuditError, Result};
use crate::profile::EpsEstimate;
use crate::special::KahanSum;
use serde::{Deserialize, Serialize};

const MASS_TOL: f64 = 1e-9;

/// Above this ε, `e^ε` overflows and α is treated as `+∞`.
pub const EPS_OVERFLOW: f64 = 700.0;

/// A probability vector over `k ≥ 1` ordered bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Validates `probs` without renormalizing.
    pub fn new(probs: Vec<f64>) -> Result<Self> {
        if probs.is_empty() {
            return Err(AuditError::Empty("distribution has no bins"));
        }
        if let Some(&bad) = probs.iter().find(|p| !(p.is_finite() && **p >= 0.0)) {
            return Err(AuditError::InvalidDistribution(format!(
                "mass {bad} is not a finite non-negative number"
            )));
        }
        let total = crate::special::compensated_sum(probs.iter().copied());
        if (total - 1.0).abs() > MASS_TOL {
            return Err(AuditError::InvalidDistribution(format!(
                "masses sum to {total}, not 1"
            )));
        }
        Ok(Self { probs })
    }

    /// Divides non-negative weights by their total.
    pub fn normalized(weights: Vec<f64>) -> Result<Self> {
        if weights.iter().any(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(AuditError::InvalidDistribution(
                "weights must be finite and non-negative".into(),
            ));
        }
        let total = crate::special::compensated_sum(weights.iter().copied());
        if total <= 0.0 {
            return Err(AuditError::InvalidDistribution(
                "weights sum to zero".into(),
            ));
        }
        Self::new(weights.into_iter().map(|w| w / total).collect())
    }

    /// Relative frequencies of integer counts.
    pub fn from_counts(counts: &[u64]) -> Result<Self> {
        let n: u64 = counts.iter().sum();
        if n == 0 {
            return Err(AuditError::Empty("all counts are zero"));
        }
        Self::new(counts.iter().map(|&c| c as f64 / n as f64).collect())
    }

    /// Point mass on bin `index` of `k`.
    pub fn point_mass(k: usize, index: usize) -> Result<Self> {
        if index >= k {
            return Err(AuditError::IndexOutOfRange { index, limit: k });
        }
        let mut probs = vec![0.0; k];
        probs[index] = 1.0;
        Self::new(probs)
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Merges bins according to `merge_map[j] = group of bin j`.
    ///
    /// Groups are numbered `0..m` and every group must receive at least one bin.
    pub fn coarsen(&self, merge_map: &[usize]) -> Result<Self> {
        if merge_map.len() != self.len() {
            return Err(AuditError::DimensionMismatch {
                left: merge_map.len(),
                right: self.len(),
            });
        }
        let m = merge_map.iter().max().map_or(0, |&g| g + 1);
        if m > self.len() {
            return Err(AuditError::IndexOutOfRange {
                index: m - 1,
                limit: self.len(),
            });
        }
        let mut sums = vec![KahanSum::new(); m];
        let mut hit = vec![false; m];
        for (&g, &p) in merge_map.iter().zip(&self.probs) {
            sums[g].add(p);
            hit[g] = true;
        }
        if let Some(g) = hit.iter().position(|h| !h) {
            return Err(AuditError::InvalidArgument(format!(
                "merge map is not surjective: group {g} is empty"
            )));
        }
        Self::new(sums.iter().map(KahanSum::value).collect())
    }
}

impl TryFrom<Vec<f64>> for DiscreteDistribution {
    type Error = AuditError;
    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<DiscreteDistribution> for Vec<f64> {
    fn from(d: DiscreteDistribution) -> Self {
        d.probs
    }
}

fn check_same_len(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<()> {
    if p.len() != q.len() {
        return Err(AuditError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    Ok(())
}

fn hs_raw(p: &[f64], q: &[f64], alpha: f64) -> f64 {
    let mut s = KahanSum::new();
    if alpha.is_infinite() {
        for (&pj, &qj) in p.iter().zip(q) {
            if qj == 0.0 {
                s.add(pj);
            }
        }
    } else {
        for (&pj, &qj) in p.iter().zip(q) {
            let t = pj - alpha * qj;
            if t > 0.0 {
                s.add(t);
            }
        }
    }
    s.value().clamp(0.0, 1.0)
}

/// Hockey-stick divergence `H_α(P‖Q) = Σ_j [p_j − α q_j]_+`.
///
/// `alpha = +∞` is allowed and yields the mass of P where Q vanishes.
pub fn hs_divergence(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    alpha: f64,
) -> Result<f64> {
    check_same_len(p, q)?;
    if alpha.is_nan() || alpha < 0.0 {
        return Err(AuditError::Domain {
            name: "alpha",
            value: alpha,
        });
    }
    Ok(hs_raw(&p.probs, &q.probs, alpha))
}

/// `α = e^ε`, with overflow mapped to `+∞`.
pub fn alpha_of_eps(eps: f64) -> f64 {
    if eps > EPS_OVERFLOW {
        f64::INFINITY
    } else {
        eps.exp()
    }
}

/// Directed divergence at `α = e^ε`.
pub fn hs_divergence_eps(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    eps: f64,
) -> Result<f64> {
    if eps.is_nan() {
        return Err(AuditError::Domain {
            name: "eps",
            value: eps,
        });
    }
    hs_divergence(p, q, alpha_of_eps(eps))
}

/// Total variation distance, `H_1(P‖Q)`.
pub fn tv_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    hs_divergence(p, q, 1.0)
}

/// `max(H_{e^ε}(P‖Q), H_{e^ε}(Q‖P))`.
pub fn symmetric_delta(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    eps: f64,
) -> Result<f64> {
    Ok(hs_divergence_eps(p, q, eps)?.max(hs_divergence_eps(q, p, eps)?))
}

/// Likelihood-ratio breakpoints where either directed divergence changes slope.
pub(crate) fn ratio_breakpoints(p: &[f64], q: &[f64]) -> Vec<f64> {
    let mut b: Vec<f64> = p
        .iter()
        .zip(q)
        .filter(|(pj, qj)| **pj > 0.0 && **qj > 0.0)
        .flat_map(|(&pj, &qj)| [pj / qj, qj / pj])
        .collect();
    b.sort_by(f64::total_cmp);
    b.dedup();
    b
}

/// Smallest `α ≥ alpha_min` with `f(α) ≤ target`, for a continuous
/// non-increasing `f` that is linear between consecutive `breaks` and on the
/// ray beyond the last one. Returned as `ε = ln α`.
pub(crate) fn invert_piecewise_linear<F: Fn(f64) -> f64>(
    f: F,
    breaks: &[f64],
    target: f64,
    alpha_min: f64,
) -> EpsEstimate {
    let mut prev_a = alpha_min;
    let mut prev_v = f(alpha_min);
    if prev_v <= target {
        return EpsEstimate::Finite(alpha_min.ln());
    }
    let solve = |a0: f64, v0: f64, a1: f64, v1: f64| {
        let a = if v0 == v1 {
            a1
        } else {
            a0 + (v0 - target) * (a1 - a0) / (v0 - v1)
        };
        let a = a.clamp(a0, a1);
        if (f(a) - target).abs() <= 1e-13 {
            return EpsEstimate::Finite(a.ln());
        }
        // A kink not listed in `breaks` lies inside the segment; bisect.
        let (mut lo, mut hi) = (a0, a1);
        for _ in 0..200 {
            let m = 0.5 * (lo + hi);
            if m <= lo || m >= hi {
                break;
            }
            if f(m) <= target {
                hi = m;
            } else {
                lo = m;
            }
        }
        EpsEstimate::Finite(hi.ln())
    };
    for &b in breaks.iter().filter(|&&b| b > alpha_min) {
        let v = f(b);
        if v <= target {
            return solve(prev_a, prev_v, b, v);
        }
        prev_a = b;
        prev_v = v;
    }
    // Final ray: f is affine beyond the last breakpoint, possibly floored.
    let (mut a0, mut v0) = (prev_a, prev_v);
    let mut a1 = 2.0 * a0 + 1.0;
    for _ in 0..64 {
        let v1 = f(a1);
        if v1 <= target {
            return solve(a0, v0, a1, v1);
        }
        let slope = (v1 - v0) / (a1 - a0);
        if !(slope < -1e-15) {
            return EpsEstimate::Unbounded;
        }
        let next = a1 + (v1 - target) / -slope;
        if !next.is_finite() || next > 1e300 {
            return EpsEstimate::Unbounded;
        }
        (a0, v0) = (a1, v1);
        a1 = next * (1.0 + 1e-12) + 1e-300;
    }
    EpsEstimate::Unbounded
}

/// Smallest `ε ≥ eps_min` with `symmetric_delta(P, Q, ε) ≤ delta`, solved
/// exactly using the piecewise-linear structure of the divergence in `α`.
pub fn symmetric_eps_for_delta(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    delta: f64,
    eps_min: f64,
) -> Result<EpsEstimate> {
    check_same_len(p, q)?;
    crate::error::check_unit("delta", delta)?;
    let (pp, qq) = (&p.probs, &q.probs);
    let f = |a: f64| hs_raw(pp, qq, a).max(hs_raw(qq, pp, a));
    let breaks = ratio_breakpoints(pp, qq);
    Ok(invert_piecewise_linear(
        f,
        &breaks,
        delta,
        alpha_of_eps(eps_min),
    ))
}

/// Confidence lower bound on the symmetric profile given a TV radius `τ`
/// for both estimated distributions:
/// `max(0, 1 − α, δ̂(α) − (1 + α)τ)` at `α = e^ε`.
pub fn symmetric_delta_lower(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    tau: f64,
    eps: f64,
) -> Result<f64> {
    let a = alpha_of_eps(eps);
    let d = symmetric_delta(p, q, eps)?;
    Ok(lower_from(d, a, tau))
}

fn lower_from(d: f64, a: f64, tau: f64) -> f64 {
    if a.is_infinite() {
        return if tau > 0.0 { 0.0 } else { d };
    }
    (d - (1.0 + a) * tau).max(1.0 - a).max(0.0)
}

/// Smallest `ε ≥ eps_min` at which [`symmetric_delta_lower`] is at most `delta`.
pub fn symmetric_eps_for_delta_lower(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    tau: f64,
    delta: f64,
    eps_min: f64,
) -> Result<EpsEstimate> {
    check_same_len(p, q)?;
    crate::error::check_unit("delta", delta)?;
    if tau.is_nan() || tau < 0.0 {
        return Err(AuditError::Domain {
            name: "tau",
            value: tau,
        });
    }
    let (pp, qq) = (&p.probs, &q.probs);
    let f = |a: f64| lower_from(hs_raw(pp, qq, a).max(hs_raw(qq, pp, a)), a, tau);
    let mut breaks = ratio_breakpoints(pp, qq);
    breaks.push(1.0);
    breaks.sort_by(f64::total_cmp);
    Ok(invert_piecewise_linear(
        f,
        &breaks,
        delta,
        alpha_of_eps(eps_min),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn d(v: &[f64]) -> DiscreteDistribution {
        DiscreteDistribution::new(v.to_vec()).unwrap()
    }

    #[test]
    fn constructor_validation() {
        assert!(DiscreteDistribution::new(vec![]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.6]).is_err());
        assert!(DiscreteDistribution::new(vec![-0.1, 1.1]).is_err());
        assert!(DiscreteDistribution::new(vec![f64::NAN, 1.0]).is_err());
        assert!(DiscreteDistribution::new(vec![0.5, 0.5 + 5e-10]).is_ok());
        let n = DiscreteDistribution::normalized(vec![1.0, 3.0]).unwrap();
        assert_eq!(n.probs(), &[0.25, 0.75]);
        let c = DiscreteDistribution::from_counts(&[1, 2, 1]).unwrap();
        assert_eq!(c.probs(), &[0.25, 0.5, 0.25]);
    }

    #[test]
    fn hs_examples() {
        let p = d(&[0.3, 0.7]);
        assert_eq!(hs_divergence(&p, &p, 1.0).unwrap(), 0.0);
        assert_eq!(
            hs_divergence(&d(&[1.0, 0.0]), &d(&[0.0, 1.0]), 1.0).unwrap(),
            1.0
        );
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        assert!((hs_divergence(&p, &q, 1.0).unwrap() - 0.4).abs() < 1e-15);
        assert!(hs_divergence(&p, &q, -1.0).is_err());
        assert!(hs_divergence(&p, &d(&[1.0]), 1.0).is_err());
        assert_eq!(hs_divergence(&p, &q, 0.0).unwrap(), 1.0);
    }

    #[test]
    fn tv_examples() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        assert!((tv_distance(&p, &q).unwrap() - 0.4).abs() < 1e-15);
        assert!((tv_distance(&d(&[1.0, 0.0]), &d(&[0.5, 0.5])).unwrap() - 0.5).abs() < 1e-15);
        assert_eq!(tv_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn symmetric_examples() {
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        assert!((symmetric_delta(&p, &q, 0.0).unwrap() - 0.4).abs() < 1e-15);
        let (p, q) = (d(&[0.9, 0.1]), d(&[0.1, 0.9]));
        assert!((symmetric_delta(&p, &q, 2f64.ln()).unwrap() - 0.7).abs() < 1e-12);
    }

    #[test]
    fn infinite_alpha() {
        let (p, q) = (d(&[0.5, 0.3, 0.2]), d(&[0.0, 0.5, 0.5]));
        assert_eq!(hs_divergence(&p, &q, f64::INFINITY).unwrap(), 0.5);
        assert_eq!(hs_divergence_eps(&p, &q, 800.0).unwrap(), 0.5);
        assert_eq!(hs_divergence_eps(&q, &p, 800.0).unwrap(), 0.0);
    }

    #[test]
    fn coarsen_examples() {
        let p = d(&[0.2, 0.3, 0.5]);
        assert_eq!(p.coarsen(&[0, 0, 1]).unwrap().probs(), &[0.5, 0.5]);
        assert_eq!(p.coarsen(&[0, 1, 2]).unwrap(), p);
        let u = d(&[0.25; 4]);
        assert_eq!(u.coarsen(&[0, 0, 0, 0]).unwrap().probs(), &[1.0]);
        assert!(p.coarsen(&[0, 2, 2]).is_err());
        assert!(p.coarsen(&[0, 1]).is_err());
        assert!(p.coarsen(&[0, 5, 1]).is_err());
    }

    #[test]
    fn exact_inversion_two_bins() {
        // δ(ε) = max(0.6 − 0.2α, 0.8 − 0.4α)_+ on α ≥ 1 reaches 0.2 at α = 2.
        let (p, q) = (d(&[0.6, 0.4]), d(&[0.2, 0.8]));
        let e = symmetric_eps_for_delta(&p, &q, 0.2, 0.0).unwrap();
        match e {
            EpsEstimate::Finite(x) => assert!((x - 2f64.ln()).abs() < 1e-14),
            other => panic!("{other:?}"),
        }
        assert_eq!(
            symmetric_eps_for_delta(&p, &p, 0.0, 0.0).unwrap(),
            EpsEstimate::Finite(0.0)
        );
        let (p, q) = (d(&[0.5, 0.5]), d(&[1.0, 0.0]));
        assert_eq!(
            symmetric_eps_for_delta(&p, &q, 0.1, 0.0).unwrap(),
            EpsEstimate::Unbounded
        );
        assert!(matches!(
            symmetric_eps_for_delta(&p, &q, 0.5, 0.0).unwrap(),
            EpsEstimate::Finite(_)
        ));
    }
}

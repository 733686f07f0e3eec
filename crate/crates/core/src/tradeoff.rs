//! Trade-off curves: `f_{ε,δ}`, conversion from privacy profiles, shape
//! validation, and the empirical μ-GDP bound.

use crate::error::{check_unit, AuditError, Result};
use crate::profile::{EpsEstimate, PrivacyProfile};
use crate::special::normal_quantile;
use serde::{Deserialize, Serialize};

const SHAPE_SLACK: f64 = 1e-9;

/// Piecewise-linear curve `α ↦ β` through nodes with strictly increasing α.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    points: Vec<(f64, f64)>,
}

/// A failed shape requirement at node `index`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Violation {
    Increasing { index: usize },
    NonConvex { index: usize },
    AboveIdentity { index: usize },
}

impl TradeoffCurve {
    /// Checks that nodes lie in `[0,1]²` with strictly increasing α. Shape
    /// requirements are left to [`validate`].
    pub fn new(points: Vec<(f64, f64)>) -> Result<Self> {
        if points.len() < 2 {
            return Err(AuditError::InvalidArgument(
                "a curve needs at least two nodes".into(),
            ));
        }
        for &(a, b) in &points {
            check_unit("alpha", a)?;
            check_unit("beta", b)?;
        }
        if points.windows(2).any(|w| w[1].0 <= w[0].0) {
            return Err(AuditError::InvalidArgument(
                "alpha must be strictly increasing".into(),
            ));
        }
        Ok(Self { points })
    }

    /// Samples `f` on `nodes` uniform points of `[0, 1]`.
    pub fn from_fn<F: FnMut(f64) -> f64>(nodes: usize, mut f: F) -> Result<Self> {
        if nodes < 2 {
            return Err(AuditError::InvalidArgument(
                "need at least two nodes".into(),
            ));
        }
        let pts = (0..nodes)
            .map(|i| {
                let a = i as f64 / (nodes - 1) as f64;
                (a, f(a).clamp(0.0, 1.0))
            })
            .collect();
        Self::new(pts)
    }

    pub fn points(&self) -> &[(f64, f64)] {
        &self.points
    }

    /// Linear interpolation; held constant outside the node range.
    pub fn eval(&self, alpha: f64) -> f64 {
        let p = &self.points;
        if alpha <= p[0].0 {
            return p[0].1;
        }
        if alpha >= p[p.len() - 1].0 {
            return p[p.len() - 1].1;
        }
        let i = p.partition_point(|&(a, _)| a <= alpha) - 1;
        let ((a0, b0), (a1, b1)) = (p[i], p[i + 1]);
        b0 + (alpha - a0) / (a1 - a0) * (b1 - b0)
    }
}

/// Reports where `curve` fails to be non-increasing, convex, or below `1 − α`.
pub fn validate(curve: &TradeoffCurve) -> Vec<Violation> {
    let p = &curve.points;
    let mut out = Vec::new();
    for (i, &(a, b)) in p.iter().enumerate() {
        if b > 1.0 - a + SHAPE_SLACK {
            out.push(Violation::AboveIdentity { index: i });
        }
    }
    for i in 1..p.len() {
        if p[i].1 > p[i - 1].1 + SHAPE_SLACK {
            out.push(Violation::Increasing { index: i });
        }
    }
    for i in 1..p.len().saturating_sub(1) {
        let s0 = (p[i].1 - p[i - 1].1) / (p[i].0 - p[i - 1].0);
        let s1 = (p[i + 1].1 - p[i].1) / (p[i + 1].0 - p[i].0);
        if s1 < s0 - SHAPE_SLACK {
            out.push(Violation::NonConvex { index: i });
        }
    }
    out
}

/// `max{0, 1 − δ − e^ε α, e^{−ε}(1 − δ − α)}`.
pub fn f_eps_delta(eps: f64, delta: f64, alpha: f64) -> Result<f64> {
    check_unit("alpha", alpha)?;
    check_unit("delta", delta)?;
    if eps.is_nan() {
        return Err(AuditError::Domain {
            name: "eps",
            value: eps,
        });
    }
    Ok(f_raw(eps, delta, alpha))
}

fn f_raw(eps: f64, delta: f64, alpha: f64) -> f64 {
    let r = 1.0 - delta;
    let t1 = r - eps.exp() * alpha;
    let t2 = (-eps).exp() * (r - alpha);
    t1.max(t2).max(0.0)
}

/// Default lower end of the δ′ range used by [`profile_to_tradeoff`].
pub const DEFAULT_DELTA_TARGET: f64 = 1e-3;
/// Default number of δ′ values.
pub const DEFAULT_TRADEOFF_POINTS: usize = 200;
const MIN_ALPHA_NODES: usize = 512;

/// Converts a profile into a trade-off curve: the upper envelope of
/// `f_{ε̂(δ′), δ′}` over `n_points` values of δ′ spread linearly on
/// `[delta_target, 1 − delta_target]`, sampled on `max(n_points, 512)` α nodes.
///
/// δ′ values that no finite ε reaches contribute the trivial curve 0.
pub fn profile_to_tradeoff(
    profile: &PrivacyProfile,
    delta_target: f64,
    n_points: usize,
) -> Result<TradeoffCurve> {
    if !(delta_target > 0.0 && delta_target < 0.5) {
        return Err(AuditError::Domain {
            name: "delta_target",
            value: delta_target,
        });
    }
    if n_points < 2 {
        return Err(AuditError::InvalidArgument(
            "need at least two delta points".into(),
        ));
    }
    let mut pairs = Vec::with_capacity(n_points);
    for i in 0..n_points {
        let d = delta_target + (1.0 - 2.0 * delta_target) * i as f64 / (n_points - 1) as f64;
        match profile.eps_for_delta(d)? {
            EpsEstimate::Finite(e) => pairs.push((e, d)),
            EpsEstimate::Unbounded | EpsEstimate::Undefined => {}
        }
    }
    let nodes = n_points.max(MIN_ALPHA_NODES);
    TradeoffCurve::from_fn(nodes, |a| {
        pairs
            .iter()
            .fold(0.0, |m, &(e, d)| f64::max(m, f_raw(e, d, a)))
    })
}

/// Largest vertical gap between two curves over `alpha_range`, evaluated at
/// both curves' nodes and on a 1000-point uniform grid.
pub fn sup_distance(a: &TradeoffCurve, b: &TradeoffCurve, alpha_range: (f64, f64)) -> f64 {
    let (lo, hi) = alpha_range;
    let grid = (0..=1000).map(|i| lo + (hi - lo) * i as f64 / 1000.0);
    let nodes = a
        .points
        .iter()
        .chain(&b.points)
        .map(|p| p.0)
        .filter(|&x| x >= lo && x <= hi);
    grid.chain(nodes)
        .map(|x| (a.eval(x) - b.eval(x)).abs())
        .fold(0.0, f64::max)
}

/// `μ ≥ Φ⁻¹(1 − ᾱ) − Φ⁻¹(β̄)` from upper bounds on the two error rates.
pub fn mu_lower_from_rates(alpha_bar: f64, beta_bar: f64) -> Result<f64> {
    for (name, v) in [("alpha_bar", alpha_bar), ("beta_bar", beta_bar)] {
        if !(v > 0.0 && v < 1.0) {
            return Err(AuditError::Domain { name, value: v });
        }
    }
    Ok(-normal_quantile(alpha_bar) - normal_quantile(beta_bar))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::{gdp_tradeoff, GaussianMech};

    #[test]
    fn f_eps_delta_examples() {
        assert!((f_eps_delta(0.0, 0.0, 0.3).unwrap() - 0.7).abs() < 1e-15);
        assert!((f_eps_delta(2f64.ln(), 0.1, 0.2).unwrap() - 0.5).abs() < 1e-15);
        for a in [0.0, 0.3, 1.0] {
            assert_eq!(f_eps_delta(1.0, 1.0, a).unwrap(), 0.0);
        }
        assert!(f_eps_delta(1.0, 0.1, 1.2).is_err());
        assert!(f_eps_delta(1.0, -0.1, 0.2).is_err());
    }

    #[test]
    fn validate_examples() {
        let c = TradeoffCurve::from_fn(100, |a| f_raw(0.7, 0.05, a)).unwrap();
        assert!(validate(&c).is_empty());
        let bad = TradeoffCurve::new(vec![(0.0, 1.0), (0.5, 0.9), (1.0, 0.0)]).unwrap();
        assert!(validate(&bad).contains(&Violation::NonConvex { index: 1 }));
        let above = TradeoffCurve::new(vec![(0.0, 1.0), (0.5, 0.6), (1.0, 0.0)]).unwrap();
        assert!(validate(&above).contains(&Violation::AboveIdentity { index: 1 }));
        let up = TradeoffCurve::new(vec![(0.0, 0.2), (0.5, 0.3), (1.0, 0.0)]).unwrap();
        assert!(validate(&up).contains(&Violation::Increasing { index: 1 }));
    }

    #[test]
    fn gaussian_profile_gives_gdp_curve() {
        let prof = PrivacyProfile::Gaussian(GaussianMech::new(1.0, 1.0).unwrap());
        let c = profile_to_tradeoff(&prof, 1e-3, 200).unwrap();
        assert!(validate(&c).is_empty());
        let g = TradeoffCurve::from_fn(2001, |a| gdp_tradeoff(1.0, a).unwrap()).unwrap();
        assert!(sup_distance(&c, &g, (0.0, 1.0)) < 0.01);
        // self-duality of the GDP curve
        for i in 0..=90 {
            let a = 0.05 + 0.01 * i as f64;
            assert!((c.eval(c.eval(a)) - a).abs() < 0.02);
        }
    }

    #[test]
    fn perfect_privacy_gives_identity() {
        let p = crate::discrete::DiscreteDistribution::new(vec![0.5, 0.5]).unwrap();
        let prof = PrivacyProfile::discrete(p.clone(), p).unwrap();
        let c = profile_to_tradeoff(&prof, 1e-3, 50).unwrap();
        for &(a, b) in c.points() {
            assert!((b - (1.0 - a)).abs() < 2e-3);
        }
    }

    #[test]
    fn mu_lower_examples() {
        assert!(mu_lower_from_rates(0.5, 0.5).unwrap().abs() < 1e-15);
        assert!((mu_lower_from_rates(0.3085, 0.3085).unwrap() - 1.0).abs() < 1e-3);
        assert!((mu_lower_from_rates(0.2, 0.6).unwrap() - 0.588_274_130_437_114_6).abs() < 1e-9);
        assert!(mu_lower_from_rates(0.0, 0.5).is_err());
        assert!(mu_lower_from_rates(0.5, 1.0).is_err());
    }
}

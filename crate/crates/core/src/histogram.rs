//! Aligned histograms of two score samples and the plug-in δ(ε) estimate.

use crate::discrete::{self, DiscreteDistribution};
use crate::error::{check_positive, AuditError, Result};
use crate::special::scott_constant;
use serde::{Deserialize, Serialize};

/// Equal-width bins on `[a, b]` with open-ended outer bins: bin 0 is
/// `(−∞, a + h)`, bin `j` is `[a + jh, a + (j+1)h)` and bin `k−1` is `[b − h, ∞)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinningSpec {
    pub a: f64,
    pub b: f64,
    pub k: usize,
    pub h: f64,
}

impl BinningSpec {
    pub fn new(a: f64, b: f64, k: usize) -> Result<Self> {
        if !(a.is_finite() && b.is_finite() && a < b) {
            return Err(AuditError::InvalidArgument(format!(
                "need finite a < b, got a={a}, b={b}"
            )));
        }
        if k < 2 {
            return Err(AuditError::InvalidArgument(format!(
                "need at least 2 bins, got {k}"
            )));
        }
        Ok(Self {
            a,
            b,
            k,
            h: (b - a) / k as f64,
        })
    }

    /// Left edge of bin `j` for `1 ≤ j < k`.
    pub fn edge(&self, j: usize) -> f64 {
        self.a + j as f64 * self.h
    }

    /// Index of the bin containing `x`.
    pub fn bin_index(&self, x: f64) -> usize {
        let last = self.k - 1;
        let raw = ((x - self.a) / self.h).floor();
        let mut i = if raw.is_nan() || raw < 0.0 {
            0
        } else if raw >= last as f64 {
            last
        } else {
            raw as usize
        };
        // Settle floating-point ties against the explicit edges.
        while i < last && x >= self.edge(i + 1) {
            i += 1;
        }
        while i > 0 && x < self.edge(i) {
            i -= 1;
        }
        i
    }

    /// Counts of `samples` per bin.
    pub fn counts(&self, samples: &[f64]) -> Vec<u64> {
        let mut c = vec![0u64; self.k];
        for &x in samples {
            c[self.bin_index(x)] += 1;
        }
        c
    }

    /// Bin masses from an interval-mass function `mass(lo, hi)`, with the outer
    /// bins extended to ±∞. Masses are renormalized to absorb rounding.
    pub fn analytic_masses<F: Fn(f64, f64) -> f64>(&self, mass: F) -> Result<DiscreteDistribution> {
        let w = (0..self.k)
            .map(|j| {
                let lo = if j == 0 {
                    f64::NEG_INFINITY
                } else {
                    self.edge(j)
                };
                let hi = if j == self.k - 1 {
                    f64::INFINITY
                } else {
                    self.edge(j + 1)
                };
                mass(lo, hi)
            })
            .collect();
        DiscreteDistribution::normalized(w)
    }
}

/// Binned relative frequencies of a sample pair.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramEstimate {
    pub spec: BinningSpec,
    pub p_hat: DiscreteDistribution,
    pub q_hat: DiscreteDistribution,
    pub n: usize,
}

fn check_samples(p: &[f64], q: &[f64]) -> Result<()> {
    if p.is_empty() || q.is_empty() {
        return Err(AuditError::Empty("samples"));
    }
    if p.len() != q.len() {
        return Err(AuditError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    if p.iter().chain(q).any(|x| !x.is_finite()) {
        return Err(AuditError::InvalidDistribution(
            "samples must be finite".into(),
        ));
    }
    Ok(())
}

pub fn build_histograms(
    samples_p: &[f64],
    samples_q: &[f64],
    spec: &BinningSpec,
) -> Result<HistogramEstimate> {
    check_samples(samples_p, samples_q)?;
    Ok(HistogramEstimate {
        spec: *spec,
        p_hat: DiscreteDistribution::from_counts(&spec.counts(samples_p))?,
        q_hat: DiscreteDistribution::from_counts(&spec.counts(samples_q))?,
        n: samples_p.len(),
    })
}

/// `H_{e^ε}(P̂‖Q̂)`.
pub fn estimate_delta(hist: &HistogramEstimate, eps: f64) -> f64 {
    discrete::hs_divergence_eps(&hist.p_hat, &hist.q_hat, eps).unwrap_or(f64::NAN)
}

/// `max(H_{e^ε}(P̂‖Q̂), H_{e^ε}(Q̂‖P̂))`.
pub fn estimate_symmetric_delta(hist: &HistogramEstimate, eps: f64) -> f64 {
    discrete::symmetric_delta(&hist.p_hat, &hist.q_hat, eps).unwrap_or(f64::NAN)
}

/// Gaussian-reference optimal width `2·3^{1/3}·π^{1/6}·σ̂·n^{−1/3}`.
pub fn scott_width_gaussian(sigma_hat: f64, n: usize) -> Result<f64> {
    check_positive("sigma_hat", sigma_hat)?;
    if n == 0 {
        return Err(AuditError::Domain {
            name: "n",
            value: 0.0,
        });
    }
    Ok(scott_constant() * sigma_hat * (n as f64).powf(-1.0 / 3.0))
}

/// Optimal width `(12 / (∫P′² + ∫Q′²))^{1/3} · n^{−1/3}`.
pub fn scott_width_general(deriv_energy_p: f64, deriv_energy_q: f64, n: usize) -> Result<f64> {
    if !(deriv_energy_p >= 0.0 && deriv_energy_q >= 0.0) {
        return Err(AuditError::InvalidArgument(
            "derivative energies must be non-negative".into(),
        ));
    }
    let e = deriv_energy_p + deriv_energy_q;
    check_positive("derivative energy", e)?;
    if n == 0 {
        return Err(AuditError::Domain {
            name: "n",
            value: 0.0,
        });
    }
    Ok((12.0 / e).cbrt() * (n as f64).powf(-1.0 / 3.0))
}

/// How bin widths are chosen by [`auto_spec`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "mode", content = "value", rename_all = "kebab-case")]
pub enum BinningMode {
    ScottGaussian,
    FixedK(usize),
    FixedWidth(f64),
}

/// Sample quantile with linear interpolation between order statistics.
pub fn quantile_sorted(sorted: &[f64], prob: f64) -> f64 {
    let pos = prob.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (pos - lo as f64) * (sorted[hi] - sorted[lo])
}

fn sample_var(x: &[f64]) -> f64 {
    if x.len() < 2 {
        return 0.0;
    }
    let mean = x.iter().sum::<f64>() / x.len() as f64;
    x.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (x.len() - 1) as f64
}

/// Within-group pooled standard deviation of two samples.
pub fn pooled_sd(p: &[f64], q: &[f64]) -> f64 {
    let (np, nq) = (p.len() as f64, q.len() as f64);
    let dof = np + nq - 2.0;
    if dof <= 0.0 {
        return 0.0;
    }
    (((np - 1.0) * sample_var(p) + (nq - 1.0) * sample_var(q)) / dof).sqrt()
}

/// Chooses `[a, b]` from the pooled 0.1% and 99.9% quantiles and the bin
/// count from `mode`.
pub fn auto_spec(samples_p: &[f64], samples_q: &[f64], mode: BinningMode) -> Result<BinningSpec> {
    check_samples(samples_p, samples_q)?;
    let mut pooled: Vec<f64> = samples_p.iter().chain(samples_q).copied().collect();
    pooled.sort_by(f64::total_cmp);
    let (a, b) = (
        quantile_sorted(&pooled, 0.001),
        quantile_sorted(&pooled, 0.999),
    );
    if !(b > a) {
        return Err(AuditError::Degenerate(
            "samples have no spread between the 0.1% and 99.9% quantiles".into(),
        ));
    }
    let k = match mode {
        BinningMode::FixedK(k) => k,
        BinningMode::FixedWidth(w) => {
            check_positive("bin width", w)?;
            ((b - a) / w).ceil() as usize
        }
        BinningMode::ScottGaussian => {
            let sd = pooled_sd(samples_p, samples_q);
            if !(sd > 0.0) {
                return Err(AuditError::Degenerate("samples have zero variance".into()));
            }
            let h = scott_width_gaussian(sd, samples_p.len())?;
            ((b - a) / h).ceil() as usize
        }
    };
    BinningSpec::new(a, b, k.max(2))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edge_conventions() {
        let s = BinningSpec::new(0.0, 1.0, 2).unwrap();
        assert_eq!(s.bin_index(-10.0), 0);
        assert_eq!(s.bin_index(0.4999), 0);
        assert_eq!(s.bin_index(0.5), 1);
        assert_eq!(s.bin_index(10.0), 1);
        let s = BinningSpec::new(0.0, 1.0, 10).unwrap();
        for j in 1..10 {
            assert_eq!(s.bin_index(s.edge(j)), j, "edge {j}");
        }
        assert!(BinningSpec::new(1.0, 1.0, 4).is_err());
        assert!(BinningSpec::new(0.0, 1.0, 1).is_err());
    }

    #[test]
    fn build_example() {
        let spec = BinningSpec::new(0.0, 1.0, 2).unwrap();
        let h = build_histograms(&[-10.0, 0.5, 10.0], &[0.1, 0.2, 0.3], &spec).unwrap();
        // 0.5 sits on the left edge of the upper bin [b − h, ∞).
        assert!((h.p_hat.probs()[0] - 1.0 / 3.0).abs() < 1e-15);
        assert!((h.p_hat.probs()[1] - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(h.q_hat.probs(), &[1.0, 0.0]);
        let one = build_histograms(&[0.7], &[0.2], &spec).unwrap();
        assert_eq!(one.p_hat.probs(), &[0.0, 1.0]);
        assert!(build_histograms(&[], &[], &spec).is_err());
        assert!(build_histograms(&[1.0], &[1.0, 2.0], &spec).is_err());
        assert!(build_histograms(&[f64::NAN], &[1.0], &spec).is_err());
    }

    #[test]
    fn scott_widths() {
        let h = scott_width_gaussian(1.0, 1000).unwrap();
        assert!((h - 0.349_09).abs() < 1e-5);
        assert!((scott_width_gaussian(2.0, 1000).unwrap() - 2.0 * h).abs() < 1e-14);
        assert!((scott_width_gaussian(1.0, 8000).unwrap() - h / 2.0).abs() < 1e-14);
        let e = 1.0 / (4.0 * std::f64::consts::PI.sqrt());
        assert!((scott_width_general(e, e, 1000).unwrap() - h).abs() < 1e-12);
        assert!((scott_width_general(12.0, 0.0, 1).unwrap() - 1.0).abs() < 1e-15);
        assert!(scott_width_general(0.0, 0.0, 10).is_err());
        assert!(scott_width_gaussian(0.0, 10).is_err());
    }

    #[test]
    fn auto_spec_modes() {
        assert!(auto_spec(&[1.0; 100], &[1.0; 100], BinningMode::ScottGaussian).is_err());
        let p: Vec<f64> = (0..1000).map(|i| i as f64 / 1000.0).collect();
        let s = auto_spec(&p, &p, BinningMode::FixedK(10)).unwrap();
        assert_eq!(s.k, 10);
        let s = auto_spec(&p, &p, BinningMode::FixedWidth(0.1)).unwrap();
        assert!(s.h <= 0.1 && s.k == 10);
    }
}

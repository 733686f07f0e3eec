//! Seeded samplers for score distributions.
//!
//! All randomness comes from xoshiro256++ streams seeded through SplitMix64,
//! so outputs are reproducible for a given seed and library version.

use crate::error::{check_positive, AuditError, Result};
use crate::mechanisms::SubsampledGaussianMech;
use rand::{Rng as _, SeedableRng};
use rand_distr::StandardNormal;
use rand_xoshiro::Xoshiro256PlusPlus;
use serde::{Deserialize, Serialize};

pub type Rng = Xoshiro256PlusPlus;

pub fn rng_from_seed(seed: u64) -> Rng {
    Xoshiro256PlusPlus::seed_from_u64(seed)
}

/// Mixes `(seed, stream)` into an independent-looking child seed.
pub fn derive_seed(seed: u64, stream: u64) -> u64 {
    let mut z = seed ^ stream.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// A one-dimensional score distribution that can be sampled.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum ScoreDistribution {
    Normal { mean: f64, sd: f64 },
    Laplace { loc: f64, scale: f64 },
    Mixture(SubsampledGaussianMech),
}

impl ScoreDistribution {
    pub fn validate(&self) -> Result<()> {
        match *self {
            ScoreDistribution::Normal { mean, sd } => {
                if !mean.is_finite() {
                    return Err(AuditError::Domain {
                        name: "mean",
                        value: mean,
                    });
                }
                check_positive("sd", sd)
            }
            ScoreDistribution::Laplace { loc, scale } => {
                if !loc.is_finite() {
                    return Err(AuditError::Domain {
                        name: "loc",
                        value: loc,
                    });
                }
                check_positive("scale", scale)
            }
            ScoreDistribution::Mixture(m) => SubsampledGaussianMech::new(m.q, m.sigma).map(|_| ()),
        }
    }

    pub fn draw(&self, rng: &mut Rng) -> f64 {
        match *self {
            ScoreDistribution::Normal { mean, sd } => {
                mean + sd * rng.sample::<f64, _>(StandardNormal)
            }
            ScoreDistribution::Laplace { loc, scale } => {
                // Inverse CDF on u ∈ (−1/2, 1/2).
                let u: f64 = rng.random::<f64>() - 0.5;
                let mag = -(1.0 - 2.0 * u.abs()).max(f64::MIN_POSITIVE).ln();
                loc + scale * mag.copysign(u)
            }
            ScoreDistribution::Mixture(m) => {
                let shift = if rng.random::<f64>() < m.q { 1.0 } else { 0.0 };
                shift + m.sigma * rng.sample::<f64, _>(StandardNormal)
            }
        }
    }
}

/// Owns an RNG stream; one sampler per thread.
#[derive(Debug, Clone)]
pub struct Sampler {
    rng: Rng,
}

impl Sampler {
    pub fn new(seed: u64) -> Self {
        Self {
            rng: rng_from_seed(seed),
        }
    }

    pub fn sample(&mut self, dist: &ScoreDistribution, n: usize) -> Result<Vec<f64>> {
        if n == 0 {
            return Err(AuditError::Empty("sample size must be at least 1"));
        }
        dist.validate()?;
        Ok((0..n).map(|_| dist.draw(&mut self.rng)).collect())
    }

    pub fn rng(&mut self) -> &mut Rng {
        &mut self.rng
    }
}

/// `n` i.i.d. draws from `dist`, deterministic in `seed`.
pub fn sample(dist: &ScoreDistribution, n: usize, seed: u64) -> Result<Vec<f64>> {
    Sampler::new(seed).sample(dist, n)
}

/// Draws both sides of a pair from independent child streams of `seed`.
pub fn sample_pair(
    pair: &(ScoreDistribution, ScoreDistribution),
    n: usize,
    seed: u64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    Ok((
        sample(&pair.0, n, derive_seed(seed, 0))?,
        sample(&pair.1, n, derive_seed(seed, 1))?,
    ))
}

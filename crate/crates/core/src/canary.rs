//! Synthetic canary simulators: one-shot auditing with many random unit
//! canaries, and the iterative white-box loop with a synthetic gradient
//! oracle.
//!
//! Both simulators have two equivalent-in-distribution implementations.
//! `Materialized` runs the literal d-dimensional algorithm. `Projected`
//! works in the span of the canaries, where the Gram matrix of Gaussian
//! vectors is drawn through the Bartlett decomposition and projections of
//! isotropic vectors are drawn from their exact marginals. Its cost does not
//! grow with `d`.

use crate::error::{check_positive, AuditError, Result};
use crate::estimators::audit::{audit_histogram, AuditConfig, AuditReport, Method};
use crate::histogram::{auto_spec, build_histograms};
use crate::sampling::{derive_seed, rng_from_seed, Rng};
use rand::Rng as _;
use rand_distr::{Binomial, ChiSquared, Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

/// Largest number of f64 values a materialized release may hold.
pub const MATERIALIZE_CAP: usize = 1 << 26;
/// `Auto` materializes when `d · 3n` stays below this many normal draws.
const AUTO_MATERIALIZE_WORK: usize = 1 << 25;

const STREAM_X: u64 = 0;
const STREAM_NOISE: u64 = 1;
const STREAM_TRAIN: u64 = 2;
const STREAM_TEST: u64 = 3;
const STREAM_PROJECTED: u64 = 4;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Simulation {
    #[default]
    Auto,
    Materialized,
    Projected,
}

fn standard_normal(rng: &mut Rng) -> f64 {
    rng.sample(StandardNormal)
}

fn chi_square(rng: &mut Rng, dof: u64) -> f64 {
    if dof == 0 {
        return 0.0;
    }
    ChiSquared::new(dof as f64)
        .expect("positive degrees of freedom")
        .sample(rng)
}

/// First coordinate of a uniform unit vector in `d` dimensions.
fn sphere_marginal(rng: &mut Rng, d: usize) -> f64 {
    let g = standard_normal(rng);
    if d == 1 {
        return if g < 0.0 { -1.0 } else { 1.0 };
    }
    g / (g * g + chi_square(rng, d as u64 - 1)).sqrt()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Fills `out` with a uniform unit vector.
fn unit_vector_into(out: &mut [f64], rng: &mut Rng) {
    loop {
        for v in out.iter_mut() {
            *v = standard_normal(rng);
        }
        let norm = dot(out, out).sqrt();
        if norm > 0.0 {
            out.iter_mut().for_each(|v| *v /= norm);
            return;
        }
    }
}

/// `n` independent uniform unit vectors in `d` dimensions.
pub fn sample_sphere(d: usize, n: usize, rng: &mut Rng) -> Result<Vec<Vec<f64>>> {
    if d == 0 {
        return Err(AuditError::Domain {
            name: "d",
            value: 0.0,
        });
    }
    Ok((0..n)
        .map(|_| {
            let mut v = vec![0.0; d];
            unit_vector_into(&mut v, rng);
            v
        })
        .collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OneShotConfig {
    pub d: usize,
    /// Canaries per side.
    pub n: usize,
    pub sigma: f64,
    /// Norm of the fixed base sum `X`.
    pub x_norm: f64,
    pub seed: u64,
    #[serde(default)]
    pub simulation: Simulation,
}

impl OneShotConfig {
    pub fn new(d: usize, n: usize, sigma: f64, x_norm: f64, seed: u64) -> Result<Self> {
        let cfg = Self {
            d,
            n,
            sigma,
            x_norm,
            seed,
            simulation: Simulation::Auto,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(AuditError::Domain {
                name: "d",
                value: 0.0,
            });
        }
        if self.n == 0 {
            return Err(AuditError::Domain {
                name: "n",
                value: 0.0,
            });
        }
        check_positive("sigma", self.sigma)?;
        if !(self.x_norm >= 0.0 && self.x_norm.is_finite()) {
            return Err(AuditError::Domain {
                name: "x_norm",
                value: self.x_norm,
            });
        }
        if self.simulation == Simulation::Projected && self.d < 2 * self.n {
            return Err(AuditError::InvalidArgument(format!(
                "projected simulation needs d >= 2n, got d={} n={}",
                self.d, self.n
            )));
        }
        Ok(())
    }

    fn resolved(&self) -> Simulation {
        match self.simulation {
            Simulation::Auto => {
                let work = self.d.saturating_mul(self.n.saturating_mul(3));
                if work <= AUTO_MATERIALIZE_WORK || self.d < 2 * self.n {
                    Simulation::Materialized
                } else {
                    Simulation::Projected
                }
            }
            s => s,
        }
    }

    fn canary_rng(&self, stream: u64, i: usize) -> Rng {
        rng_from_seed(derive_seed(derive_seed(self.seed, stream), i as u64))
    }
}

/// Released parameter vector and the planted canaries.
#[derive(Debug, Clone, PartialEq)]
pub struct OneShotRelease {
    pub theta: Vec<f64>,
    pub train: Vec<Vec<f64>>,
    pub test: Vec<Vec<f64>>,
}

/// Builds `X` and adds the noise into `theta`, leaving the canary sum to the caller.
fn base_and_noise(cfg: &OneShotConfig, theta: &mut [f64]) {
    let mut x = vec![0.0; cfg.d];
    unit_vector_into(&mut x, &mut rng_from_seed(derive_seed(cfg.seed, STREAM_X)));
    let mut noise = rng_from_seed(derive_seed(cfg.seed, STREAM_NOISE));
    for (t, xi) in theta.iter_mut().zip(&x) {
        *t += cfg.x_norm * xi + cfg.sigma * standard_normal(&mut noise);
    }
}

/// `θ = X + Σ_{train} x + Z` with `Z ∼ N(0, σ²I)` and unit canaries drawn
/// uniformly from the sphere. All randomness derives from `cfg.seed`.
pub fn one_shot_release(cfg: &OneShotConfig) -> Result<OneShotRelease> {
    cfg.validate()?;
    let size = cfg.d.saturating_mul(2 * cfg.n + 1);
    if size > MATERIALIZE_CAP {
        return Err(AuditError::InvalidArgument(format!(
            "materialized release needs {size} values, above the cap of {MATERIALIZE_CAP}; use one_shot_score_samples"
        )));
    }
    let draw = |stream| -> Vec<Vec<f64>> {
        (0..cfg.n)
            .map(|i| {
                let mut v = vec![0.0; cfg.d];
                unit_vector_into(&mut v, &mut cfg.canary_rng(stream, i));
                v
            })
            .collect()
    };
    let train = draw(STREAM_TRAIN);
    let test = draw(STREAM_TEST);
    let mut theta = vec![0.0; cfg.d];
    base_and_noise(cfg, &mut theta);
    for c in &train {
        theta.iter_mut().zip(c).for_each(|(t, v)| *t += v);
    }
    Ok(OneShotRelease { theta, train, test })
}

/// Inner products of each canary with `theta`, in canary order.
pub fn one_shot_scores(
    theta: &[f64],
    train: &[Vec<f64>],
    test: &[Vec<f64>],
) -> Result<(Vec<f64>, Vec<f64>)> {
    let score = |set: &[Vec<f64>]| -> Result<Vec<f64>> {
        set.iter()
            .map(|c| {
                if c.len() != theta.len() {
                    return Err(AuditError::DimensionMismatch {
                        left: c.len(),
                        right: theta.len(),
                    });
                }
                Ok(dot(c, theta))
            })
            .collect()
    };
    Ok((score(train)?, score(test)?))
}

/// Streams the materialized algorithm with `O(d)` memory by regenerating
/// each canary from its own seed. Matches [`one_shot_release`] followed by
/// [`one_shot_scores`] exactly.
fn one_shot_streamed(cfg: &OneShotConfig) -> (Vec<f64>, Vec<f64>) {
    let mut theta = vec![0.0; cfg.d];
    base_and_noise(cfg, &mut theta);
    let mut buf = vec![0.0; cfg.d];
    let mut sum = vec![0.0; cfg.d];
    for i in 0..cfg.n {
        unit_vector_into(&mut buf, &mut cfg.canary_rng(STREAM_TRAIN, i));
        sum.iter_mut().zip(&buf).for_each(|(s, v)| *s += v);
    }
    theta.iter_mut().zip(&sum).for_each(|(t, s)| *t += s);
    drop(sum);
    let mut scores = |stream| -> Vec<f64> {
        (0..cfg.n)
            .map(|i| {
                unit_vector_into(&mut buf, &mut cfg.canary_rng(stream, i));
                dot(&buf, &theta)
            })
            .collect()
    };
    let p = scores(STREAM_TRAIN);
    let q = scores(STREAM_TEST);
    (p, q)
}

/// Simulates the scores in the `2n`-dimensional span of the canaries.
///
/// Stacking the Gaussian canary draws as rows of `W = L·U`, with `L` from
/// the Bartlett decomposition and `U` having orthonormal rows, the scores
/// depend only on `L`, `U·Z ∼ N(0, σ²I)` and the projection of `X`.
fn one_shot_projected(cfg: &OneShotConfig) -> (Vec<f64>, Vec<f64>) {
    let (n, d) = (cfg.n, cfg.d);
    let m = 2 * n;
    let mut rng = rng_from_seed(derive_seed(cfg.seed, STREAM_PROJECTED));
    let row_start = |i: usize| i * (i + 1) / 2;
    let mut l = vec![0.0; row_start(m)];
    let mut norms = vec![0.0; m];
    for i in 0..m {
        let row = &mut l[row_start(i)..row_start(i + 1)];
        for v in row[..i].iter_mut() {
            *v = standard_normal(&mut rng);
        }
        row[i] = chi_square(&mut rng, (d - i) as u64).sqrt();
        norms[i] = dot(row, row).sqrt();
    }
    let mut theta = vec![0.0; m];
    for i in 0..n {
        let row = &l[row_start(i)..row_start(i + 1)];
        theta
            .iter_mut()
            .zip(row)
            .for_each(|(t, v)| *t += v / norms[i]);
    }
    let g: Vec<f64> = (0..m).map(|_| standard_normal(&mut rng)).collect();
    let x_scale = cfg.x_norm / (dot(&g, &g) + chi_square(&mut rng, (d - m) as u64)).sqrt();
    for (t, gi) in theta.iter_mut().zip(&g) {
        *t += x_scale * gi + cfg.sigma * standard_normal(&mut rng);
    }
    let scores: Vec<f64> = (0..m)
        .map(|i| dot(&l[row_start(i)..row_start(i + 1)], &theta) / norms[i])
        .collect();
    let q = scores[n..].to_vec();
    let mut p = scores;
    p.truncate(n);
    (p, q)
}

/// Scores of the train canaries (P̃) and test canaries (Q̃).
pub fn one_shot_score_samples(cfg: &OneShotConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    Ok(match cfg.resolved() {
        Simulation::Projected => one_shot_projected(cfg),
        _ => one_shot_streamed(cfg),
    })
}

/// Simulates a one-shot release and audits the two score samples.
pub fn one_shot_audit(cfg: &OneShotConfig, audit: &AuditConfig) -> Result<AuditReport> {
    let (p, q) = one_shot_score_samples(cfg)?;
    let spec = auto_spec(&p, &q, audit.binning)?;
    audit_histogram(build_histograms(&p, &q, &spec)?, audit, Method::OneShot)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WhiteBoxConfig {
    /// Iterations per run.
    pub t: usize,
    /// Canary inclusion probability.
    pub q_c: f64,
    /// Data sampling rate.
    pub q: f64,
    pub sigma: f64,
    /// Clip norm `C`; canaries have exactly this norm.
    pub clip: f64,
    pub d: usize,
    pub seed: u64,
    /// Size of the nuisance dataset. Each step sums a Binomial(data_size, q)
    /// number of random clipped gradients of norm `C`. Zero gives the
    /// pure-noise null model.
    #[serde(default)]
    pub data_size: usize,
    /// Step size of the carried parameter update.
    #[serde(default)]
    pub learning_rate: f64,
    #[serde(default)]
    pub simulation: Simulation,
}

impl WhiteBoxConfig {
    pub fn new(
        t: usize,
        q_c: f64,
        q: f64,
        sigma: f64,
        clip: f64,
        d: usize,
        seed: u64,
    ) -> Result<Self> {
        let cfg = Self {
            t,
            q_c,
            q,
            sigma,
            clip,
            d,
            seed,
            data_size: 0,
            learning_rate: 0.0,
            simulation: Simulation::Auto,
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        if self.t == 0 {
            return Err(AuditError::Domain {
                name: "T",
                value: 0.0,
            });
        }
        if self.d == 0 {
            return Err(AuditError::Domain {
                name: "d",
                value: 0.0,
            });
        }
        if !(0.0..=1.0).contains(&self.q_c) {
            return Err(AuditError::Domain {
                name: "q_c",
                value: self.q_c,
            });
        }
        if !(self.q > 0.0 && self.q <= 1.0) {
            return Err(AuditError::Domain {
                name: "q",
                value: self.q,
            });
        }
        check_positive("sigma", self.sigma)?;
        check_positive("clip", self.clip)?;
        if !(self.learning_rate >= 0.0 && self.learning_rate.is_finite()) {
            return Err(AuditError::Domain {
                name: "learning_rate",
                value: self.learning_rate,
            });
        }
        Ok(())
    }

    fn resolved(&self) -> Simulation {
        match self.simulation {
            Simulation::Auto => Simulation::Projected,
            s => s,
        }
    }
}

fn binomial(rng: &mut Rng, n: usize, p: f64) -> u64 {
    if n == 0 {
        return 0;
    }
    Binomial::new(n as u64, p)
        .expect("valid binomial")
        .sample(rng)
}

/// `⟨S, g′⟩` for a nuisance sum `S` of `k` independent random vectors of
/// norm `C`, with `g′` an independent direction of norm `C`.
fn projected_nuisance(rng: &mut Rng, k: u64, c: f64, d: usize) -> f64 {
    if k == 0 {
        return 0.0;
    }
    let mut norm2 = 0.0f64;
    for _ in 0..k {
        let s = norm2.sqrt();
        norm2 = (norm2 + c * c + 2.0 * s * c * sphere_marginal(rng, d)).max(0.0);
    }
    c * norm2.sqrt() * sphere_marginal(rng, d)
}

fn whitebox_projected(cfg: &WhiteBoxConfig) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(cfg.seed);
    let c = cfg.clip;
    let noise_sd = c * c * cfg.sigma;
    let mut o = Vec::with_capacity(cfg.t);
    let mut o_prime = Vec::with_capacity(cfg.t);
    for _ in 0..cfg.t {
        let k = binomial(&mut rng, cfg.data_size, cfg.q);
        let k_prime = binomial(&mut rng, cfg.data_size, cfg.q);
        let plain =
            projected_nuisance(&mut rng, k, c, cfg.d) + noise_sd * standard_normal(&mut rng);
        let mut with =
            projected_nuisance(&mut rng, k_prime, c, cfg.d) + noise_sd * standard_normal(&mut rng);
        if rng.random::<f64>() < cfg.q_c {
            with += c * c;
        }
        o.push(plain);
        o_prime.push(with);
    }
    (o, o_prime)
}

fn whitebox_materialized(cfg: &WhiteBoxConfig) -> (Vec<f64>, Vec<f64>) {
    let mut rng = rng_from_seed(cfg.seed);
    let (c, d) = (cfg.clip, cfg.d);
    let mut theta = vec![0.0; d];
    let mut canary = vec![0.0; d];
    let mut grad = vec![0.0; d];
    let mut grad_prime = vec![0.0; d];
    let mut buf = vec![0.0; d];
    let mut o = Vec::with_capacity(cfg.t);
    let mut o_prime = Vec::with_capacity(cfg.t);
    for _ in 0..cfg.t {
        unit_vector_into(&mut canary, &mut rng);
        canary.iter_mut().for_each(|v| *v *= c);
        for g in [&mut grad, &mut grad_prime] {
            g.iter_mut().for_each(|v| *v = 0.0);
            for _ in 0..binomial(&mut rng, cfg.data_size, cfg.q) {
                unit_vector_into(&mut buf, &mut rng);
                g.iter_mut().zip(&buf).for_each(|(v, b)| *v += c * b);
            }
            g.iter_mut()
                .for_each(|v| *v += c * cfg.sigma * standard_normal(&mut rng));
        }
        if rng.random::<f64>() < cfg.q_c {
            grad_prime
                .iter_mut()
                .zip(&canary)
                .for_each(|(v, g)| *v += g);
        }
        o.push(dot(&grad, &canary));
        o_prime.push(dot(&grad_prime, &canary));
        theta
            .iter_mut()
            .zip(&grad)
            .for_each(|(t, g)| *t -= cfg.learning_rate * g);
    }
    (o, o_prime)
}

/// Runs the white-box loop for `cfg.t` steps and returns `(O, O′)`.
///
/// `O[t] = ⟨∇_t, g′⟩` and `O′[t] = ⟨∇′_t + b_t g′, g′⟩` with independent
/// batches and noise `N(0, C²σ²I)` for the two gradient sums, a fresh
/// canary `g′` of norm `C` per step, and `b_t ∼ Bernoulli(q_c)`. With the
/// nuisance sum off, `O ∼ N(0, C⁴σ²)` and `O′` is the mixture
/// `q_c·N(C², C⁴σ²) + (1 − q_c)·N(0, C⁴σ²)`.
pub fn whitebox_stream(cfg: &WhiteBoxConfig) -> Result<(Vec<f64>, Vec<f64>)> {
    cfg.validate()?;
    Ok(match cfg.resolved() {
        Simulation::Materialized => whitebox_materialized(cfg),
        _ => whitebox_projected(cfg),
    })
}

/// Concatenates `runs` independent streams, run `r` seeded by
/// `derive_seed(cfg.seed, r)`.
pub fn whitebox_runs(cfg: &WhiteBoxConfig, runs: usize) -> Result<(Vec<f64>, Vec<f64>)> {
    if runs == 0 {
        return Err(AuditError::Domain {
            name: "runs",
            value: 0.0,
        });
    }
    let mut o = Vec::with_capacity(runs * cfg.t);
    let mut o_prime = Vec::with_capacity(runs * cfg.t);
    for r in 0..runs {
        let run = WhiteBoxConfig {
            seed: derive_seed(cfg.seed, r as u64),
            ..*cfg
        };
        let (a, b) = whitebox_stream(&run)?;
        o.extend(a);
        o_prime.extend(b);
    }
    Ok((o, o_prime))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_vectors_are_unit() {
        let mut rng = rng_from_seed(1);
        for v in sample_sphere(17, 20, &mut rng).unwrap() {
            assert!((dot(&v, &v).sqrt() - 1.0).abs() < 1e-12);
        }
        for v in sample_sphere(1, 10, &mut rng).unwrap() {
            assert_eq!(v[0].abs(), 1.0);
        }
        assert!(sample_sphere(0, 1, &mut rng).is_err());
    }

    #[test]
    fn streamed_matches_release() {
        let cfg = OneShotConfig::new(64, 5, 0.7, 0.3, 9).unwrap();
        let r = one_shot_release(&cfg).unwrap();
        let direct = one_shot_scores(&r.theta, &r.train, &r.test).unwrap();
        let streamed = one_shot_streamed(&cfg);
        for (a, b) in direct
            .0
            .iter()
            .zip(&streamed.0)
            .chain(direct.1.iter().zip(&streamed.1))
        {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn tiny_noise_recovers_canary() {
        let cfg = OneShotConfig::new(32, 1, 1e-12, 0.0, 3).unwrap();
        let r = one_shot_release(&cfg).unwrap();
        let (p, _) = one_shot_scores(&r.theta, &r.train, &r.test).unwrap();
        assert!((p[0] - 1.0).abs() < 1e-9);
        assert!(OneShotConfig::new(32, 0, 1.0, 0.0, 3).is_err());
    }

    #[test]
    fn projected_moments() {
        let cfg = OneShotConfig {
            simulation: Simulation::Projected,
            ..OneShotConfig::new(1 << 20, 500, 1.0, 0.0, 5).unwrap()
        };
        let (p, q) = one_shot_score_samples(&cfg).unwrap();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        assert!((mean(&p) - 1.0).abs() < 0.2);
        assert!(mean(&q).abs() < 0.2);
    }

    #[test]
    fn whitebox_null_model_moments() {
        let cfg = WhiteBoxConfig::new(20_000, 1.0, 0.1, 1.5, 2.0, 1000, 4).unwrap();
        let (o, o2) = whitebox_stream(&cfg).unwrap();
        let mean = |x: &[f64]| x.iter().sum::<f64>() / x.len() as f64;
        let diff = mean(&o2) - mean(&o);
        assert!((diff - 4.0).abs() < 0.2, "{diff}");
        let var = o.iter().map(|x| x * x).sum::<f64>() / o.len() as f64;
        assert!((var / 36.0 - 1.0).abs() < 0.05, "{var}");
    }
}

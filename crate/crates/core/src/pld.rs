//! Privacy-loss distributions on a uniform grid: construction from discrete
//! pairs, self-composition by convolution, and δ(ε) evaluation.

use crate::discrete::DiscreteDistribution;
use crate::error::{AuditError, Result};
use crate::profile::{PrivacyProfile, TabulatedProfile};
use crate::special::KahanSum;
use rustfft::num_complex::Complex;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

/// Grid layout: `nodes` points of spacing `2L / nodes` covering `[−L, L]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PldGridSpec {
    pub half_width: f64,
    pub nodes: usize,
    /// Largest support, in nodes, that composition may produce.
    pub cap: usize,
}

pub const DEFAULT_HALF_WIDTH: f64 = 40.0;
pub const DEFAULT_NODES: usize = 1 << 20;
pub const DEFAULT_CAP: usize = 1 << 26;

impl Default for PldGridSpec {
    fn default() -> Self {
        Self {
            half_width: DEFAULT_HALF_WIDTH,
            nodes: DEFAULT_NODES,
            cap: DEFAULT_CAP,
        }
    }
}

impl PldGridSpec {
    pub fn new(half_width: f64, nodes: usize) -> Result<Self> {
        crate::error::check_positive("grid half-width", half_width)?;
        if nodes < 2 {
            return Err(AuditError::InvalidArgument(
                "grid needs at least 2 nodes".into(),
            ));
        }
        Ok(Self {
            half_width,
            nodes,
            cap: DEFAULT_CAP,
        })
    }

    pub fn step(&self) -> f64 {
        2.0 * self.half_width / self.nodes as f64
    }

    /// The default step with `L` widened, if needed, to cover every finite
    /// log-ratio of the pair.
    pub fn covering(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Self {
        let max_lr = p
            .probs()
            .iter()
            .zip(q.probs())
            .filter(|(a, b)| **a > 0.0 && **b > 0.0)
            .map(|(a, b)| (a / b).ln().abs())
            .fold(0.0, f64::max);
        let d = Self::default();
        let half_width = d.half_width.max(max_lr.ceil() + 1.0);
        let nodes = (2.0 * half_width / d.step()).round() as usize;
        Self {
            half_width,
            nodes,
            cap: d.cap,
        }
    }
}

/// Privacy-loss masses at `s_i = (offset + i)·step`, plus an atom at `+∞`.
#[derive(Debug, Clone, PartialEq)]
pub struct PldGrid {
    pub step: f64,
    pub offset: i64,
    pub masses: Vec<f64>,
    pub mass_inf: f64,
    pub cap: usize,
}

impl PldGrid {
    pub fn grid_start(&self) -> f64 {
        self.offset as f64 * self.step
    }

    pub fn loss_at(&self, i: usize) -> f64 {
        (self.offset + i as i64) as f64 * self.step
    }

    pub fn total_mass(&self) -> f64 {
        crate::special::compensated_sum(self.masses.iter().copied()) + self.mass_inf
    }

    fn trim(mut self) -> Self {
        let first = self.masses.iter().position(|&m| m > 0.0);
        match first {
            None => {
                self.masses.clear();
                self.offset = 0;
            }
            Some(f) => {
                let last = self.masses.iter().rposition(|&m| m > 0.0).unwrap_or(f);
                self.masses.truncate(last + 1);
                self.masses.drain(..f);
                self.offset += f as i64;
            }
        }
        self
    }
}

/// Distribution of `ln(P/Q)` under P, with log-ratios rounded up to the grid.
///
/// Bins with `q_j = 0 < p_j` go to the `+∞` atom; bins with `p_j = 0` carry
/// no mass. Log-ratios below `−L` are raised to `−L`.
pub fn pld_from_discrete(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    grid: &PldGridSpec,
) -> Result<PldGrid> {
    if p.len() != q.len() {
        return Err(AuditError::DimensionMismatch {
            left: p.len(),
            right: q.len(),
        });
    }
    let step = grid.step();
    let lim = (grid.half_width / step).floor() as i64;
    let mut entries = Vec::new();
    let mut inf = KahanSum::new();
    for (&pj, &qj) in p.probs().iter().zip(q.probs()) {
        if pj <= 0.0 {
            continue;
        }
        if qj <= 0.0 {
            inf.add(pj);
            continue;
        }
        let lr = (pj / qj).ln();
        if lr > grid.half_width {
            return Err(AuditError::GridOverflow {
                value: lr,
                half_width: grid.half_width,
            });
        }
        let idx = ((lr / step).ceil() as i64).clamp(-lim, lim + 1);
        entries.push((idx, pj));
    }
    let (lo, hi) = entries
        .iter()
        .fold((i64::MAX, i64::MIN), |(l, h), &(i, _)| (l.min(i), h.max(i)));
    let mut masses = if entries.is_empty() {
        Vec::new()
    } else {
        vec![0.0; (hi - lo + 1) as usize]
    };
    for &(i, m) in &entries {
        masses[(i - lo) as usize] += m;
    }
    Ok(PldGrid {
        step,
        offset: if entries.is_empty() { 0 } else { lo },
        masses,
        mass_inf: inf.value().min(1.0),
        cap: grid.cap,
    })
}

fn nnz(v: &[f64]) -> usize {
    v.iter().filter(|&&x| x != 0.0).count()
}

fn convolve_direct(a: &[f64], b: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; a.len() + b.len() - 1];
    let bnz: Vec<(usize, f64)> = b
        .iter()
        .copied()
        .enumerate()
        .filter(|(_, x)| *x != 0.0)
        .collect();
    for (i, &x) in a.iter().enumerate() {
        if x == 0.0 {
            continue;
        }
        for &(j, y) in &bnz {
            out[i + j] += x * y;
        }
    }
    out
}

fn convolve_fft(a: &[f64], b: &[f64]) -> Vec<f64> {
    let len = a.len() + b.len() - 1;
    let n = len.next_power_of_two();
    let mut planner = FftPlanner::<f64>::new();
    let fwd = planner.plan_fft_forward(n);
    let inv = planner.plan_fft_inverse(n);
    let load = |v: &[f64]| {
        let mut buf = vec![Complex::new(0.0, 0.0); n];
        for (d, &s) in buf.iter_mut().zip(v) {
            d.re = s;
        }
        buf
    };
    let mut fa = load(a);
    fwd.process(&mut fa);
    let mut fb = load(b);
    fwd.process(&mut fb);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= *y;
    }
    drop(fb);
    inv.process(&mut fa);
    let scale = 1.0 / n as f64;
    fa.truncate(len);
    fa.into_iter().map(|c| (c.re * scale).max(0.0)).collect()
}

/// Linear convolution, choosing the direct or FFT route by estimated cost.
pub fn convolve(a: &[f64], b: &[f64]) -> Vec<f64> {
    if a.is_empty() || b.is_empty() {
        return Vec::new();
    }
    let direct = nnz(a) as f64 * nnz(b) as f64;
    let n = (a.len() + b.len() - 1).next_power_of_two() as f64;
    let fft = 6.0 * n * n.log2().max(1.0);
    if direct <= fft {
        convolve_direct(a, b)
    } else {
        convolve_fft(a, b)
    }
}

fn compose_pair(x: &PldGrid, y: &PldGrid) -> Result<PldGrid> {
    let len = if x.masses.is_empty() || y.masses.is_empty() {
        0
    } else {
        x.masses.len() + y.masses.len() - 1
    };
    if len > x.cap {
        return Err(AuditError::GridTooLarge {
            nodes: len,
            cap: x.cap,
        });
    }
    Ok(PldGrid {
        step: x.step,
        offset: x.offset + y.offset,
        masses: convolve(&x.masses, &y.masses),
        mass_inf: 1.0 - (1.0 - x.mass_inf) * (1.0 - y.mass_inf),
        cap: x.cap,
    }
    .trim())
}

/// Distribution of the sum of `c` independent copies, by repeated squaring.
pub fn self_convolve(pld: &PldGrid, c: usize) -> Result<PldGrid> {
    if c == 0 {
        return Err(AuditError::InvalidArgument(
            "composition count must be at least 1".into(),
        ));
    }
    let mut acc: Option<PldGrid> = None;
    let mut base = pld.clone().trim();
    let mut k = c;
    loop {
        if k & 1 == 1 {
            acc = Some(match acc {
                None => base.clone(),
                Some(a) => compose_pair(&a, &base)?,
            });
        }
        k >>= 1;
        if k == 0 {
            break;
        }
        base = compose_pair(&base, &base)?;
    }
    let mut out = acc.expect("c ≥ 1");
    out.mass_inf = -(c as f64 * (-pld.mass_inf).ln_1p()).exp_m1();
    Ok(out)
}

/// `mass_inf + Σ_s m(s) · [1 − e^{ε − s}]_+`.
pub fn delta_from_pld(pld: &PldGrid, eps: f64) -> f64 {
    let mut s = KahanSum::new();
    s.add(pld.mass_inf);
    let start = ((eps / pld.step).floor() as i64 + 1 - pld.offset).max(0) as usize;
    for (i, &m) in pld.masses.iter().enumerate().skip(start) {
        if m == 0.0 {
            continue;
        }
        let l = pld.loss_at(i);
        if l > eps {
            s.add(m * -(eps - l).exp_m1());
        }
    }
    s.value().clamp(0.0, 1.0)
}

/// Symmetric profile of the `c`-fold composition of the pair `(P, Q)`,
/// tabulated on `eps_grid`.
pub fn compose_profile(
    p: &DiscreteDistribution,
    q: &DiscreteDistribution,
    c: usize,
    eps_grid: &[f64],
    grid: &PldGridSpec,
) -> Result<PrivacyProfile> {
    if eps_grid.is_empty() {
        return Err(AuditError::Empty("epsilon grid"));
    }
    let fwd = self_convolve(&pld_from_discrete(p, q, grid)?, c)?;
    let rev = self_convolve(&pld_from_discrete(q, p, grid)?, c)?;
    let mut delta: Vec<f64> = eps_grid
        .iter()
        .map(|&e| delta_from_pld(&fwd, e).max(delta_from_pld(&rev, e)))
        .collect();
    // Remove summation jitter so the table is exactly non-increasing.
    for i in 1..delta.len() {
        if delta[i] > delta[i - 1] {
            delta[i] = delta[i - 1];
        }
    }
    Ok(PrivacyProfile::Tabulated(TabulatedProfile::new(
        eps_grid.to_vec(),
        delta,
    )?))
}

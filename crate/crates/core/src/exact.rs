//! Exact output distributions of the generator.
//!
//! A single measured pair `(a, b)` (outcome at the `+` analyzer, outcome at the
//! `x` analyzer) has weight `sin²θ` if `a != b`, `cos²θ` otherwise, multiplied by
//! the efficiencies of the two detectors that fired, and normalised by
//!
//! ```text
//! Z1 = sin²θ (e0+ e1x + e1+ e0x) + cos²θ (e0+ e0x + e1+ e1x).
//! ```
//!
//! The law of `n` pairs is the product of `n` single-pair laws. Everything in this
//! module is computed either from that product (enumeration) or from the closed
//! forms it implies; both routes are exposed so they can check each other.
//!
//! Dense arrays are indexed by the integer value of the string (leftmost bit most
//! significant). Pair distributions are indexed by `(x << n) | y`.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::config::{Efficiencies, QrngConfig, Side};
use crate::error::{Error, Result};

/// Largest `n + j` (in bits per string) that exact enumeration accepts by default.
pub const DEFAULT_ENUMERATION_CAP: usize = 12;

/// Normalisation tolerance every distribution must satisfy.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Outer-index partitions used by the parallel enumerations. Fixed so the
/// reduction order, and hence the result, does not depend on the thread count.
const PARTITIONS: usize = 64;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "n", rename_all = "lowercase")]
pub enum Support {
    /// Strings in `B^n`.
    Strings(usize),
    /// Pairs of strings in `B^n × B^n`.
    Pairs(usize),
}

impl Support {
    pub fn string_len(&self) -> usize {
        match *self {
            Support::Strings(n) | Support::Pairs(n) => n,
        }
    }

    pub fn size(&self) -> usize {
        match *self {
            Support::Strings(n) => 1 << n,
            Support::Pairs(n) => 1 << (2 * n),
        }
    }
}

/// A probability mass function over a finite support, stored densely.
#[derive(Debug, Clone, PartialEq)]
pub struct ExactDistribution {
    support: Support,
    mass: Vec<f64>,
}

impl ExactDistribution {
    /// Wraps `mass` after checking non-negativity and normalisation.
    pub fn new(support: Support, mass: Vec<f64>) -> Result<Self> {
        if mass.len() != support.size() {
            return Err(Error::usage(format!(
                "{} masses for a support of size {}",
                mass.len(),
                support.size()
            )));
        }
        if let Some(i) = mass.iter().position(|&m| !(m >= 0.0)) {
            return Err(Error::usage(format!("negative or NaN mass at index {i}")));
        }
        let total = kahan_sum(mass.iter().copied());
        if (total - 1.0).abs() > NORMALIZATION_TOL {
            return Err(Error::usage(format!("masses sum to {total}, not 1")));
        }
        Ok(Self { support, mass })
    }

    pub fn uniform(n: usize) -> Self {
        let size = 1usize << n;
        Self {
            support: Support::Strings(n),
            mass: vec![1.0 / size as f64; size],
        }
    }

    pub fn support(&self) -> Support {
        self.support
    }

    pub fn masses(&self) -> &[f64] {
        &self.mass
    }

    pub fn mass_at(&self, index: usize) -> f64 {
        self.mass[index]
    }

    /// Mass of a string (or of the pair `(x, y)` for pair supports).
    pub fn mass_of(&self, x: &BitString, y: Option<&BitString>) -> Result<f64> {
        let n = self.support.string_len();
        let check = |s: &BitString| {
            if s.len() != n {
                Err(Error::LengthMismatch {
                    left: s.len(),
                    right: n,
                })
            } else {
                Ok(s.to_value() as usize)
            }
        };
        match (self.support, y) {
            (Support::Strings(_), None) => Ok(self.mass[check(x)?]),
            (Support::Pairs(_), Some(y)) => Ok(self.mass[(check(x)? << n) | check(y)?]),
            _ => Err(Error::usage("string/pair support mismatch")),
        }
    }

    pub fn total(&self) -> f64 {
        kahan_sum(self.mass.iter().copied())
    }

    /// Sum of the masses whose index satisfies `pred`.
    pub fn mass_where(&self, mut pred: impl FnMut(usize) -> bool) -> f64 {
        kahan_sum(
            self.mass
                .iter()
                .enumerate()
                .filter(|(i, _)| pred(*i))
                .map(|(_, &m)| m),
        )
    }

    /// Distribution of the `side` string of a pair distribution.
    pub fn marginal(&self, side: Side) -> Result<ExactDistribution> {
        let Support::Pairs(n) = self.support else {
            return Err(Error::usage("marginal of a string distribution"));
        };
        let mask = (1usize << n) - 1;
        let mut acc = vec![Kahan::default(); 1 << n];
        for (i, &m) in self.mass.iter().enumerate() {
            let k = match side {
                Side::Plus => i >> n,
                Side::Times => i & mask,
            };
            acc[k].add(m);
        }
        Ok(Self {
            support: Support::Strings(n),
            mass: acc.into_iter().map(|k| k.value()).collect(),
        })
    }
}

/// Constant per-bit bias `(p0, p1)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BiasParams {
    pub p0: f64,
    pub p1: f64,
}

impl BiasParams {
    pub fn new(p0: f64, p1: f64) -> Result<Self> {
        if !(p0 >= 0.0 && p1 >= 0.0 && (p0 + p1 - 1.0).abs() <= NORMALIZATION_TOL) {
            return Err(Error::usage(format!("invalid bias ({p0}, {p1})")));
        }
        Ok(Self { p0, p1 })
    }

    /// Probability of a specific string with `zeros` zeros and `ones` ones.
    pub fn string_prob(&self, zeros: usize, ones: usize) -> f64 {
        self.p0.powi(zeros as i32) * self.p1.powi(ones as i32)
    }
}

/// Compensated summation accumulator.
#[derive(Debug, Clone, Copy, Default)]
pub(crate) struct Kahan {
    sum: f64,
    comp: f64,
}

impl Kahan {
    #[inline]
    pub(crate) fn add(&mut self, v: f64) {
        let y = v - self.comp;
        let t = self.sum + y;
        self.comp = (t - self.sum) - y;
        self.sum = t;
    }

    pub(crate) fn value(&self) -> f64 {
        self.sum
    }
}

pub(crate) fn kahan_sum(values: impl IntoIterator<Item = f64>) -> f64 {
    let mut k = Kahan::default();
    for v in values {
        k.add(v);
    }
    k.value()
}

/// The four single-pair weights before normalisation, indexed `2a + b`.
fn pair_weights(theta: f64, e: &Efficiencies) -> [f64; 4] {
    let s = theta.sin().powi(2);
    let c = theta.cos().powi(2);
    [
        c * e.e0_plus * e.e0_times,
        s * e.e0_plus * e.e1_times,
        s * e.e1_plus * e.e0_times,
        c * e.e1_plus * e.e1_times,
    ]
}

/// The single-pair law `[P(0,0), P(0,1), P(1,0), P(1,1)]` for explicit efficiencies.
pub fn pair_probs_with(theta: f64, e: &Efficiencies) -> [f64; 4] {
    let w = pair_weights(theta, e);
    let z1 = w[1] + w[2] + (w[0] + w[3]);
    w.map(|v| v / z1)
}

/// The single-pair law `[P(0,0), P(0,1), P(1,0), P(1,1)]`.
pub fn pair_probs(cfg: &QrngConfig) -> [f64; 4] {
    pair_probs_with(cfg.theta, &cfg.efficiencies())
}

/// Probability of observing `a` at the `+` analyzer and `b` at the `x` analyzer.
pub fn pair_prob(a: bool, b: bool, cfg: &QrngConfig) -> f64 {
    pair_probs(cfg)[(a as usize) << 1 | b as usize]
}

/// The single-pair normaliser `Z1`.
pub fn pair_normalizer(cfg: &QrngConfig) -> f64 {
    let w = pair_weights(cfg.theta, &cfg.efficiencies());
    w[1] + w[2] + (w[0] + w[3])
}

fn check_budget(bits: usize, cap: usize) -> Result<()> {
    if bits > cap {
        return Err(Error::Budget { needed: bits, cap });
    }
    Ok(())
}

/// Table of `P(x, y)` for all `k`-bit `x`, `y`, indexed `(x << k) | y`.
fn block_table(k: usize, p: &[f64; 4]) -> Vec<f64> {
    // Built one position at a time: appending bit a to x and b to y multiplies by p[2a+b].
    let mut table = vec![1.0];
    for level in 0..k {
        let width = 1usize << level;
        let mut next = vec![0.0; table.len() * 4];
        for x in 0..width {
            for y in 0..width {
                let m = table[(x << level) | y];
                for a in 0..2 {
                    for b in 0..2 {
                        let nx = (x << 1) | a;
                        let ny = (y << 1) | b;
                        next[(nx << (level + 1)) | ny] = m * p[(a << 1) | b];
                    }
                }
            }
        }
        table = next;
    }
    table
}

/// Splits an `m`-bit pair mass into a high and a low block table.
struct PairMass {
    m: usize,
    lo_bits: usize,
    hi: Vec<f64>,
    lo: Vec<f64>,
}

impl PairMass {
    fn new(m: usize, cfg: &QrngConfig) -> Self {
        let p = pair_probs(cfg);
        let lo_bits = m / 2;
        let hi_bits = m - lo_bits;
        Self {
            m,
            lo_bits,
            hi: block_table(hi_bits, &p),
            lo: block_table(lo_bits, &p),
        }
    }

    #[inline]
    fn get(&self, x: usize, y: usize) -> f64 {
        let lb = self.lo_bits;
        let hb = self.m - lb;
        let lmask = (1usize << lb) - 1;
        let h = ((x >> lb) << hb) | (y >> lb);
        let l = ((x & lmask) << lb) | (y & lmask);
        self.hi[h] * self.lo[l]
    }
}

/// Exact law of `n` measured pairs, `P(x, y)` over `B^n × B^n`.
pub fn exact_p(n: usize, cfg: &QrngConfig) -> Result<ExactDistribution> {
    exact_p_capped(n, cfg, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_p_capped(n: usize, cfg: &QrngConfig, cap: usize) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(Error::usage("string length must be positive"));
    }
    check_budget(n, cap)?;
    cfg.validate()?;
    let pm = PairMass::new(n, cfg);
    let size = 1usize << n;
    let mut mass = vec![0.0; size * size];
    mass.par_chunks_mut(size).enumerate().for_each(|(x, row)| {
        for (y, slot) in row.iter_mut().enumerate() {
            *slot = pm.get(x, y);
        }
    });
    ExactDistribution::new(Support::Pairs(n), mass)
}

/// Per-bit bias of one string when the other is discarded.
pub fn marginal_bias(cfg: &QrngConfig, side: Side) -> BiasParams {
    let e = cfg.efficiencies();
    let s = cfg.theta.sin().powi(2);
    let c = cfg.theta.cos().powi(2);
    let z1 = pair_normalizer(cfg);
    let (mine0, mine1, other0, other1) = match side {
        Side::Plus => (e.e0_plus, e.e1_plus, e.e0_times, e.e1_times),
        Side::Times => (e.e0_times, e.e1_times, e.e0_plus, e.e1_plus),
    };
    let p0 = mine0 * (other1 * s + other0 * c) / z1;
    let p1 = mine1 * (other0 * s + other1 * c) / z1;
    BiasParams { p0, p1 }
}

/// Per-bit bias of the aligned (`j = 0`) XOR string.
pub fn xor_bias(cfg: &QrngConfig) -> BiasParams {
    let e = cfg.efficiencies();
    let s = cfg.theta.sin().powi(2);
    let c = cfg.theta.cos().powi(2);
    let z1 = pair_normalizer(cfg);
    BiasParams {
        p0: c * (e.e0_plus * e.e0_times + e.e1_plus * e.e1_times) / z1,
        p1: s * (e.e0_plus * e.e1_times + e.e1_plus * e.e0_times) / z1,
    }
}

/// Law of the offset-XOR string `z_i = x_i ^ y_(i+j)` of length `n`, obtained by
/// enumerating all `(x, y)` in `B^(n+j) × B^(n+j)`.
pub fn exact_q(n: usize, j: usize, cfg: &QrngConfig) -> Result<ExactDistribution> {
    exact_q_capped(n, j, cfg, DEFAULT_ENUMERATION_CAP)
}

pub fn exact_q_capped(
    n: usize,
    j: usize,
    cfg: &QrngConfig,
    cap: usize,
) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(Error::usage("output length must be positive"));
    }
    let m = n + j;
    check_budget(m, cap)?;
    cfg.validate()?;
    let pm = PairMass::new(m, cfg);
    let outer = 1usize << m;
    let out_size = 1usize << n;
    let out_mask = out_size - 1;
    let chunk = outer.div_ceil(PARTITIONS).max(1);

    // x's leading n bits meet y's trailing n bits: z = (x >> j) ^ (y & mask).
    let partials: Vec<Vec<Kahan>> = (0..outer)
        .step_by(chunk)
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|start| {
            let mut acc = vec![Kahan::default(); out_size];
            for x in start..(start + chunk).min(outer) {
                let xz = x >> j;
                for y in 0..outer {
                    acc[xz ^ (y & out_mask)].add(pm.get(x, y));
                }
            }
            acc
        })
        .collect();

    let mut total = vec![Kahan::default(); out_size];
    for part in &partials {
        for (t, p) in total.iter_mut().zip(part) {
            t.add(p.value());
        }
    }
    ExactDistribution::new(
        Support::Strings(n),
        total.into_iter().map(|k| k.value()).collect(),
    )
}

/// Closed form of the `j = 0` XOR law: a constantly biased source.
pub fn closed_form_q0(n: usize, cfg: &QrngConfig) -> Result<ExactDistribution> {
    closed_form_q0_capped(n, cfg, 24)
}

pub fn closed_form_q0_capped(n: usize, cfg: &QrngConfig, cap: usize) -> Result<ExactDistribution> {
    if n == 0 {
        return Err(Error::usage("output length must be positive"));
    }
    check_budget(n, cap)?;
    cfg.validate()?;
    let bias = xor_bias(cfg);
    let mass = (0..1usize << n)
        .map(|z| {
            let ones = z.count_ones() as usize;
            bias.string_prob(n - ones, ones)
        })
        .collect();
    ExactDistribution::new(Support::Strings(n), mass)
}

fn check_comparable(d1: &ExactDistribution, d2: &ExactDistribution) -> Result<()> {
    if d1.support != d2.support {
        return Err(Error::usage(format!(
            "support mismatch: {:?} vs {:?}",
            d1.support, d2.support
        )));
    }
    Ok(())
}

/// `Σ |d1 - d2|` over the common support.
pub fn l1_distance(d1: &ExactDistribution, d2: &ExactDistribution) -> Result<f64> {
    check_comparable(d1, d2)?;
    Ok(kahan_sum(
        d1.mass.iter().zip(&d2.mass).map(|(a, b)| (a - b).abs()),
    ))
}

/// Total variation distance `½ Σ |d1 - d2|`.
pub fn tv_distance(d1: &ExactDistribution, d2: &ExactDistribution) -> Result<f64> {
    Ok(0.5 * l1_distance(d1, d2)?)
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2).contains(&theta) {
        return Err(Error::usage(format!("theta {theta} outside [0, pi/2]")));
    }
    Ok(())
}

/// Quantum XOR expectation `(1 + cos 2θ) / 2`.
///
/// This is the probability that the two outcomes agree (XOR = 0), which is how
/// the closed form is conventionally printed. [`xor_one_rate_quantum`] gives the
/// average of the XOR outputs themselves.
pub fn expectation_xor_quantum(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(0.5 * (1.0 + (2.0 * theta).cos()))
}

/// Classical linear expectation `1 - 2θ/π`.
pub fn expectation_xor_classical(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(1.0 - 2.0 * theta / PI)
}

/// Mean of the XOR output bits for the singlet, `sin²θ = 1 - E_XOR(θ)`.
pub fn xor_one_rate_quantum(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok(theta.sin().powi(2))
}

/// Singlet correlation `C(θ) = cos 2θ` with equal outcomes counted `+1`.
pub fn correlation_quantum(theta: f64) -> Result<f64> {
    check_angle(theta)?;
    Ok((2.0 * theta).cos())
}

/// First-order deviations from ½ of the quantum and classical curves at
/// `π/4 + Δθ`: `(Δθ, 2Δθ/π)`.
pub fn taylor_gap(delta_theta: f64) -> Result<(f64, f64)> {
    if !(delta_theta.abs() <= 0.2) {
        return Err(Error::usage(format!(
            "|delta theta| = {} exceeds 0.2",
            delta_theta.abs()
        )));
    }
    Ok((delta_theta, 2.0 * delta_theta / PI))
}

//! Statistical tests and estimators over bit strings.
//!
//! Blocks are always non-overlapping `k`-bit words read left to right; a
//! trailing partial block is ignored. Block values use the same MSB-first
//! convention as [`BitString::to_value`].

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};
use statrs::function::gamma::gamma_ur;

use crate::bits::BitString;
use crate::error::{check_same_len, Error, Result};
use crate::exact::{ExactDistribution, Support};
use crate::extract::xor_offset;

pub const DEFAULT_ALPHA: f64 = 0.01;

/// Outcome of one statistical test.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TestReport {
    pub test_name: String,
    /// Block length, when the test is parameterised by one.
    pub k: Option<usize>,
    pub statistic: f64,
    pub p_value: Option<f64>,
    pub pass: bool,
    pub alpha: Option<f64>,
    pub sample_size: usize,
}

/// Upper tail `P(X >= stat)` of a chi-squared variable with `df` degrees of freedom.
pub fn chi2_survival(stat: f64, df: usize) -> f64 {
    if df == 0 || stat.is_nan() {
        return f64::NAN;
    }
    if stat <= 0.0 {
        return 1.0;
    }
    if stat.is_infinite() {
        return 0.0;
    }
    gamma_ur(df as f64 / 2.0, stat / 2.0).clamp(0.0, 1.0)
}

/// Counts of each non-overlapping `k`-bit block value.
pub fn block_counts(bits: &BitString, k: usize) -> Vec<u64> {
    assert!((1..=16).contains(&k), "block length {k} unsupported");
    let mut counts = vec![0u64; 1 << k];
    let blocks = bits.len() / k;
    let mut it = bits.iter();
    for _ in 0..blocks {
        let v = (0..k).fold(0usize, |acc, _| (acc << 1) | it.next().unwrap() as usize);
        counts[v] += 1;
    }
    counts
}

/// Pearson chi-squared statistic of `counts` against expected cell
/// probabilities `probs`, with its p-value. Cells with zero probability are
/// excluded from the degrees of freedom; a count in such a cell gives an
/// infinite statistic.
pub fn chi2_goodness_of_fit(counts: &[u64], probs: &[f64], alpha: f64) -> Result<TestReport> {
    check_same_len(counts.len(), probs.len())?;
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::usage("no observations"));
    }
    let mut stat = 0.0;
    let mut cells = 0;
    for (&c, &p) in counts.iter().zip(probs) {
        if p > 0.0 {
            let expected = p * total as f64;
            let d = c as f64 - expected;
            stat += d * d / expected;
            cells += 1;
        } else if c > 0 {
            stat = f64::INFINITY;
        }
    }
    if cells < 2 {
        return Err(Error::usage(
            "need at least two cells with positive probability",
        ));
    }
    let p = chi2_survival(stat, cells - 1);
    Ok(TestReport {
        test_name: "chi2-gof".into(),
        k: None,
        statistic: stat,
        p_value: Some(p),
        pass: p >= alpha,
        alpha: Some(alpha),
        sample_size: total as usize,
    })
}

/// Chi-squared test that non-overlapping `k`-bit blocks are uniform over `2^k` cells.
pub fn chi2_uniformity(bits: &BitString, k: usize, alpha: f64) -> Result<TestReport> {
    if !(1..=8).contains(&k) {
        return Err(Error::usage(format!("block length {k} outside 1..=8")));
    }
    let needed = 100 << k;
    if bits.len() < needed {
        return Err(Error::usage(format!(
            "{} bits is too short for k = {k}; need at least {needed}",
            bits.len()
        )));
    }
    let cells = 1usize << k;
    let mut report = chi2_goodness_of_fit(
        &block_counts(bits, k),
        &vec![1.0 / cells as f64; cells],
        alpha,
    )?;
    report.test_name = "chi2-uniformity".into();
    report.k = Some(k);
    report.sample_size = bits.len();
    Ok(report)
}

/// Borel-normality check for every `k` in `1..=floor(log2 log2 n)`: each
/// `k`-block frequency must deviate from `2^-k` by less than `sqrt(log2(n) / n)`.
/// The statistic is the largest observed deviation.
pub fn borel_normality(bits: &BitString) -> Result<Vec<TestReport>> {
    let n = bits.len();
    if n < 64 {
        return Err(Error::usage(format!(
            "{n} bits is too short; need at least 64"
        )));
    }
    let log_n = (n as f64).log2();
    let bound = (log_n / n as f64).sqrt();
    let k_max = log_n.log2().floor() as usize;
    Ok((1..=k_max)
        .map(|k| {
            let counts = block_counts(bits, k);
            let blocks = (n / k) as f64;
            let target = 1.0 / (1u64 << k) as f64;
            let worst = counts
                .iter()
                .map(|&c| (c as f64 / blocks - target).abs())
                .fold(0.0, f64::max);
            TestReport {
                test_name: "borel-normality".into(),
                k: Some(k),
                statistic: worst,
                p_value: None,
                pass: worst < bound,
                alpha: None,
                sample_size: n,
            }
        })
        .collect())
}

/// `(#equal - #different) / n` with equal outcomes counted `+1`.
pub fn correlation_estimate(x: &BitString, y: &BitString) -> Result<f64> {
    check_same_len(x.len(), y.len())?;
    if x.is_empty() {
        return Err(Error::usage("correlation of empty strings"));
    }
    let n = x.len() as f64;
    let different = x.xor(y)?.count_ones() as f64;
    Ok((n - 2.0 * different) / n)
}

/// Fraction of ones in the offset XOR of `x` and `y`.
pub fn exor_rate(x: &BitString, y: &BitString, j: usize) -> Result<f64> {
    let z = xor_offset(x, y, j)?;
    Ok(z.count_ones() as f64 / z.len() as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThetaEstimate {
    /// Estimated analyzer angle, radians.
    pub theta: f64,
    /// Delta-method standard error, `1 / (2 sqrt(n))`.
    pub stderr: f64,
    /// Observed fraction of differing outcomes.
    pub rate: f64,
    pub sample_size: usize,
    /// Set when the rate is 0 or 1 and the estimate sits on the boundary.
    pub degenerate: bool,
}

/// Inverts `P(outcomes differ) = sin²θ`.
pub fn estimate_theta(x: &BitString, y: &BitString) -> Result<ThetaEstimate> {
    check_same_len(x.len(), y.len())?;
    if x.len() < 10_000 {
        return Err(Error::usage(format!(
            "{} pairs is too few; need at least 10000",
            x.len()
        )));
    }
    let rate = exor_rate(x, y, 0)?;
    Ok(theta_from_rate(rate, x.len()))
}

pub fn theta_from_rate(rate: f64, n: usize) -> ThetaEstimate {
    let theta = rate.clamp(0.0, 1.0).sqrt().asin().clamp(0.0, FRAC_PI_2);
    ThetaEstimate {
        theta,
        stderr: 0.5 / (n as f64).sqrt(),
        rate,
        sample_size: n,
        degenerate: rate <= 0.0 || rate >= 1.0,
    }
}

/// Frequency distribution of equal-length samples.
pub fn empirical_distribution(samples: &[BitString], n: usize) -> Result<ExactDistribution> {
    if samples.is_empty() {
        return Err(Error::usage("no samples"));
    }
    if n == 0 || n > 24 {
        return Err(Error::usage(format!("sample length {n} outside 1..=24")));
    }
    let mut counts = vec![0u64; 1 << n];
    for s in samples {
        if s.len() != n {
            return Err(Error::LengthMismatch {
                left: s.len(),
                right: n,
            });
        }
        counts[s.to_value() as usize] += 1;
    }
    empirical_from_counts(&counts, n)
}

/// Normalises a dense count vector over `B^n` into a distribution.
pub fn empirical_from_counts(counts: &[u64], n: usize) -> Result<ExactDistribution> {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return Err(Error::usage("no samples"));
    }
    ExactDistribution::new(
        Support::Strings(n),
        counts.iter().map(|&c| c as f64 / total as f64).collect(),
    )
}

/// Fraction of ones; 0.5 for an unbiased string.
pub fn ones_fraction(bits: &BitString) -> f64 {
    if bits.is_empty() {
        return f64::NAN;
    }
    bits.count_ones() as f64 / bits.len() as f64
}

/// Fraction of zeros in each consecutive window of `window` bits.
pub fn windowed_zero_fraction(bits: &BitString, window: usize) -> Vec<f64> {
    assert!(window > 0);
    (0..bits.len() / window)
        .map(|w| {
            let s = bits.slice(w * window, (w + 1) * window);
            s.count_zeros() as f64 / window as f64
        })
        .collect()
}

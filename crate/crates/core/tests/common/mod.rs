#![allow(dead_code)]

use qrng_core::extract::xor_offset;
use qrng_core::sim::sample_pairs;
use qrng_core::{BitString, QrngConfig};

/// Counts of the `n`-bit offset-XOR output over `samples` independent blocks of
/// `n + j` simulated pairs each.
pub fn xor_block_counts(
    n: usize,
    j: usize,
    cfg: &QrngConfig,
    samples: usize,
    seed: u64,
) -> Vec<u64> {
    let m = n + j;
    let stream = sample_pairs(samples * m, cfg, seed).unwrap().records;
    let x = stream.plus_bits();
    let y = stream.times_bits();
    let mut counts = vec![0u64; 1 << n];
    for s in 0..samples {
        let z = xor_offset(
            &x.slice(s * m, (s + 1) * m),
            &y.slice(s * m, (s + 1) * m),
            j,
        )
        .unwrap();
        counts[z.to_value() as usize] += 1;
    }
    counts
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let cov: f64 = a.iter().zip(b).map(|(x, y)| (x - ma) * (y - mb)).sum();
    let va: f64 = a.iter().map(|x| (x - ma).powi(2)).sum();
    let vb: f64 = b.iter().map(|y| (y - mb).powi(2)).sum();
    cov / (va * vb).sqrt()
}

/// Bernoulli bits with `P(1) = p_one(i)` for position `i`.
pub fn bernoulli_bits(n: usize, seed: u64, p_one: impl Fn(usize) -> f64) -> BitString {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|i| rng.random::<f64>() < p_one(i)).collect()
}

/// Random valid configuration with efficiencies in `[0.05, 1]`.
pub fn random_config(seed: u64) -> QrngConfig {
    use rand::{Rng, SeedableRng};
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let mut e = || 0.05 + 0.95 * rng.random::<f64>();
    let e = qrng_core::Efficiencies {
        e0_plus: e(),
        e1_plus: e(),
        e0_times: e(),
        e1_times: e(),
    };
    let theta = std::f64::consts::FRAC_PI_2
        * rand_chacha::ChaCha8Rng::seed_from_u64(seed ^ 0x5eed).random::<f64>();
    QrngConfig::with_efficiencies(theta, e)
}

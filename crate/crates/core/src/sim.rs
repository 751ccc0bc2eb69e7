//! Monte-Carlo generation of timestamped pair outcomes, and the stream
//! transforms that model detector imperfections and adversarial selection.
//!
//! All randomness comes from [`ChaCha8Rng`] seeded with [`SeedableRng::seed_from_u64`].
//! Each transform uses its own ChaCha stream id (see the `STREAM_*` constants), so
//! enabling one imperfection never shifts the random numbers another one sees.
//! Outcome draws consume one `f64` per pair in weighted mode and four in
//! physical mode, plus one `f64` per pair for the arrival time.

use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::bits::BitString;
use crate::config::QrngConfig;
use crate::error::{Error, Result};
use crate::exact::pair_probs_with;

const STREAM_PAIRS: u64 = 0;
const STREAM_DOUBLE_COUNT: u64 = 1;

/// One coincidence: arrival time and the two outcomes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PairRecord {
    #[serde(rename = "t")]
    pub time: f64,
    #[serde(rename = "a", with = "bit_as_int")]
    pub plus: bool,
    #[serde(rename = "b", with = "bit_as_int")]
    pub times: bool,
}

impl PairRecord {
    pub fn xor(&self) -> bool {
        self.plus ^ self.times
    }
}

mod bit_as_int {
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(b: &bool, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_u8(*b as u8)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<bool, D::Error> {
        match u8::deserialize(d)? {
            0 => Ok(false),
            1 => Ok(true),
            v => Err(serde::de::Error::custom(format!(
                "bit must be 0 or 1, got {v}"
            ))),
        }
    }
}

/// Time-ordered sequence of pair records.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PairStream {
    records: Vec<PairRecord>,
}

impl PairStream {
    /// Fails unless record times are strictly increasing.
    pub fn new(records: Vec<PairRecord>) -> Result<Self> {
        if let Some(w) = records.windows(2).position(|w| !(w[1].time > w[0].time)) {
            return Err(Error::Format(format!(
                "record {} is not later than record {w}",
                w + 1
            )));
        }
        Ok(Self { records })
    }

    pub fn records(&self) -> &[PairRecord] {
        &self.records
    }

    pub fn into_records(self) -> Vec<PairRecord> {
        self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    /// The `+` outcome string.
    pub fn plus_bits(&self) -> BitString {
        self.records.iter().map(|r| r.plus).collect()
    }

    /// The `x` outcome string.
    pub fn times_bits(&self) -> BitString {
        self.records.iter().map(|r| r.times).collect()
    }

    /// Aligned XOR of the two outcomes.
    pub fn xor_bits(&self) -> BitString {
        self.records.iter().map(PairRecord::xor).collect()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimulationResult {
    pub records: PairStream,
    /// Pairs generated before any filtering.
    pub raw_count: usize,
    /// Pairs lost because a photon went undetected (physical mode only).
    pub dropped_undetected: usize,
    pub dropped_dead_time: usize,
    pub dropped_demon: usize,
    pub seed: u64,
}

impl SimulationResult {
    /// `true` when the kept and dropped counts add up to the raw count.
    pub fn counts_consistent(&self) -> bool {
        self.records.len() + self.dropped_undetected + self.dropped_dead_time + self.dropped_demon
            == self.raw_count
    }
}

/// How detector efficiencies enter the simulation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DetectionMode {
    /// Draw each coincidence directly from the efficiency-weighted pair law.
    #[default]
    Weighted,
    /// Draw raw singlet outcomes, then lose each photon independently.
    Physical,
}

fn rng_for(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

struct Clock {
    t: f64,
    mean: f64,
}

impl Clock {
    fn tick(&mut self, rng: &mut ChaCha8Rng) -> f64 {
        let u: f64 = rng.sample(Open01);
        let next = self.t - self.mean * u.ln();
        self.t = if next > self.t {
            next
        } else {
            self.t.next_up()
        };
        self.t
    }
}

fn check_n(n: usize, cfg: &QrngConfig) -> Result<()> {
    cfg.validate()?;
    if n == 0 {
        return Err(Error::usage("pair count must be at least 1"));
    }
    Ok(())
}

/// Draws `n` coincidences from the efficiency-weighted pair law at each arrival time.
pub fn sample_pairs(n: usize, cfg: &QrngConfig, seed: u64) -> Result<SimulationResult> {
    check_n(n, cfg)?;
    let mut rng = rng_for(seed, STREAM_PAIRS);
    let mut clock = Clock {
        t: 0.0,
        mean: cfg.mean_pair_interval,
    };
    let fixed = pair_probs_with(cfg.theta, &cfg.efficiencies());
    let drifting = cfg.has_drift();
    let mut records = Vec::with_capacity(n);
    for _ in 0..n {
        let time = clock.tick(&mut rng);
        let p = if drifting {
            pair_probs_with(cfg.theta, &cfg.efficiencies_at(time))
        } else {
            fixed
        };
        let u: f64 = rng.random();
        let cell = if u < p[0] {
            0
        } else if u < p[0] + p[1] {
            1
        } else if u < p[0] + p[1] + p[2] {
            2
        } else {
            3
        };
        records.push(PairRecord {
            time,
            plus: cell >> 1 == 1,
            times: cell & 1 == 1,
        });
    }
    Ok(SimulationResult {
        records: PairStream { records },
        raw_count: n,
        dropped_undetected: 0,
        dropped_dead_time: 0,
        dropped_demon: 0,
        seed,
    })
}

/// Emits `n` raw singlet pairs and keeps those where both photons are detected.
///
/// The `+` outcome is a fair coin, the `x` outcome differs from it with
/// probability `sin²θ`, and each photon is then detected with the efficiency of
/// the detector it reached. Conditioned on detection, kept pairs follow the same
/// law as [`sample_pairs`].
pub fn sample_pairs_physical(n: usize, cfg: &QrngConfig, seed: u64) -> Result<SimulationResult> {
    check_n(n, cfg)?;
    let mut rng = rng_for(seed, STREAM_PAIRS);
    let mut clock = Clock {
        t: 0.0,
        mean: cfg.mean_pair_interval,
    };
    let flip = cfg.theta.sin().powi(2);
    let mut records = Vec::new();
    let mut dropped = 0;
    for _ in 0..n {
        let time = clock.tick(&mut rng);
        let e = cfg.efficiencies_at(time);
        let [u_a, u_flip, u_dp, u_dt]: [f64; 4] = rng.random();
        let plus = u_a < 0.5;
        let times = plus ^ (u_flip < flip);
        let seen_plus = u_dp < e.weight(crate::config::Side::Plus, plus);
        let seen_times = u_dt < e.weight(crate::config::Side::Times, times);
        if seen_plus && seen_times {
            records.push(PairRecord { time, plus, times });
        } else {
            dropped += 1;
        }
    }
    Ok(SimulationResult {
        records: PairStream { records },
        raw_count: n,
        dropped_undetected: dropped,
        dropped_dead_time: 0,
        dropped_demon: 0,
        seed,
    })
}

/// Runs generation followed by every imperfection enabled in `cfg`:
/// double counting, then the dead-time filter, then the fair-sampling demon
/// acting on the aligned XOR bits.
pub fn simulate(
    n: usize,
    cfg: &QrngConfig,
    seed: u64,
    mode: DetectionMode,
) -> Result<SimulationResult> {
    let mut res = match mode {
        DetectionMode::Weighted => sample_pairs(n, cfg, seed)?,
        DetectionMode::Physical => sample_pairs_physical(n, cfg, seed)?,
    };
    if cfg.double_count_prob > 0.0 {
        res.records = apply_double_counting(&res.records, cfg.double_count_prob, seed)?;
    }
    if cfg.dead_time > 0.0 {
        let before = res.records.len();
        res.records = dead_time_filter(&res.records, cfg.dead_time)?;
        res.dropped_dead_time = before - res.records.len();
    }
    if let Some(rho) = cfg.demon_rho {
        let (kept, rejected) = demon_filter_records(&res.records, rho)?;
        res.records = kept;
        res.dropped_demon = rejected;
    }
    Ok(res)
}

/// With probability `p_dc` per record, replaces its `x` outcome by the `x`
/// outcome of the next record (the last record has no successor and is kept).
pub fn apply_double_counting(stream: &PairStream, p_dc: f64, seed: u64) -> Result<PairStream> {
    if !(0.0..=1.0).contains(&p_dc) {
        return Err(Error::usage(format!(
            "double count probability {p_dc} outside [0, 1]"
        )));
    }
    let mut rng = rng_for(seed, STREAM_DOUBLE_COUNT);
    let src = &stream.records;
    let records = src
        .iter()
        .enumerate()
        .map(|(i, r)| {
            let u: f64 = rng.random();
            match src.get(i + 1) {
                Some(next) if u < p_dc => PairRecord {
                    times: next.times,
                    ..*r
                },
                _ => *r,
            }
        })
        .collect();
    Ok(PairStream { records })
}

/// Keeps a record only if it arrives more than `dead_time` after the last kept
/// record. The first record is always kept.
pub fn dead_time_filter(stream: &PairStream, dead_time: f64) -> Result<PairStream> {
    if !(dead_time >= 0.0) {
        return Err(Error::usage(format!("dead time {dead_time} is negative")));
    }
    let mut records: Vec<PairRecord> = Vec::with_capacity(stream.len());
    for r in &stream.records {
        match records.last() {
            Some(last) if r.time - last.time <= dead_time => {}
            _ => records.push(*r),
        }
    }
    Ok(PairStream { records })
}

/// Spacing `k = ceil(1 / (1 - rho))` of the zeros the demon plants.
pub fn demon_period(rho: f64) -> Result<usize> {
    if !(rho > 0.0 && rho < 1.0) {
        return Err(Error::usage(format!("rho {rho} outside (0, 1)")));
    }
    let k = 1.0 / (1.0 - rho);
    // 1/(1-0.9) evaluates to 10.000000000000002; snap such cases to the integer.
    let k = if (k - k.round()).abs() < 1e-9 {
        k.round()
    } else {
        k.ceil()
    };
    Ok(k as usize)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DemonOutput {
    pub bits: BitString,
    /// Input bits thrown away at forced slots.
    pub rejected: usize,
    pub period: usize,
}

/// Drives the demon over an input sequence: `keep_at_forced` says whether an
/// item may fill a forced slot. Returns the kept items and the rejection count.
fn demon_select<T: Copy>(
    items: impl IntoIterator<Item = T>,
    period: usize,
    keep_at_forced: impl Fn(&T) -> bool,
) -> (Vec<T>, usize) {
    let mut kept = Vec::new();
    let mut rejected = 0;
    for item in items {
        let forced = (kept.len() + 1) % period == 0;
        if forced && !keep_at_forced(&item) {
            rejected += 1;
        } else {
            kept.push(item);
        }
    }
    (kept, rejected)
}

/// Rejects input bits so that output positions `k, 2k, 3k, ...` (1-based) are all
/// zero, with `k` from [`demon_period`]. Other bits pass through in order; if the
/// input runs out while seeking a zero the output simply ends.
pub fn demon_filter(bits: &BitString, rho: f64) -> Result<DemonOutput> {
    let period = demon_period(rho)?;
    let (kept, rejected) = demon_select(bits.iter(), period, |b| !*b);
    Ok(DemonOutput {
        bits: kept.into_iter().collect(),
        rejected,
        period,
    })
}

/// Record-level demon: forced slots must hold a record whose aligned XOR is 0.
pub fn demon_filter_records(stream: &PairStream, rho: f64) -> Result<(PairStream, usize)> {
    let period = demon_period(rho)?;
    let (records, rejected) = demon_select(stream.records.iter().copied(), period, |r| !r.xor());
    Ok((PairStream { records }, rejected))
}

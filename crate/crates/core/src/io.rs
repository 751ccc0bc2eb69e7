//! File formats.
//!
//! * Bit files, ASCII: a header line `#bits=<n>` followed by `n` characters `0`/`1`;
//!   whitespace between symbols is ignored. Written 64 symbols per line.
//! * Bit files, packed: raw bytes, bit `i` at bit `i % 8` (LSB first) of byte `i / 8`.
//! * Distributions: CSV `index,bitstring,probability`.
//! * Pair streams: NDJSON, one `{"t":..,"a":..,"b":..}` object per line.

use std::collections::BTreeMap;
use std::io::{BufRead, Write};

use serde::Serialize;

use crate::bits::BitString;
use crate::config::QrngConfig;
use crate::error::{Error, Result};
use crate::exact::{ExactDistribution, Support};
use crate::sim::{PairRecord, PairStream, SimulationResult};
use crate::stats::TestReport;

const HEADER: &str = "#bits=";

pub fn write_ascii_bits<W: Write>(mut w: W, bits: &BitString) -> Result<()> {
    writeln!(w, "{HEADER}{}", bits.len())?;
    let text = bits.to_string();
    for line in text.as_bytes().chunks(64) {
        w.write_all(line)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_ascii_bits(text: &str) -> Result<BitString> {
    let mut lines = text.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::Format("empty bit file".into()))?;
    let declared: usize = header
        .trim()
        .strip_prefix(HEADER)
        .and_then(|v| v.parse().ok())
        .ok_or_else(|| Error::Format(format!("expected `{HEADER}<n>` header, got {header:?}")))?;
    let mut bits = BitString::with_capacity(declared);
    for (lineno, line) in lines.enumerate() {
        for c in line.chars().filter(|c| !c.is_whitespace()) {
            match c {
                '0' => bits.push(false),
                '1' => bits.push(true),
                other => {
                    return Err(Error::Format(format!(
                        "unexpected {other:?} on line {}",
                        lineno + 2
                    )))
                }
            }
        }
    }
    if bits.len() != declared {
        return Err(Error::Format(format!(
            "header declares {declared} bits but {} were found",
            bits.len()
        )));
    }
    Ok(bits)
}

/// Reads packed bits; `len` defaults to eight bits per byte.
pub fn read_packed_bits(bytes: &[u8], len: Option<usize>) -> Result<BitString> {
    BitString::from_packed_bytes(bytes, len.unwrap_or(bytes.len() * 8))
}

fn fmt_prob(p: f64) -> String {
    format!("{p:e}")
}

fn support_label(support: Support, index: usize) -> String {
    match support {
        Support::Strings(n) => BitString::from_value(index as u64, n).to_string(),
        Support::Pairs(n) => format!(
            "{}|{}",
            BitString::from_value((index >> n) as u64, n),
            BitString::from_value((index & ((1 << n) - 1)) as u64, n)
        ),
    }
}

/// Writes `index,bitstring,probability`; pair supports label rows `x|y`.
pub fn write_distribution_csv<W: Write>(mut w: W, d: &ExactDistribution) -> Result<()> {
    writeln!(w, "index,bitstring,probability")?;
    for (i, &m) in d.masses().iter().enumerate() {
        writeln!(w, "{i},{},{}", support_label(d.support(), i), fmt_prob(m))?;
    }
    Ok(())
}

/// Writes `index,bitstring,deviation` with `deviation = mass - 2^-n`.
pub fn write_deviation_csv<W: Write>(mut w: W, d: &ExactDistribution) -> Result<()> {
    let Support::Strings(n) = d.support() else {
        return Err(Error::usage("deviation table needs a string distribution"));
    };
    let u = 1.0 / (1u64 << n) as f64;
    writeln!(w, "index,bitstring,deviation")?;
    for (i, &m) in d.masses().iter().enumerate() {
        writeln!(
            w,
            "{i},{},{}",
            support_label(d.support(), i),
            fmt_prob(m - u)
        )?;
    }
    Ok(())
}

/// Reads the `probability` column of a distribution CSV back into a distribution.
pub fn read_distribution_csv(text: &str, support: Support) -> Result<ExactDistribution> {
    let mut lines = text.lines();
    if lines.next() != Some("index,bitstring,probability") {
        return Err(Error::Format("missing distribution CSV header".into()));
    }
    let mass = lines
        .map(|l| {
            l.rsplit(',')
                .next()
                .and_then(|v| v.parse::<f64>().ok())
                .ok_or_else(|| Error::Format(format!("bad CSV row {l:?}")))
        })
        .collect::<Result<Vec<_>>>()?;
    ExactDistribution::new(support, mass)
}

pub fn write_stream_ndjson<W: Write>(mut w: W, stream: &PairStream) -> Result<()> {
    for r in stream.records() {
        serde_json::to_writer(&mut w, r)?;
        w.write_all(b"\n")?;
    }
    Ok(())
}

pub fn read_stream_ndjson<R: BufRead>(r: R) -> Result<PairStream> {
    let mut records = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let rec: PairRecord = serde_json::from_str(&line)
            .map_err(|e| Error::Format(format!("stream line {}: {e}", i + 1)))?;
        records.push(rec);
    }
    PairStream::new(records)
}

#[derive(Debug, Clone, Serialize)]
pub struct TvReport<'a> {
    pub n: usize,
    pub j: usize,
    pub config: &'a QrngConfig,
    /// `½ Σ |Q - U|`.
    pub tv: f64,
    /// `Σ |Q - U|`.
    pub l1: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct ExtractionSummary {
    #[serde(rename = "in")]
    pub input: usize,
    #[serde(rename = "out")]
    pub output: usize,
    pub discarded: usize,
    pub method: String,
    pub params: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SimulationSummary<'a> {
    pub seed: u64,
    pub raw_count: usize,
    pub kept: usize,
    pub dropped_undetected: usize,
    pub dropped_dead_time: usize,
    pub dropped_demon: usize,
    pub config: &'a QrngConfig,
}

impl<'a> SimulationSummary<'a> {
    pub fn new(res: &SimulationResult, config: &'a QrngConfig) -> Self {
        Self {
            seed: res.seed,
            raw_count: res.raw_count,
            kept: res.records.len(),
            dropped_undetected: res.dropped_undetected,
            dropped_dead_time: res.dropped_dead_time,
            dropped_demon: res.dropped_demon,
            config,
        }
    }
}

/// One row per test, one column per block length, cells holding the p-value
/// (or `pass`/`fail` for tests without one).
pub fn write_report_matrix<W: Write>(mut w: W, reports: &[TestReport]) -> Result<()> {
    let k_max = reports.iter().filter_map(|r| r.k).max().unwrap_or(0);
    let mut names: Vec<&str> = Vec::new();
    for r in reports {
        if !names.contains(&r.test_name.as_str()) {
            names.push(&r.test_name);
        }
    }
    write!(w, "test")?;
    for k in 1..=k_max {
        write!(w, ",k={k}")?;
    }
    writeln!(w)?;
    for name in names {
        write!(w, "{name}")?;
        for k in 1..=k_max {
            let cell = reports
                .iter()
                .find(|r| r.test_name == name && r.k == Some(k))
                .map(|r| match r.p_value {
                    Some(p) => fmt_prob(p),
                    None => if r.pass { "pass" } else { "fail" }.to_string(),
                })
                .unwrap_or_default();
            write!(w, ",{cell}")?;
        }
        writeln!(w)?;
    }
    Ok(())
}

use std::collections::BTreeMap;
use std::fs::File;
use std::io::BufReader;
use std::path::Path;

use qrng_core::exact::{
    exact_p_capped, exact_q_capped, expectation_xor_classical, expectation_xor_quantum,
    l1_distance, tv_distance,
};
use qrng_core::extract::{pair_von_neumann, peres, von_neumann, ExtractionOutput, XorOffset};
use qrng_core::io::{
    read_ascii_bits, read_packed_bits, read_stream_ndjson, write_deviation_csv,
    write_distribution_csv, write_report_matrix, write_stream_ndjson, ExtractionSummary,
    SimulationSummary, TvReport,
};
use qrng_core::sim::{demon_filter, sample_pairs, simulate as run_simulation};
use qrng_core::stats::{
    borel_normality, chi2_uniformity, correlation_estimate, estimate_theta, exor_rate,
    ThetaEstimate,
};
use qrng_core::{
    BitString, DetectionMode, Error, ExactDistribution, QrngConfig, Result, TestReport,
};
use rand::{RngCore, SeedableRng};
use serde::Serialize;
use serde_json::json;

use crate::args::{config_argv, num, usage, Method, Source};
use crate::output::OutputDir;
use crate::{AnalyzeArgs, DemonArgs, ExactArgs, ExtractArgs, InputArgs, SimulateArgs, SweepArgs};

fn path_arg(p: &Path) -> String {
    std::path::absolute(p)
        .unwrap_or_else(|_| p.to_path_buf())
        .display()
        .to_string()
}

fn argv(command: &str, rest: impl IntoIterator<Item = String>) -> Vec<String> {
    std::iter::once(command.to_string()).chain(rest).collect()
}

fn seed_or_random(seed: Option<u64>) -> u64 {
    seed.unwrap_or_else(rand::random)
}

pub fn exact(a: ExactArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let mut out = OutputDir::create(&a.out)?;
    if a.joint {
        let p = exact_p_capped(a.n, &cfg, a.cap)?;
        out.write_with("distribution.csv", |w| write_distribution_csv(w, &p))?;
    } else {
        let q = exact_q_capped(a.n, a.j, &cfg, a.cap)?;
        let u = ExactDistribution::uniform(a.n);
        let report = TvReport {
            n: a.n,
            j: a.j,
            config: &cfg,
            tv: tv_distance(&q, &u)?,
            l1: l1_distance(&q, &u)?,
        };
        out.write_with("distribution.csv", |w| write_distribution_csv(w, &q))?;
        out.write_with("deviation.csv", |w| write_deviation_csv(w, &q))?;
        out.json("tv.json", &report)?;
        if a.tv {
            println!("tv = {}  sum|Q-U| = {}", report.tv, report.l1);
        }
    }
    let mut rest = config_argv(&cfg);
    rest.extend(["--n".into(), a.n.to_string(), "--j".into(), a.j.to_string()]);
    if a.tv {
        rest.push("--tv".into());
    }
    if a.joint {
        rest.push("--joint".into());
    }
    rest.extend([
        "--cap".into(),
        a.cap.to_string(),
        "--out".into(),
        path_arg(&a.out),
    ]);
    out.finish("exact", &argv("exact", rest), None, Some(&cfg))
}

pub fn simulate(a: SimulateArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    if a.pairs > a.max_pairs {
        return Err(Error::Budget {
            needed: a.pairs,
            cap: a.max_pairs,
        });
    }
    let seed = seed_or_random(a.seed);
    let mode = if a.physical {
        DetectionMode::Physical
    } else {
        DetectionMode::Weighted
    };
    let res = run_simulation(a.pairs, &cfg, seed, mode)?;
    let mut out = OutputDir::create(&a.out)?;
    out.write_with("stream.ndjson", |w| write_stream_ndjson(w, &res.records))?;
    out.json("summary.json", &SimulationSummary::new(&res, &cfg))?;
    out.bits("plus", &res.records.plus_bits(), a.packed)?;
    out.bits("times", &res.records.times_bits(), a.packed)?;
    out.bits("xor", &res.records.xor_bits(), a.packed)?;
    println!(
        "kept {} of {} pairs (undetected {}, dead time {}, demon {}); seed {seed}",
        res.records.len(),
        res.raw_count,
        res.dropped_undetected,
        res.dropped_dead_time,
        res.dropped_demon
    );
    let mut rest = config_argv(&cfg);
    rest.extend([
        "--pairs".into(),
        a.pairs.to_string(),
        "--seed".into(),
        seed.to_string(),
    ]);
    if a.physical {
        rest.push("--physical".into());
    }
    if a.packed {
        rest.push("--packed".into());
    }
    rest.extend([
        "--max-pairs".into(),
        a.max_pairs.to_string(),
        "--out".into(),
        path_arg(&a.out),
    ]);
    out.finish("simulate", &argv("simulate", rest), Some(seed), Some(&cfg))
}

/// Reads an ASCII bit file when it starts with the `#bits=` header, packed bytes otherwise.
fn read_bits(path: &Path, len: Option<usize>) -> Result<BitString> {
    let bytes = std::fs::read(path)?;
    if bytes.starts_with(b"#bits=") {
        let text = std::str::from_utf8(&bytes)
            .map_err(|_| Error::Format(format!("{}: not UTF-8", path.display())))?;
        read_ascii_bits(text)
    } else {
        read_packed_bits(&bytes, len)
    }
}

enum Strings {
    One(BitString),
    Two(BitString, BitString),
}

impl Strings {
    fn load(input: &InputArgs) -> Result<Self> {
        if let Some(path) = &input.stream {
            let s = read_stream_ndjson(BufReader::new(File::open(path)?))?;
            return Ok(Strings::Two(s.plus_bits(), s.times_bits()));
        }
        let Some(first) = &input.input else {
            return Err(usage("give --input or --stream"));
        };
        let x = read_bits(first, input.len)?;
        match &input.input2 {
            Some(second) => Ok(Strings::Two(x, read_bits(second, input.len)?)),
            None => Ok(Strings::One(x)),
        }
    }

    fn pick(self, source: Source) -> Result<BitString> {
        match (self, source) {
            (Strings::One(x), _) => Ok(x),
            (Strings::Two(x, _), Source::Plus) => Ok(x),
            (Strings::Two(_, y), Source::Times) => Ok(y),
            (Strings::Two(x, y), Source::Xor) => x.xor(&y),
        }
    }

    fn pair(self) -> Result<(BitString, BitString)> {
        match self {
            Strings::Two(x, y) => Ok((x, y)),
            Strings::One(_) => Err(usage(
                "this method needs two strings: --input with --input2, or --stream",
            )),
        }
    }
}

fn input_argv(input: &InputArgs) -> Vec<String> {
    let mut v = Vec::new();
    for (flag, path) in [
        ("--input", &input.input),
        ("--input2", &input.input2),
        ("--stream", &input.stream),
    ] {
        if let Some(p) = path {
            v.extend([flag.to_string(), path_arg(p)]);
        }
    }
    if let Some(len) = input.len {
        v.extend(["--len".into(), len.to_string()]);
    }
    v
}

pub fn extract(a: ExtractArgs) -> Result<()> {
    let strings = Strings::load(&a.input)?;
    let mut params = BTreeMap::new();
    let result = match a.method {
        Method::Vn => von_neumann(&strings.pick(a.source)?),
        Method::Peres => {
            params.insert("depth".to_string(), json!(a.depth));
            peres(&strings.pick(a.source)?, a.depth)?
        }
        Method::PairVn => {
            let (x, y) = strings.pair()?;
            pair_von_neumann(&x, &y)?
        }
        Method::Xor => {
            params.insert("j".to_string(), json!(a.j));
            let (x, y) = strings.pair()?;
            if a.j >= x.len() {
                return Err(usage(format!(
                    "offset {} needs more than {} bits",
                    a.j,
                    x.len()
                )));
            }
            let mut op = XorOffset::new(a.j);
            let bits = op.feed(&x, &y)?;
            ExtractionOutput {
                bits,
                consumed: op.consumed(),
                discarded: op.discarded(),
            }
        }
    };
    if !a.method.two_streams() && a.input.stream.is_some() {
        params.insert("source".to_string(), json!(a.source.name()));
    }
    let summary = ExtractionSummary {
        input: result.consumed,
        output: result.bits.len(),
        discarded: result.discarded,
        method: a.method.name().to_string(),
        params,
    };
    let mut out = OutputDir::create(&a.out)?;
    out.bits("extracted", &result.bits, a.packed)?;
    out.json("yield.json", &summary)?;
    println!(
        "{}: {} in, {} out, yield {:.6}",
        summary.method,
        summary.input,
        summary.output,
        result.yield_rate()
    );
    let mut rest = input_argv(&a.input);
    rest.extend([
        "--method".into(),
        a.method.name().into(),
        "--source".into(),
        a.source.name().into(),
        "--j".into(),
        a.j.to_string(),
        "--depth".into(),
        a.depth.to_string(),
    ]);
    if a.packed {
        rest.push("--packed".into());
    }
    rest.extend(["--out".into(), path_arg(&a.out)]);
    out.finish("extract", &argv("extract", rest), None, None)
}

#[derive(Serialize)]
struct PairedReport {
    correlation: f64,
    exor_rate: f64,
    /// Absent below the estimator's minimum sample size.
    theta: Option<ThetaEstimate>,
}

#[derive(Serialize)]
struct AnalysisReport {
    bits: usize,
    source: &'static str,
    alpha: f64,
    tests: Vec<TestReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    paired: Option<PairedReport>,
}

pub fn analyze(a: AnalyzeArgs) -> Result<()> {
    if !(a.alpha > 0.0 && a.alpha < 1.0) {
        return Err(usage("alpha must lie in (0, 1)"));
    }
    let strings = Strings::load(&a.input)?;
    let paired = match &strings {
        Strings::Two(x, y) => {
            let theta = if x.len() >= 10_000 {
                Some(estimate_theta(x, y)?)
            } else {
                eprintln!("qrng: {} pairs is too few for an angle estimate", x.len());
                None
            };
            Some(PairedReport {
                correlation: correlation_estimate(x, y)?,
                exor_rate: exor_rate(x, y, 0)?,
                theta,
            })
        }
        Strings::One(_) => None,
    };
    let source = if paired.is_some() {
        a.source.name()
    } else {
        "input"
    };
    let bits = strings.pick(a.source)?;

    let mut tests = Vec::new();
    for k in 1..=a.max_k.min(8) {
        if bits.len() >= 100 << k {
            tests.push(chi2_uniformity(&bits, k, a.alpha)?);
        }
    }
    if bits.len() >= 64 {
        tests.extend(borel_normality(&bits)?);
    }
    if tests.is_empty() {
        return Err(usage(format!(
            "{} bits is too short for any test",
            bits.len()
        )));
    }

    let mut out = OutputDir::create(&a.out)?;
    out.write_with("table.csv", |w| write_report_matrix(w, &tests))?;
    for r in &tests {
        let p = r
            .p_value
            .map_or_else(|| "-".to_string(), |p| format!("{p:.4e}"));
        println!(
            "{:<16} k={} stat={:.6} p={p} {}",
            r.test_name,
            r.k.unwrap_or(0),
            r.statistic,
            if r.pass { "pass" } else { "fail" }
        );
    }
    if let Some(p) = &paired {
        print!(
            "correlation={:.6} exor_rate={:.6}",
            p.correlation, p.exor_rate
        );
        if let Some(t) = &p.theta {
            print!(" theta={:.6} stderr={:.6}", t.theta, t.stderr);
        }
        println!();
    }
    out.json(
        "report.json",
        &AnalysisReport {
            bits: bits.len(),
            source,
            alpha: a.alpha,
            tests,
            paired,
        },
    )?;
    let mut rest = input_argv(&a.input);
    rest.extend([
        "--source".into(),
        a.source.name().into(),
        "--alpha".into(),
        num(a.alpha),
        "--max-k".into(),
        a.max_k.to_string(),
        "--out".into(),
        path_arg(&a.out),
    ]);
    out.finish("analyze", &argv("analyze", rest), None, None)
}

pub fn sweep(a: SweepArgs) -> Result<()> {
    let cfg = a.config.resolve()?;
    let grid: Vec<f64> = match (&a.thetas, a.points) {
        (Some(t), _) => t.clone(),
        (None, points) => {
            let m = points.unwrap_or(91);
            if m < 2 {
                return Err(usage("--points needs at least 2"));
            }
            (0..m)
                .map(|i| std::f64::consts::FRAC_PI_2 * i as f64 / (m - 1) as f64)
                .collect()
        }
    };
    let seed = a.empirical.map(|_| seed_or_random(a.seed));
    let mut rows = Vec::with_capacity(grid.len());
    for (i, &theta) in grid.iter().enumerate() {
        let quantum = expectation_xor_quantum(theta)?;
        let classical = expectation_xor_classical(theta)?;
        let empirical = match (a.empirical, seed) {
            (Some(pairs), Some(s)) => {
                let at = QrngConfig {
                    theta,
                    ..cfg.clone()
                };
                let z = sample_pairs(pairs, &at, s.wrapping_add(i as u64))?
                    .records
                    .xor_bits();
                Some(z.count_zeros() as f64 / z.len().max(1) as f64)
            }
            _ => None,
        };
        rows.push((theta, quantum, classical, empirical));
    }
    let mut out = OutputDir::create(&a.out)?;
    out.write_with("sweep.csv", |w| {
        write!(w, "theta,e_quantum,e_classical")?;
        if a.empirical.is_some() {
            write!(w, ",e_empirical")?;
        }
        writeln!(w)?;
        for (t, q, c, e) in &rows {
            write!(w, "{},{},{}", num(*t), num(*q), num(*c))?;
            if let Some(e) = e {
                write!(w, ",{}", num(*e))?;
            }
            writeln!(w)?;
        }
        Ok(())
    })?;
    println!("{} angles written", rows.len());
    let mut rest = config_argv(&cfg);
    match (&a.thetas, a.points) {
        (Some(t), _) => rest.extend([
            "--thetas".into(),
            t.iter().map(|&x| num(x)).collect::<Vec<_>>().join(","),
        ]),
        (None, p) => rest.extend(["--points".into(), p.unwrap_or(91).to_string()]),
    }
    if let (Some(pairs), Some(s)) = (a.empirical, seed) {
        rest.extend([
            "--empirical".into(),
            pairs.to_string(),
            "--seed".into(),
            s.to_string(),
        ]);
    }
    rest.extend(["--out".into(), path_arg(&a.out)]);
    out.finish("sweep", &argv("sweep", rest), seed, Some(&cfg))
}

pub fn demon_demo(a: DemonArgs) -> Result<()> {
    let (input, seed) = match &a.input {
        Some(path) => (read_bits(path, a.len)?, None),
        None => {
            let seed = seed_or_random(a.seed);
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let mut bytes = vec![0u8; a.bits.div_ceil(8)];
            rng.fill_bytes(&mut bytes);
            (BitString::from_packed_bytes(&bytes, a.bits)?, Some(seed))
        }
    };
    let d = demon_filter(&input, a.rho)?;
    let forced_zero = (d.period - 1..d.bits.len())
        .step_by(d.period)
        .all(|i| !d.bits.get(i));
    let mut out = OutputDir::create(&a.out)?;
    out.bits("demon", &d.bits, a.packed)?;
    let rejected_fraction = d.rejected as f64 / input.len().max(1) as f64;
    out.json(
        "demon.json",
        &json!({
            "rho": a.rho,
            "period": d.period,
            "input_bits": input.len(),
            "output_bits": d.bits.len(),
            "rejected": d.rejected,
            "rejected_fraction": rejected_fraction,
            "forced_slots_zero": forced_zero,
        }),
    )?;
    println!(
        "period {}: {} of {} bits rejected ({rejected_fraction:.4}), forced slots all zero: {forced_zero}",
        d.period,
        d.rejected,
        input.len()
    );
    let mut rest = vec!["--rho".to_string(), num(a.rho)];
    match &a.input {
        Some(p) => {
            rest.extend(["--input".into(), path_arg(p)]);
            if let Some(len) = a.len {
                rest.extend(["--len".into(), len.to_string()]);
            }
        }
        None => rest.extend([
            "--bits".into(),
            a.bits.to_string(),
            "--seed".into(),
            seed.unwrap_or_default().to_string(),
        ]),
    }
    if a.packed {
        rest.push("--packed".into());
    }
    rest.extend(["--out".into(), path_arg(&a.out)]);
    out.finish("demon-demo", &argv("demon-demo", rest), seed, None)
}

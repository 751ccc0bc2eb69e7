use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qrng_core::{parse_angle, DriftSpec, Efficiencies, Error, QrngConfig, Result};

/// Experiment configuration. Flags override values loaded from `--config`.
#[derive(Debug, Clone, Default, Args)]
pub struct ConfigArgs {
    /// JSON config file with the `QrngConfig` field names.
    #[arg(long, value_name = "FILE")]
    pub config: Option<PathBuf>,
    /// Relative analyzer angle: decimal radians or a multiple of pi (`pi/5`, `3pi/8`).
    #[arg(long, value_parser = angle)]
    pub theta: Option<f64>,
    /// Detector efficiencies in the order e0+,e1+,e0x,e1x.
    #[arg(long, value_name = "E0+,E1+,E0X,E1X", value_parser = quad, conflicts_with = "equal_e")]
    pub e: Option<[f64; 4]>,
    /// Set all four efficiencies to 1.
    #[arg(long)]
    pub equal_e: bool,
    /// Detector dead time in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub dead_time: Option<f64>,
    /// Mean time between pair emissions in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub interval: Option<f64>,
    /// Probability that a record's times outcome comes from the next pair.
    #[arg(long, value_name = "P")]
    pub double_count: Option<f64>,
    /// Fair-sampling demon with efficiency bound rho.
    #[arg(long, value_name = "RHO")]
    pub demon: Option<f64>,
    /// Sinusoidal drift amplitudes in the order e0+,e1+,e0x,e1x.
    #[arg(long, value_name = "A0+,A1+,A0X,A1X", value_parser = quad, requires = "drift_period")]
    pub drift_amp: Option<[f64; 4]>,
    /// Drift period in seconds.
    #[arg(long, value_name = "SECONDS")]
    pub drift_period: Option<f64>,
    /// Per-detector multipliers on the drift period.
    #[arg(long, value_name = "M0+,M1+,M0X,M1X", value_parser = quad)]
    pub drift_multipliers: Option<[f64; 4]>,
}

impl ConfigArgs {
    pub fn resolve(&self) -> Result<QrngConfig> {
        let mut cfg = match &self.config {
            Some(path) => QrngConfig::load(path)?,
            None => QrngConfig::default(),
        };
        if let Some(t) = self.theta {
            cfg.theta = t;
        }
        if self.equal_e {
            cfg = with_efficiencies(cfg, Efficiencies::equal(1.0));
        }
        if let Some([a, b, c, d]) = self.e {
            cfg = with_efficiencies(
                cfg,
                Efficiencies {
                    e0_plus: a,
                    e1_plus: b,
                    e0_times: c,
                    e1_times: d,
                },
            );
        }
        if let Some(v) = self.dead_time {
            cfg.dead_time = v;
        }
        if let Some(v) = self.interval {
            cfg.mean_pair_interval = v;
        }
        if let Some(v) = self.double_count {
            cfg.double_count_prob = v;
        }
        if let Some(v) = self.demon {
            cfg.demon_rho = Some(v);
        }
        if self.drift_amp.is_some()
            || self.drift_period.is_some()
            || self.drift_multipliers.is_some()
        {
            let mut d = cfg.drift.unwrap_or(DriftSpec {
                e0_plus: 0.0,
                e1_plus: 0.0,
                e0_times: 0.0,
                e1_times: 0.0,
                period: 0.0,
                period_multipliers: [1.0; 4],
            });
            if let Some([a, b, c, e]) = self.drift_amp {
                (d.e0_plus, d.e1_plus, d.e0_times, d.e1_times) = (a, b, c, e);
            }
            if let Some(p) = self.drift_period {
                d.period = p;
            }
            if let Some(m) = self.drift_multipliers {
                d.period_multipliers = m;
            }
            cfg.drift = Some(d);
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn with_efficiencies(cfg: QrngConfig, e: Efficiencies) -> QrngConfig {
    QrngConfig {
        e0_plus: e.e0_plus,
        e1_plus: e.e1_plus,
        e0_times: e.e0_times,
        e1_times: e.e1_times,
        ..cfg
    }
}

/// Flags reproducing `cfg` exactly, independent of any config file.
pub fn config_argv(cfg: &QrngConfig) -> Vec<String> {
    let mut v = vec![
        "--theta".into(),
        num(cfg.theta),
        "--e".into(),
        join(&cfg.efficiencies().as_array()),
        "--dead-time".into(),
        num(cfg.dead_time),
        "--interval".into(),
        num(cfg.mean_pair_interval),
        "--double-count".into(),
        num(cfg.double_count_prob),
    ];
    if let Some(rho) = cfg.demon_rho {
        v.extend(["--demon".into(), num(rho)]);
    }
    if let Some(d) = &cfg.drift {
        v.extend([
            "--drift-amp".into(),
            join(&d.amplitudes()),
            "--drift-period".into(),
            num(d.period),
            "--drift-multipliers".into(),
            join(&d.period_multipliers),
        ]);
    }
    v
}

/// Shortest text that parses back to the same `f64`.
pub fn num(x: f64) -> String {
    format!("{x:?}")
}

fn join(xs: &[f64]) -> String {
    xs.iter().map(|&x| num(x)).collect::<Vec<_>>().join(",")
}

pub fn angle(s: &str) -> std::result::Result<f64, String> {
    parse_angle(s).map_err(|e| e.to_string())
}

fn quad(s: &str) -> std::result::Result<[f64; 4], String> {
    let parts: Vec<f64> = s
        .split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| format!("not a number: {p:?}"))
        })
        .collect::<std::result::Result<_, _>>()?;
    parts
        .try_into()
        .map_err(|p: Vec<f64>| format!("expected 4 comma-separated values, got {}", p.len()))
}

/// Accepts integer counts written as `1000000` or `1e6`.
pub fn count(s: &str) -> std::result::Result<usize, String> {
    if let Ok(v) = s.parse::<usize>() {
        return Ok(v);
    }
    let f: f64 = s.parse().map_err(|_| format!("not a count: {s:?}"))?;
    if f >= 0.0 && f.fract() == 0.0 && f < 2f64.powi(53) {
        Ok(f as usize)
    } else {
        Err(format!("not a non-negative integer: {s:?}"))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Method {
    /// von Neumann on a single stream.
    Vn,
    /// Iterated von Neumann (Peres) on a single stream.
    Peres,
    /// Two-stream pair debiaser.
    PairVn,
    /// Offset XOR of two streams.
    Xor,
}

impl Method {
    pub fn name(self) -> &'static str {
        match self {
            Method::Vn => "vn",
            Method::Peres => "peres",
            Method::PairVn => "pair-vn",
            Method::Xor => "xor",
        }
    }

    pub fn two_streams(self) -> bool {
        matches!(self, Method::PairVn | Method::Xor)
    }
}

/// Which string of a pair stream feeds a single-stream consumer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum)]
pub enum Source {
    Plus,
    Times,
    #[default]
    Xor,
}

impl Source {
    pub fn name(self) -> &'static str {
        match self {
            Source::Plus => "plus",
            Source::Times => "times",
            Source::Xor => "xor",
        }
    }
}

pub fn usage(msg: impl Into<String>) -> Error {
    Error::Usage(msg.into())
}

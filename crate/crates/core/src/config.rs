//! Experimental configuration of the two-analyzer generator.

use std::f64::consts::{FRAC_PI_2, PI};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Which analyzer an outcome string comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    /// The reference context (detectors `D0+`, `D1+`).
    Plus,
    /// The context rotated by `theta` (detectors `D0x`, `D1x`).
    Times,
}

/// Detection weights of the four detectors.
///
/// These are relative weights on coincidence counts; they need not sum to one.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Efficiencies {
    pub e0_plus: f64,
    pub e1_plus: f64,
    pub e0_times: f64,
    pub e1_times: f64,
}

impl Efficiencies {
    pub fn equal(e: f64) -> Self {
        Self {
            e0_plus: e,
            e1_plus: e,
            e0_times: e,
            e1_times: e,
        }
    }

    /// Weight of outcome `bit` at the detector pair on `side`.
    #[inline]
    pub fn weight(&self, side: Side, bit: bool) -> f64 {
        match (side, bit) {
            (Side::Plus, false) => self.e0_plus,
            (Side::Plus, true) => self.e1_plus,
            (Side::Times, false) => self.e0_times,
            (Side::Times, true) => self.e1_times,
        }
    }

    pub fn as_array(&self) -> [f64; 4] {
        [self.e0_plus, self.e1_plus, self.e0_times, self.e1_times]
    }
}

/// Sinusoidal drift `e(t) = e + A sin(2 pi t / period)` applied per detector.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DriftSpec {
    #[serde(default)]
    pub e0_plus: f64,
    #[serde(default)]
    pub e1_plus: f64,
    #[serde(default)]
    pub e0_times: f64,
    #[serde(default)]
    pub e1_times: f64,
    /// Oscillation period in seconds.
    pub period: f64,
    /// Per-detector multipliers on `period`, in the order `e0+, e1+, e0x, e1x`.
    /// Distinct multipliers make the detectors drift independently.
    #[serde(default = "one_multiplier")]
    pub period_multipliers: [f64; 4],
}

fn one_multiplier() -> [f64; 4] {
    [1.0; 4]
}

impl DriftSpec {
    pub fn amplitudes(&self) -> [f64; 4] {
        [self.e0_plus, self.e1_plus, self.e0_times, self.e1_times]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct QrngConfig {
    /// Relative analyzer angle in radians, in `[0, pi/2]`.
    pub theta: f64,
    pub e0_plus: f64,
    pub e1_plus: f64,
    pub e0_times: f64,
    pub e1_times: f64,
    #[serde(default)]
    pub drift: Option<DriftSpec>,
    /// Detector dead time in seconds.
    #[serde(default, rename = "dead_time_Td")]
    pub dead_time: f64,
    /// Mean of the exponential inter-arrival time, seconds.
    #[serde(default = "default_interval")]
    pub mean_pair_interval: f64,
    #[serde(default)]
    pub double_count_prob: f64,
    #[serde(default)]
    pub demon_rho: Option<f64>,
}

fn default_interval() -> f64 {
    1e-6
}

impl Default for QrngConfig {
    fn default() -> Self {
        Self::ideal(std::f64::consts::FRAC_PI_4)
    }
}

impl QrngConfig {
    /// Equal unit efficiencies and no imperfections.
    pub fn ideal(theta: f64) -> Self {
        Self::with_efficiencies(theta, Efficiencies::equal(1.0))
    }

    pub fn with_efficiencies(theta: f64, e: Efficiencies) -> Self {
        Self {
            theta,
            e0_plus: e.e0_plus,
            e1_plus: e.e1_plus,
            e0_times: e.e0_times,
            e1_times: e.e1_times,
            drift: None,
            dead_time: 0.0,
            mean_pair_interval: default_interval(),
            double_count_prob: 0.0,
            demon_rho: None,
        }
    }

    /// The configuration used for the reference distribution tables:
    /// `theta = pi/5`, efficiencies `(0.30, 0.33, 0.29, 0.30)`.
    pub fn reference() -> Self {
        Self::with_efficiencies(
            PI / 5.0,
            Efficiencies {
                e0_plus: 0.30,
                e1_plus: 0.33,
                e0_times: 0.29,
                e1_times: 0.30,
            },
        )
    }

    pub fn efficiencies(&self) -> Efficiencies {
        Efficiencies {
            e0_plus: self.e0_plus,
            e1_plus: self.e1_plus,
            e0_times: self.e0_times,
            e1_times: self.e1_times,
        }
    }

    /// Efficiencies at time `t` after applying the drift model.
    pub fn efficiencies_at(&self, t: f64) -> Efficiencies {
        let base = self.efficiencies();
        let Some(d) = &self.drift else {
            return base;
        };
        let amp = d.amplitudes();
        let mut e = base.as_array();
        for k in 0..4 {
            if amp[k] != 0.0 {
                let period = d.period * d.period_multipliers[k];
                e[k] += amp[k] * (2.0 * PI * t / period).sin();
            }
        }
        Efficiencies {
            e0_plus: e[0],
            e1_plus: e[1],
            e0_times: e[2],
            e1_times: e[3],
        }
    }

    pub fn has_drift(&self) -> bool {
        self.drift
            .as_ref()
            .is_some_and(|d| d.amplitudes().iter().any(|&a| a != 0.0))
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=FRAC_PI_2).contains(&self.theta) {
            return Err(Error::usage(format!(
                "theta {} outside [0, pi/2]",
                self.theta
            )));
        }
        let e = self.efficiencies().as_array();
        if e.iter().any(|&v| !(v > 0.0 && v <= 1.0)) {
            return Err(Error::usage(format!(
                "efficiencies must lie in (0, 1], got {e:?}"
            )));
        }
        if let Some(d) = &self.drift {
            if !(d.period > 0.0) || d.period_multipliers.iter().any(|&m| !(m > 0.0)) {
                return Err(Error::usage("drift period must be positive"));
            }
            for (k, (&a, &base)) in d.amplitudes().iter().zip(&e).enumerate() {
                if !(a >= 0.0 && a < base && base + a <= 1.0) {
                    return Err(Error::usage(format!(
                        "drift amplitude {a} on detector {k} must keep efficiency {base} inside (0, 1]"
                    )));
                }
            }
        }
        if !(self.dead_time >= 0.0) {
            return Err(Error::usage("dead time must be non-negative"));
        }
        if !(self.mean_pair_interval > 0.0) {
            return Err(Error::usage("mean pair interval must be positive"));
        }
        if !(0.0..=1.0).contains(&self.double_count_prob) {
            return Err(Error::usage("double count probability outside [0, 1]"));
        }
        if let Some(rho) = self.demon_rho {
            if !(rho > 0.0 && rho < 1.0) {
                return Err(Error::usage("demon rho must lie in (0, 1)"));
            }
        }
        Ok(())
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: QrngConfig =
            serde_json::from_str(text).map_err(|e| Error::Format(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::from_json(&std::fs::read_to_string(path)?)
    }
}

/// Parses an angle given as a decimal (`0.6283`) or a rational multiple of pi
/// (`pi`, `pi/5`, `3pi/8`, `3*pi/8`).
pub fn parse_angle(text: &str) -> Result<f64> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let bad = || Error::usage(format!("cannot parse angle {text:?}"));
    let Some(idx) = s.find("pi") else {
        return s.parse::<f64>().map_err(|_| bad());
    };
    let coef = s[..idx].trim_end_matches('*');
    let coef = if coef.is_empty() {
        1.0
    } else {
        coef.parse::<f64>().map_err(|_| bad())?
    };
    let rest = &s[idx + 2..];
    let denom = match rest.strip_prefix('/') {
        Some(d) => d.parse::<f64>().map_err(|_| bad())?,
        None if rest.is_empty() => 1.0,
        None => return Err(bad()),
    };
    if denom == 0.0 {
        return Err(bad());
    }
    Ok(coef * PI / denom)
}

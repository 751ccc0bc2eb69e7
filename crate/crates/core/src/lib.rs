//! Simulation and analysis of a quantum random number generator built from
//! polarization-entangled photon pairs measured in two contexts `θ` apart, whose
//! outcome strings are combined by XOR.
//!
//! * [`bits`]: packed bit strings, Hamming distance, symbol counts.
//! * [`config`]: detector efficiencies, drift, dead time and adversary settings.
//! * [`exact`]: exact output laws by enumeration and closed form, distances,
//!   expectation curves.
//! * [`sim`]: seeded generation of timestamped pair streams and the imperfection
//!   transforms (double counting, dead time, fair-sampling demon).
//! * [`extract`]: offset XOR, von Neumann, Peres, and the two-string pair debiaser.
//! * [`stats`]: chi-squared and Borel-normality tests, correlation and angle estimators.
//! * [`io`]: bit files, CSV and NDJSON formats.

// `!(x > 0.0)` style checks are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod bits;
pub mod config;
pub mod error;
pub mod exact;
pub mod extract;
pub mod io;
pub mod sim;
pub mod stats;

pub use bits::{count_bits, hamming_distance, BitString};
pub use config::{parse_angle, DriftSpec, Efficiencies, QrngConfig, Side};
pub use error::{Error, Result};
pub use exact::{BiasParams, ExactDistribution, Support};
pub use extract::ExtractionOutput;
pub use sim::{DetectionMode, PairRecord, PairStream, SimulationResult};
pub use stats::TestReport;

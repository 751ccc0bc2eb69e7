//! `qrng`: command-line experiments over the entangled-pair QRNG model.

mod args;
mod commands;
mod output;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use qrng_core::exact::DEFAULT_ENUMERATION_CAP;
use qrng_core::extract::DEFAULT_PERES_DEPTH;
use qrng_core::stats::DEFAULT_ALPHA;

use args::{angle, count, ConfigArgs, Method, Source};

#[derive(Debug, Parser)]
#[command(
    name = "qrng",
    version,
    about = "Entangled-pair QRNG simulator, exact laws, extractors and tests"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Exact law of the offset-XOR output (or the joint pair law) by enumeration.
    Exact(ExactArgs),
    /// Simulate a timestamped pair stream.
    Simulate(SimulateArgs),
    /// Run an extractor over bit files or a pair stream.
    Extract(ExtractArgs),
    /// Chi-squared and Borel-normality tests, plus angle estimates for paired input.
    Analyze(AnalyzeArgs),
    /// Quantum and classical XOR expectation curves over an angle grid.
    Sweep(SweepArgs),
    /// Run the fair-sampling demon over uniform or supplied bits.
    DemonDemo(DemonArgs),
}

#[derive(Debug, Args)]
pub struct ExactArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Output string length.
    #[arg(long)]
    pub n: usize,
    /// Offset between the two strings.
    #[arg(long, default_value_t = 0)]
    pub j: usize,
    /// Print the distance to uniform on stdout.
    #[arg(long)]
    pub tv: bool,
    /// Write the joint law of the two strings instead of the XOR law.
    #[arg(long)]
    pub joint: bool,
    /// Largest number of pairs enumerated (the XOR law needs n + j).
    #[arg(long, default_value_t = DEFAULT_ENUMERATION_CAP)]
    pub cap: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Number of generated pairs (`1e6` accepted).
    #[arg(long, value_parser = count)]
    pub pairs: usize,
    /// RNG seed; drawn at random and recorded when omitted.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Model losses photon by photon and keep coincidences only.
    #[arg(long)]
    pub physical: bool,
    /// Write bit files as packed bytes (`.bin`) instead of ASCII.
    #[arg(long)]
    pub packed: bool,
    /// Refuse runs above this many pairs.
    #[arg(long, value_parser = count, default_value = "1e8")]
    pub max_pairs: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct InputArgs {
    /// Bit file (ASCII with `#bits=` header, or packed bytes).
    #[arg(long, value_name = "FILE", conflicts_with = "stream")]
    pub input: Option<PathBuf>,
    /// Second bit file for two-stream operations.
    #[arg(long, value_name = "FILE", requires = "input")]
    pub input2: Option<PathBuf>,
    /// NDJSON pair stream; supplies both strings.
    #[arg(long, value_name = "FILE")]
    pub stream: Option<PathBuf>,
    /// Bit count of packed inputs (default: eight per byte).
    #[arg(long)]
    pub len: Option<usize>,
}

#[derive(Debug, Args)]
pub struct ExtractArgs {
    #[command(flatten)]
    pub input: InputArgs,
    #[arg(long, value_enum)]
    pub method: Method,
    /// String of a pair stream fed to single-stream methods.
    #[arg(long, value_enum, default_value_t = Source::Xor)]
    pub source: Source,
    /// Offset for `xor`.
    #[arg(long, default_value_t = 0)]
    pub j: usize,
    /// Recursion depth for `peres`.
    #[arg(long, default_value_t = DEFAULT_PERES_DEPTH)]
    pub depth: usize,
    /// Write the output as packed bytes (`.bin`).
    #[arg(long)]
    pub packed: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct AnalyzeArgs {
    #[command(flatten)]
    pub input: InputArgs,
    /// String of a pair stream to test.
    #[arg(long, value_enum, default_value_t = Source::Xor)]
    pub source: Source,
    #[arg(long, default_value_t = DEFAULT_ALPHA)]
    pub alpha: f64,
    /// Largest chi-squared block length (blocks need 100 expected hits per cell).
    #[arg(long, default_value_t = 8)]
    pub max_k: usize,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub config: ConfigArgs,
    /// Evenly spaced grid over [0, pi/2], endpoints included.
    #[arg(long, conflicts_with = "thetas")]
    pub points: Option<usize>,
    /// Explicit comma-separated angles.
    #[arg(long, value_delimiter = ',', value_parser = angle)]
    pub thetas: Option<Vec<f64>>,
    /// Simulated pairs per angle for an empirical column.
    #[arg(long, value_parser = count)]
    pub empirical: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct DemonArgs {
    /// Detection-efficiency bound the demon must respect.
    #[arg(long)]
    pub rho: f64,
    /// Uniform input bits to generate when no input file is given.
    #[arg(long, value_parser = count, default_value = "1e6", conflicts_with = "input")]
    pub bits: usize,
    /// Bit file to filter instead of generated bits.
    #[arg(long, value_name = "FILE")]
    pub input: Option<PathBuf>,
    #[arg(long)]
    pub len: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub packed: bool,
    #[arg(long, default_value = "out")]
    pub out: PathBuf,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Exact(a) => commands::exact(a),
        Command::Simulate(a) => commands::simulate(a),
        Command::Extract(a) => commands::extract(a),
        Command::Analyze(a) => commands::analyze(a),
        Command::Sweep(a) => commands::sweep(a),
        Command::DemonDemo(a) => commands::demon_demo(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("qrng: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

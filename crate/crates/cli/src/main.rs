//! `macfb`: bounds, region export, scheme simulation and sweeps from the shell.

mod manifest;
mod run;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

pub use run::CliError;

/// Default for `--seed`, so bare invocations are reproducible.
pub const DEFAULT_SEED: u64 = 20240601;

#[derive(Debug, Parser)]
#[command(name = "macfb", version, about = "Error-exponent bounds and scheme simulation for MACs with feedback")]
pub struct Cli {
    /// Root seed of every random stream.
    #[arg(long, global = true, default_value_t = DEFAULT_SEED)]
    pub seed: u64,
    /// Worker threads for trials; results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub cmd: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Lower and upper exponent bounds at one rate pair.
    Bounds(BoundsArgs),
    /// Capacity-region vertices and boundary distance per direction.
    Region(RegionArgs),
    /// Simulate the two-stage scheme.
    Simulate(SimulateArgs),
    /// Grid over n, gamma, r1, r2 or p.
    Sweep(SweepArgs),
}

#[derive(Debug, Args)]
pub struct BoundsArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.0, allow_negative_numbers = true)]
    pub r2: f64,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RegionArgs {
    #[arg(long)]
    pub channel: PathBuf,
    /// Number of lambda half-planes (at least).
    #[arg(long, default_value_t = macfb::bounds::DEFAULT_REGION_SAMPLES)]
    pub samples: usize,
    /// Directions sampled on [0, pi/2].
    #[arg(long, default_value_t = 91)]
    pub thetas: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RuleArg {
    Ml,
    Threshold,
    Margin,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModeArg {
    Genie,
    RandomCode,
}

#[derive(Debug, Clone, Args)]
pub struct SchemeArgs {
    #[arg(long)]
    pub channel: PathBuf,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub r1: f64,
    #[arg(long, default_value_t = 0.2, allow_negative_numbers = true)]
    pub r2: f64,
    /// Overrides `--r1` with an explicit message count.
    #[arg(long)]
    pub m1: Option<u64>,
    #[arg(long)]
    pub m2: Option<u64>,
    #[arg(long, default_value_t = 120)]
    pub n: usize,
    #[arg(long, default_value_t = 0.25)]
    pub gamma: f64,
    #[arg(long, default_value_t = 10_000)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = RuleArg::Threshold)]
    pub rule: RuleArg,
    #[arg(long = "delta-t", default_value_t = macfb::sim::TestRule::DEFAULT_DELTA_T)]
    pub delta_t: f64,
    #[arg(long, value_enum, default_value_t = ModeArg::Genie)]
    pub mode: ModeArg,
    /// Data-stage error probability in genie mode.
    #[arg(long, default_value_t = 0.01)]
    pub zeta: f64,
    #[arg(long = "max-blocks", default_value_t = macfb::sim::DEFAULT_MAX_BLOCKS)]
    pub max_blocks: usize,
    /// Confirmation type as a point mass `x1,x2,z1,z2`; default is the
    /// optimizer of the lower-bound constant.
    #[arg(long)]
    pub quad: Option<String>,
    /// Importance samples per alternative; 0 reports the direct estimate.
    #[arg(long = "is-samples", default_value_t = 0)]
    pub is_samples: usize,
    /// Tilt toward the null law in importance sampling, in [0, 1].
    #[arg(long, default_value_t = 1.0)]
    pub tilt: f64,
}

#[derive(Debug, Args)]
pub struct SimulateArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Key-value records (trial statistics, predictions); stderr when absent.
    #[arg(long)]
    pub record: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SweepKind {
    Bounds,
    Simulate,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    #[command(flatten)]
    pub scheme: SchemeArgs,
    /// `name=v1,v2,...` with name in n, gamma, r1, r2, p; repeatable.
    #[arg(long)]
    pub axis: Vec<String>,
    #[arg(long, value_enum, default_value_t = SweepKind::Bounds)]
    pub kind: SweepKind,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

fn main() -> ExitCode {
    // Usage errors share exit code 1 with other input errors; 2 is reserved
    // for rates outside the region.
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run::run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

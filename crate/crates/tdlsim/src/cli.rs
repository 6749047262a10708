//! Command-line surface. All flags are long-form.

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

/// Simulator and analysis toolkit for tapped-delay-line TDCs.
#[derive(Debug, Parser)]
#[command(name = "tdlsim", version, about, max_term_width = 100)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Run a code density test and write the code histogram.
    Density(DensityArgs),
    /// Sweep time intervals through a calibrated system.
    Interval(IntervalArgs),
    /// Build a calibration (bin table, optional compensation) from a
    /// histogram file.
    Calibrate(CalibrateArgs),
    /// Evaluate the analytic jitter budget from a JSON description.
    Budget(BudgetArgs),
    /// Fit per-element and LUT jitter from ring-oscillator measurements.
    RoFit(RoFitArgs),
    /// Run several architectures over the same line and summarize each.
    Compare(CompareArgs),
    /// Draw the configured line and dump its tap profile.
    Profile(ProfileArgs),
}

#[derive(Debug, Args)]
pub struct DensityArgs {
    /// TOML system description.
    #[arg(long)]
    pub config: PathBuf,
    /// Shots to fire.
    #[arg(long)]
    pub samples: u64,
    /// Run seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output histogram CSV (trimmed to the occupied code span).
    #[arg(long)]
    pub histogram: PathBuf,
    /// Optional linearity report JSON for the trimmed histogram.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct IntervalArgs {
    /// TOML system description.
    #[arg(long)]
    pub config: PathBuf,
    /// Calibration JSON produced by `calibrate`.
    #[arg(long)]
    pub calibration: PathBuf,
    /// Run seed.
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// First true interval, ps (default: config, else the phase window
    /// start).
    #[arg(long)]
    pub start: Option<f64>,
    /// Interval increment, ps (default: config, else 9.41).
    #[arg(long)]
    pub step: Option<f64>,
    /// Number of intervals (default: config, else one phase window's
    /// worth of steps).
    #[arg(long)]
    pub steps: Option<usize>,
    /// Shots per interval (default: config, else 50000).
    #[arg(long)]
    pub reps: Option<u64>,
    /// Output CSV, one row per interval.
    #[arg(long)]
    pub output: PathBuf,
    /// Optional full result JSON.
    #[arg(long)]
    pub json: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CalibrateArgs {
    /// Histogram CSV produced by `density` (or hardware dumps in the same
    /// format).
    #[arg(long)]
    pub histogram: PathBuf,
    /// Output calibration JSON.
    #[arg(long)]
    pub output: PathBuf,
    /// Attach a bin-count formatting map (main/compensation targets).
    #[arg(long)]
    pub compensate: bool,
    /// Merge adjacent code pairs before building the table.
    #[arg(long)]
    pub bin_pairs: bool,
}

#[derive(Debug, Args)]
pub struct BudgetArgs {
    /// Budget description JSON.
    #[arg(long)]
    pub input: PathBuf,
    /// Output report JSON (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct RoFitArgs {
    /// Ring-oscillator CSV: `elements,sigma_ro` rows.
    #[arg(long)]
    pub input: PathBuf,
    /// Output fit JSON (stdout when omitted).
    #[arg(long)]
    pub output: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct CompareArgs {
    /// TOML system description; the launcher section is required when any
    /// requested variant uses one.
    #[arg(long)]
    pub config: PathBuf,
    /// Shots per variant.
    #[arg(long)]
    pub samples: u64,
    /// Run seed (shared by every variant).
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Comma-separated variants to run (default: all five).
    #[arg(long, value_delimiter = ',')]
    pub variants: Option<Vec<String>>,
    /// Output summary JSON.
    #[arg(long)]
    pub output: PathBuf,
}

#[derive(Debug, Args)]
pub struct ProfileArgs {
    /// TOML system description.
    #[arg(long)]
    pub config: PathBuf,
    /// Output CSV: `tap_index,rising_cum,falling_cum`.
    #[arg(long)]
    pub output: PathBuf,
}

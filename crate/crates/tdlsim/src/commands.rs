//! Subcommand implementations and the error/exit-code model.
//!
//! Configuration problems (bad files, bad flags, inconsistent systems)
//! exit 2; runtime failures (I/O while writing, degenerate data) exit 1.
//! Errors print as a single JSON object on stderr.

use std::str::FromStr;

use tdlsim_core::{
    boundaries, bin_pairs, build_compensation, ro_extract, Calibration, JitterBudget,
    PreparedTdc, TdcSystem, Variant,
};

use crate::cli::{
    BudgetArgs, CalibrateArgs, Cli, Command, CompareArgs, DensityArgs, IntervalArgs,
    ProfileArgs, RoFitArgs,
};
use crate::config::{self, IntervalDefaults};
use crate::files::{self, HistogramFile};
use crate::parallel;

/// A failed invocation, split by who has to fix it.
#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// The inputs are wrong: config file, CLI flags, data files,
    /// environment.
    #[error("{0}")]
    Config(String),
    /// The inputs were fine but the run could not finish.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    /// Process exit code: 2 for configuration problems, 1 otherwise.
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => 2,
            CliError::Runtime(_) => 1,
        }
    }

    /// Machine-readable category for the stderr diagnostic.
    pub fn kind(&self) -> &'static str {
        match self {
            CliError::Config(_) => "config",
            CliError::Runtime(_) => "runtime",
        }
    }
}

fn config_err(e: impl std::fmt::Display) -> CliError {
    CliError::Config(e.to_string())
}

fn runtime_err(e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(e.to_string())
}

fn prepare(system: &TdcSystem) -> Result<PreparedTdc, CliError> {
    system.prepare().map_err(config_err)
}

/// Runs one parsed invocation.
pub fn run(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Density(args) => density(args),
        Command::Interval(args) => interval(args),
        Command::Calibrate(args) => calibrate(args),
        Command::Budget(args) => budget(args),
        Command::RoFit(args) => ro_fit(args),
        Command::Compare(args) => compare(args),
        Command::Profile(args) => profile(args),
    }
}

fn density(args: DensityArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    let tdc = prepare(&cfg.system)?;
    if args.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    let threads = parallel::thread_count()?;
    let run = parallel::density_run(&tdc, args.samples, args.seed, threads)?;
    let (hist, first_code) = run.trimmed().map_err(runtime_err)?;
    let file = HistogramFile {
        hist,
        first_code,
        window_start: Some(tdc.window().start),
    };
    files::write_histogram(&args.histogram, &file, run.samples, run.fault_count)?;
    if let Some(report_path) = &args.report {
        let report = tdlsim_core::report(&file.hist).map_err(runtime_err)?;
        files::write_json(report_path, &report)?;
    }
    Ok(())
}

fn calibrate(args: CalibrateArgs) -> Result<(), CliError> {
    let file = files::read_histogram(&args.histogram)?;
    let hist = if args.bin_pairs {
        bin_pairs(&file.hist).map_err(config_err)?.hist
    } else {
        file.hist
    };
    let table = boundaries(&hist).map_err(config_err)?;
    let compensation = args.compensate.then(|| build_compensation(&table));
    let cal = Calibration {
        window_start: file.window_start.unwrap_or(0.0),
        code_offset: file.first_code,
        table,
        compensation,
        binned: args.bin_pairs,
    };
    files::write_json(&args.output, &cal)
}

fn interval(args: IntervalArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    let tdc = prepare(&cfg.system)?;
    let cal = files::read_calibration(&args.calibration)?;
    let overrides = IntervalDefaults {
        start: args.start,
        step: args.step,
        steps: args.steps,
        reps: args.reps,
    };
    let settings = config::resolve_interval(&tdc, cfg.interval, overrides)?;
    let threads = parallel::thread_count()?;
    let result = parallel::interval_run(&tdc, &cal, &settings, args.seed, threads)?;
    files::write_interval_csv(&args.output, &result)?;
    if let Some(json_path) = &args.json {
        files::write_json(json_path, &result)?;
    }
    Ok(())
}

fn budget(args: BudgetArgs) -> Result<(), CliError> {
    let b: JitterBudget = files::read_json(&args.input)?;
    let report = tdlsim_core::budget(&b).map_err(config_err)?;
    match &args.output {
        Some(path) => files::write_json(path, &report),
        None => {
            println!("{}", files::to_json_string(&report)?);
            Ok(())
        }
    }
}

fn ro_fit(args: RoFitArgs) -> Result<(), CliError> {
    let points = files::read_ro_points(&args.input)?;
    let fit = ro_extract(&points).map_err(config_err)?;
    match &args.output {
        Some(path) => files::write_json(path, &fit),
        None => {
            println!("{}", files::to_json_string(&fit)?);
            Ok(())
        }
    }
}

fn compare(args: CompareArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    if args.samples == 0 {
        return Err(CliError::Config("samples must be positive".into()));
    }
    let variants: Vec<Variant> = match &args.variants {
        None => Variant::ALL.to_vec(),
        Some(names) => names
            .iter()
            .map(|n| Variant::from_str(n.trim()).map_err(config_err))
            .collect::<Result<_, _>>()?,
    };
    let summaries =
        tdlsim_core::compare_variants(&cfg.system, &variants, args.samples, args.seed)
            .map_err(config_err)?;
    files::write_json(&args.output, &summaries)
}

fn profile(args: ProfileArgs) -> Result<(), CliError> {
    let cfg = config::load(&args.config)?;
    let tdc = prepare(&cfg.system)?;
    files::write_profile(&args.output, tdc.profile())
}

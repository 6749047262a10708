//! Behavioral simulation and analysis for tapped-delay-line (TDL)
//! time-to-digital converters.
//!
//! The crate models the measurement chain of an FPGA-style TDC at the level
//! of tap arrival times rather than gates: a hit edge races down a chain of
//! carry elements, a clock edge freezes the thermometer state of the chain,
//! and an encoder turns the captured word into a fine timestamp. Everything
//! downstream of the raw code (bin calibration, compensation, linearity
//! metrics, jitter budgets) operates on histograms and is usable against
//! real hardware dumps as well as simulated ones.
//!
//! Module map:
//!
//! - [`delay_line`]: tap delay profiles (mismatch, skew steps, dual
//!   sampling, per-edge speed ratios) and the sampling process that turns
//!   edges plus noise into captured words.
//! - [`wave_union`]: the negative-pulse launcher that converts one hit into
//!   a falling and a rising edge, and the combined-resolution arithmetic.
//! - [`encoder`]: bubble-tolerant sub-TDL thermometer encoding
//!   (decompose, thermometer-to-one-hot, one-hot-to-binary).
//! - [`calibration`]: code density histograms, bin boundary tables,
//!   bin-count formatting (compensation), and pair binning.
//! - [`linearity`]: DNL/INL, equivalent bin width, and summary reports.
//! - [`uncertainty`]: analytic single-shot and system jitter budgets plus
//!   the ring-oscillator mismatch-jitter fit.
//! - [`experiment`]: end-to-end simulated runs (code density tests and
//!   time-interval sweeps) with deterministic shard-level seeding.
//!
//! All times are in picoseconds unless a doc comment says otherwise.
//!
//! The crate is `no_std`-compatible (requires `alloc`); the default `std`
//! feature only switches float intrinsics and enables the optional serde
//! impls of downstream std builds.

#![cfg_attr(not(feature = "std"), no_std)]
#![warn(missing_docs)]

extern crate alloc;

pub mod calibration;
pub mod delay_line;
pub mod encoder;
pub mod error;
pub mod experiment;
pub mod linearity;
mod math;
pub mod uncertainty;
pub mod wave_union;

pub use calibration::{
    apply_compensation, bin_pairs, boundaries, build_compensation, code_to_time, BinTargets,
    CalTable, CompensationMap, DensityHistogram, PairedHistogram,
};
pub use delay_line::{
    build_profile, CapturedWord, DelayLineConfig, Edge, Polarity, Sampler, SkewStep, TapProfile,
};
pub use encoder::{decompose, encode, oh2bin, tm2oh, EncodeFault, FineCode, OneHot, SubTdlLayout};
pub use error::{Error, Result};
pub use experiment::{
    code_density_run, compare_variants, density_shard, ground_truth_calibration, interval_shard,
    rms_resolution, shard_layout, shard_seed, time_interval_run, Calibration, DensityRun,
    IntervalAccum, IntervalResult, IntervalRow, IntervalSettings, PhaseWindow, PreparedTdc,
    TdcSystem, Variant, VariantSummary, SHARD_SHOTS,
};
pub use linearity::{dnl, eq_width_stats, inl, report, EqWidthStats, LinearityReport};
pub use uncertainty::{
    budget, budget_measured, expected_sigma_dl, ro_extract, sigma_wu, JitterBudget, RoFit, RoPoint,
    UncertaintyReport,
};
pub use wave_union::{launch, wu_lsb, LauncherConfig, WaveUnionSignal, WuResolution};

/// The RNG used by every stochastic routine in the crate.
///
/// ChaCha8 is seedable, portable across platforms, and fast enough for
/// multi-million-shot Monte-Carlo runs, which makes simulated experiments
/// bit-reproducible from a `u64` seed.
pub type SimRng = rand_chacha::ChaCha8Rng;

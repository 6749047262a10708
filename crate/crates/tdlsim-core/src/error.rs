//! Crate-wide error type.

use alloc::string::String;

/// Shorthand for results carrying [`Error`].
pub type Result<T> = core::result::Result<T, Error>;

/// Errors raised by configuration validation and analysis entry points.
///
/// Per-shot decode problems are not errors; they are counted as faults by
/// the run loops and reported as [`encoder::EncodeFault`](crate::encoder::EncodeFault)
/// where a single word is decoded directly.
#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    /// A configuration value is out of its legal range.
    #[error("invalid config: {0}")]
    InvalidConfig(String),
    /// A drawn or configured delay profile has a cumulative tap position
    /// that moves backwards.
    #[error("delay profile not monotone at tap {tap} ({polarity} edge)")]
    NonMonotoneProfile {
        /// Index of the offending tap.
        tap: usize,
        /// `"rising"` or `"falling"`.
        polarity: &'static str,
    },
    /// A captured word does not match the tap count the layout expects.
    #[error("word length {got} does not match layout tap count {expected}")]
    LengthMismatch {
        /// Actual word length.
        got: usize,
        /// Tap count implied by the layout.
        expected: usize,
    },
    /// A histogram or sample list was empty where data is required.
    #[error("empty input: {0}")]
    EmptyInput(&'static str),
    /// A code index fell outside a table or histogram.
    #[error("code {code} out of range ({len} bins)")]
    CodeOutOfRange {
        /// Offending code.
        code: usize,
        /// Number of bins available.
        len: usize,
    },
    /// Two containers that must describe the same code space disagree.
    #[error("size mismatch: {context} ({got} vs {expected})")]
    SizeMismatch {
        /// What was being compared.
        context: &'static str,
        /// Actual length.
        got: usize,
        /// Expected length.
        expected: usize,
    },
    /// The wave-union launcher was asked to fire while disabled.
    #[error("wave-union launcher is disabled")]
    LauncherDisabled,
    /// A jitter budget is missing a component required by the requested
    /// composition.
    #[error("jitter budget missing component {0}")]
    MissingComponent(&'static str),
    /// The ring-oscillator fit needs at least two distinct chain lengths.
    #[error("ring-oscillator fit needs two or more distinct chain lengths")]
    DegenerateFit,
    /// A time-interval run was requested without a calibration.
    #[error("time-interval runs require a calibration table")]
    MissingCalibration,
}

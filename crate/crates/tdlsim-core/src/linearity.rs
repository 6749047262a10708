//! Differential and integral nonlinearity, and the equivalent bin width.
//!
//! DNL compares each code's hit count to the count a perfectly uniform
//! converter would collect; INL is its running sum, the displacement of
//! each bin boundary in LSB. The equivalent bin width summarizes a
//! non-uniform bin population by the single uniform width with the same
//! quantization variance: wide bins contribute with the cube of their
//! width, so a few bad bins dominate the average resolution.

use alloc::vec::Vec;

use crate::calibration::DensityHistogram;
use crate::error::{Error, Result};
use crate::math;

/// DNL at or below this value flags a bin as ultra-small: effectively
/// unusable, though only exactly -1 (a zero-count bin) is a missing code.
pub const ULTRA_SMALL_DNL: f64 = -0.90;

/// Per-code differential nonlinearity in LSB.
///
/// `dnl[i] = counts[i] / (total / n) - 1`: 0 for a perfectly sized bin,
/// exactly -1 for a code that never fired, positive for wide bins.
pub fn dnl(hist: &DensityHistogram) -> Result<Vec<f64>> {
    let total = hist.total();
    if total == 0 {
        return Err(Error::EmptyInput("histogram is all zeros"));
    }
    let scale = hist.n_codes() as f64 / total as f64;
    Ok(hist.counts.iter().map(|c| *c as f64 * scale - 1.0).collect())
}

/// Integral nonlinearity: inclusive running sum of the DNL, in LSB.
/// `inl[i]` is the displacement of the boundary above code `i`.
pub fn inl(dnl: &[f64]) -> Vec<f64> {
    let mut acc = 0.0;
    dnl.iter()
        .map(|d| {
            acc += d;
            acc
        })
        .collect()
}

/// Equivalent uniform bin statistics for a set of measured bin widths.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EqWidthStats {
    /// Width of the uniform bin with the same quantization variance, ps.
    pub w_eq: f64,
    /// RMS quantization error of the measured bins, ps.
    pub sigma_eq: f64,
}

/// Computes the equivalent bin width and RMS quantization error.
///
/// Each bin contributes variance `w^2/12` weighted by the probability
/// `w/total` of landing in it, so `sigma_eq^2 = sum(w^3) / (12 * total)`
/// and `w_eq = sigma_eq * sqrt(12)` by definition (the returned pair
/// satisfies that identity bit-for-bit).
pub fn eq_width_stats(widths: &[f64]) -> Result<EqWidthStats> {
    if widths.is_empty() {
        return Err(Error::EmptyInput("bin widths"));
    }
    if widths.iter().any(|w| !(*w >= 0.0)) {
        return Err(Error::InvalidConfig("bin widths must be non-negative".into()));
    }
    let total: f64 = widths.iter().sum();
    if !(total > 0.0) {
        return Err(Error::InvalidConfig("total width must be positive".into()));
    }
    let cubes: f64 = widths.iter().map(|w| w * w * w).sum();
    let sigma_eq = math::sqrt(cubes / (12.0 * total));
    Ok(EqWidthStats { w_eq: sigma_eq * math::sqrt(12.0), sigma_eq })
}

/// Full linearity summary of one histogram.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LinearityReport {
    /// Per-code DNL, LSB.
    pub dnl: Vec<f64>,
    /// Per-code INL, LSB.
    pub inl: Vec<f64>,
    /// Smallest DNL.
    pub dnl_min: f64,
    /// Largest DNL.
    pub dnl_max: f64,
    /// DNL peak-to-peak span.
    pub dnl_pkpk: f64,
    /// Population std dev of the DNL.
    pub sigma_dnl: f64,
    /// Smallest INL.
    pub inl_min: f64,
    /// Largest INL.
    pub inl_max: f64,
    /// INL peak-to-peak span.
    pub inl_pkpk: f64,
    /// Population std dev of the INL.
    pub sigma_inl: f64,
    /// Equivalent uniform bin width, ps.
    pub w_eq: f64,
    /// RMS quantization error, ps.
    pub sigma_eq: f64,
    /// Mean bin width (range / codes), ps.
    pub lsb: f64,
    /// Codes that never fired (DNL exactly -1).
    pub zero_bins: usize,
    /// Codes at or below [`ULTRA_SMALL_DNL`], zero bins included.
    pub ultra_small_bins: usize,
}

fn min_max(values: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for v in values {
        lo = lo.min(*v);
        hi = hi.max(*v);
    }
    (lo, hi)
}

fn population_std(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean: f64 = values.iter().sum::<f64>() / n;
    let var: f64 = values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / n;
    math::sqrt(var)
}

/// Builds the full linearity report for a histogram.
pub fn report(hist: &DensityHistogram) -> Result<LinearityReport> {
    let dnl_values = dnl(hist)?;
    let inl_values = inl(&dnl_values);
    let (dnl_min, dnl_max) = min_max(&dnl_values);
    let (inl_min, inl_max) = min_max(&inl_values);
    let eq = eq_width_stats(&hist.widths()?)?;
    let zero_bins = hist.counts.iter().filter(|c| **c == 0).count();
    let ultra_small_bins = dnl_values.iter().filter(|d| **d <= ULTRA_SMALL_DNL).count();
    Ok(LinearityReport {
        dnl_min,
        dnl_max,
        dnl_pkpk: dnl_max - dnl_min,
        sigma_dnl: population_std(&dnl_values),
        inl_min,
        inl_max,
        inl_pkpk: inl_max - inl_min,
        sigma_inl: population_std(&inl_values),
        w_eq: eq.w_eq,
        sigma_eq: eq.sigma_eq,
        lsb: hist.measurement_range / hist.n_codes() as f64,
        zero_bins,
        ultra_small_bins,
        dnl: dnl_values,
        inl: inl_values,
    })
}

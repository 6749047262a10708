//! Negative-pulse wave-union launcher.
//!
//! Instead of feeding the hit edge straight into the delay line, a
//! launcher converts it into a short negative pulse: a falling edge,
//! then a rising edge `pulse_width` later. Both edges are captured by the
//! same clock, so one hit yields two tap positions whose combined code
//! grid is finer than either edge alone. The combined bin width follows
//! from the per-edge bin widths as a parallel-resistor style combination:
//! `lsb_wu = lsb_r * lsb_f / (lsb_r + lsb_f)`, which is half the bin width
//! for matched edges and approaches the faster edge's width when the
//! other is much slower.
//!
//! The launcher itself is a little logic chain, so it adds jitter: one
//! draw per shot with std dev `sqrt(elements * sigma_cy^2 + sigma_lut^2)`
//! shifts the whole pulse. The pulse width is exact unless a separate
//! width jitter is configured.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::math;
use crate::SimRng;

/// Configuration of the pulse launcher.
#[derive(Debug, Clone, PartialEq)]
pub struct LauncherConfig {
    /// The launcher is present and fires on every hit.
    pub enabled: bool,
    /// Pulse width, ps. `None` asks the experiment layer to default it to
    /// half the rising-edge conversion range of the line it feeds.
    pub pulse_width: Option<f64>,
    /// LUT-path jitter contribution of the launcher, ps.
    pub sigma_lut: f64,
    /// Number of carry elements inside the launcher chain.
    pub elements: usize,
    /// Std dev of an optional per-shot pulse-width jitter, ps.
    pub width_jitter_sigma: f64,
}

impl Default for LauncherConfig {
    fn default() -> Self {
        LauncherConfig {
            enabled: false,
            pulse_width: None,
            sigma_lut: 0.0,
            elements: 8,
            width_jitter_sigma: 0.0,
        }
    }
}

impl LauncherConfig {
    /// An enabled launcher with an explicit pulse width.
    pub fn with_pulse_width(pulse_width: f64) -> Self {
        LauncherConfig { enabled: true, pulse_width: Some(pulse_width), ..Self::default() }
    }

    /// Checks ranges; a zero or negative pulse width is rejected because
    /// the falling edge must stay ahead of the rising edge.
    pub fn validate(&self) -> Result<()> {
        if let Some(pw) = self.pulse_width {
            if !(pw > 0.0) {
                return Err(Error::InvalidConfig("pulse_width must be positive".into()));
            }
        }
        if !(self.sigma_lut >= 0.0) {
            return Err(Error::InvalidConfig("sigma_lut must be non-negative".into()));
        }
        if !(self.width_jitter_sigma >= 0.0) {
            return Err(Error::InvalidConfig(
                "width_jitter_sigma must be non-negative".into(),
            ));
        }
        Ok(())
    }

    /// Jitter added by the launcher chain to every shot, given the
    /// per-element jitter of the fabric it is built from, ps.
    pub fn jitter_sigma(&self, sigma_cy: f64) -> f64 {
        math::sqrt(self.elements as f64 * sigma_cy * sigma_cy + self.sigma_lut * self.sigma_lut)
    }
}

/// The two launch instants of one fired pulse (absolute times, ps).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WaveUnionSignal {
    /// When the falling edge enters the line.
    pub falling_launch: f64,
    /// When the rising edge enters the line (always later).
    pub rising_launch: f64,
}

impl WaveUnionSignal {
    /// The realized pulse width of this shot, ps.
    pub fn pulse_width(&self) -> f64 {
        self.rising_launch - self.falling_launch
    }
}

/// Fires the launcher for a hit arriving at `hit_time`.
///
/// Both launch instants share one jitter draw of std dev
/// [`LauncherConfig::jitter_sigma`], so the pulse width is preserved
/// exactly; with `width_jitter_sigma` set, a second draw perturbs only the
/// rising launch. Draw order per shot is fixed: common shift first, then
/// width. `sigma_cy` is the per-element jitter of the carry fabric, ps.
pub fn launch(
    hit_time: f64,
    config: &LauncherConfig,
    sigma_cy: f64,
    rng: &mut SimRng,
) -> Result<WaveUnionSignal> {
    if !config.enabled {
        return Err(Error::LauncherDisabled);
    }
    config.validate()?;
    let pw = config
        .pulse_width
        .ok_or_else(|| Error::InvalidConfig("pulse_width not resolved".into()))?;
    if !(pw > 0.0) {
        return Err(Error::InvalidConfig("pulse_width must be positive".into()));
    }

    let sigma = config.jitter_sigma(sigma_cy);
    let mut shift = 0.0;
    if sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        shift = z * sigma;
    }
    let mut width = pw;
    if config.width_jitter_sigma > 0.0 {
        let z: f64 = rng.sample(StandardNormal);
        width += z * config.width_jitter_sigma;
    }
    let falling_launch = hit_time + shift;
    Ok(WaveUnionSignal { falling_launch, rising_launch: falling_launch + width })
}

/// Combined bin width of two interleaved edge grids with per-edge bin
/// widths `lsb_rising` and `lsb_falling`, ps.
pub fn wu_lsb(lsb_rising: f64, lsb_falling: f64) -> Result<f64> {
    if !(lsb_rising > 0.0) || !(lsb_falling > 0.0) {
        return Err(Error::InvalidConfig("edge bin widths must be positive".into()));
    }
    Ok(lsb_rising * lsb_falling / (lsb_rising + lsb_falling))
}

/// Resolution bookkeeping for one wave-union configuration over a
/// conversion range `mr`: per-edge tap counts and bin widths plus the
/// combined values.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct WuResolution {
    /// Conversion range, ps.
    pub mr: f64,
    /// Taps the rising edge uses across `mr`.
    pub n_rising: usize,
    /// Taps the falling edge uses across `mr`.
    pub n_falling: usize,
    /// Combined number of codes across `mr`.
    pub n_wu: usize,
    /// Rising-edge mean bin width, ps.
    pub lsb_rising: f64,
    /// Falling-edge mean bin width, ps.
    pub lsb_falling: f64,
    /// Combined mean bin width, ps.
    pub lsb_wu: f64,
}

impl WuResolution {
    /// Derives the combined resolution from per-edge tap counts over a
    /// shared conversion range.
    pub fn from_counts(mr: f64, n_rising: usize, n_falling: usize) -> Result<Self> {
        if !(mr > 0.0) {
            return Err(Error::InvalidConfig("measurement range must be positive".into()));
        }
        if n_rising == 0 || n_falling == 0 {
            return Err(Error::InvalidConfig("edge tap counts must be positive".into()));
        }
        let lsb_rising = mr / n_rising as f64;
        let lsb_falling = mr / n_falling as f64;
        let n_wu = n_rising + n_falling;
        Ok(WuResolution {
            mr,
            n_rising,
            n_falling,
            n_wu,
            lsb_rising,
            lsb_falling,
            lsb_wu: mr / n_wu as f64,
        })
    }
}

//! Tap delay profiles and the process of capturing a hit edge.
//!
//! A tapped delay line is a chain of carry elements. An arriving edge
//! ripples through the chain while a clock edge freezes one flip-flop per
//! tap; the captured word records which taps the edge had already passed.
//! The model works in cumulative arrival times: tap `i` fires for an edge
//! that has been in flight for at least `cum[i]` picoseconds.
//!
//! Three noise processes are modeled, all per shot:
//!
//! - static per-element width mismatch, drawn once when the profile is
//!   built (this is the nonlinearity calibration has to fix),
//! - per-element propagation jitter, one draw per element per shot shared
//!   by both edge polarities of the same shot,
//! - per-tap sampling-instant skew ("bubble" noise), a static per-tap
//!   offset plus an optional clipped Gaussian per shot, which is what
//!   produces non-thermometer words.

use alloc::{vec, vec::Vec};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::error::{Error, Result};
use crate::SimRng;

/// Edge polarity of a signal transition traveling down the line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum Polarity {
    /// Low-to-high transition.
    Rising,
    /// High-to-low transition.
    Falling,
}

impl Polarity {
    /// Lowercase name, for error messages and file formats.
    pub fn as_str(self) -> &'static str {
        match self {
            Polarity::Rising => "rising",
            Polarity::Falling => "falling",
        }
    }
}

/// One edge in flight: its polarity and how long it has been traveling
/// when the sampling clock fires.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    /// Transition direction.
    pub polarity: Polarity,
    /// Time in flight at the sampling instant, ps. May be negative for an
    /// edge that has not entered the line yet.
    pub elapsed: f64,
}

impl Edge {
    /// A rising edge that has traveled for `elapsed` ps.
    pub fn rising(elapsed: f64) -> Self {
        Edge { polarity: Polarity::Rising, elapsed }
    }

    /// A falling edge that has traveled for `elapsed` ps.
    pub fn falling(elapsed: f64) -> Self {
        Edge { polarity: Polarity::Falling, elapsed }
    }
}

/// Extra routing delay inserted in front of one carry element.
///
/// Clock-region crossings and LAB boundaries show up as isolated wide bins;
/// a skew step reproduces that by widening a single element.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SkewStep {
    /// Element the delay is added to (tap index for single sampling).
    pub tap_index: usize,
    /// Additional delay, ps.
    pub extra_delay: f64,
}

/// Static description of a delay line before any profile is drawn.
#[derive(Debug, Clone, PartialEq)]
pub struct DelayLineConfig {
    /// Number of 8-element carry blocks chained together.
    pub num_carry8: usize,
    /// Capture two flip-flops per element (doubles the tap count).
    pub dual_sampling: bool,
    /// Nominal per-element delay, ps.
    pub nominal_element_delay: f64,
    /// Std dev of the static per-element width mismatch, ps. Draws are
    /// truncated at zero, so extreme draws become zero-width elements.
    pub mismatch_sigma: f64,
    /// Offset of the secondary tap behind each primary tap under dual
    /// sampling, ps. `None` means half the nominal element delay.
    pub s_tap_offset: Option<f64>,
    /// Localized extra delays, e.g. clock-region crossings.
    pub skew_steps: Vec<SkewStep>,
    /// Global ratio of falling-edge to rising-edge element delay.
    pub falling_speed_ratio: f64,
    /// Per-element override of `falling_speed_ratio`; must have one entry
    /// per element when present.
    pub falling_ratio_per_element: Option<Vec<f64>>,
    /// Std dev of the per-shot, per-tap sampling-instant skew, ps.
    pub bubble_window_sigma: f64,
    /// Hard bound on the per-shot sampling skew, ps. Draws are clamped to
    /// this magnitude, which bounds how far a bubble can sit from the true
    /// transition. `None` leaves the Gaussian unbounded.
    pub bubble_window_clip: Option<f64>,
    /// Std dev of a static per-tap sampling skew, drawn once per profile, ps.
    pub sample_offset_sigma: f64,
    /// Std dev of the per-shot per-element propagation jitter, ps.
    pub element_jitter_sigma: f64,
    /// Seed for the static draws (mismatch and sample offsets).
    pub seed: u64,
}

impl Default for DelayLineConfig {
    fn default() -> Self {
        DelayLineConfig {
            num_carry8: 1,
            dual_sampling: false,
            nominal_element_delay: 5.0,
            mismatch_sigma: 0.0,
            s_tap_offset: None,
            skew_steps: Vec::new(),
            falling_speed_ratio: 1.0,
            falling_ratio_per_element: None,
            bubble_window_sigma: 0.0,
            bubble_window_clip: None,
            sample_offset_sigma: 0.0,
            element_jitter_sigma: 0.0,
            seed: 0,
        }
    }
}

impl DelayLineConfig {
    /// Number of carry elements in the chain.
    pub fn num_elements(&self) -> usize {
        self.num_carry8 * 8
    }

    /// Number of captured taps (doubled under dual sampling).
    pub fn tap_count(&self) -> usize {
        if self.dual_sampling {
            self.num_elements() * 2
        } else {
            self.num_elements()
        }
    }

    fn validate(&self) -> Result<()> {
        fn err(msg: alloc::string::String) -> Result<()> {
            Err(Error::InvalidConfig(msg))
        }
        if self.num_carry8 == 0 {
            return err("num_carry8 must be at least 1".into());
        }
        if !(self.nominal_element_delay > 0.0) {
            return err("nominal_element_delay must be positive".into());
        }
        for (name, v) in [
            ("mismatch_sigma", self.mismatch_sigma),
            ("bubble_window_sigma", self.bubble_window_sigma),
            ("sample_offset_sigma", self.sample_offset_sigma),
            ("element_jitter_sigma", self.element_jitter_sigma),
        ] {
            if !(v >= 0.0) {
                return err(alloc::format!("{name} must be non-negative"));
            }
        }
        if !(self.falling_speed_ratio > 0.0) {
            return err("falling_speed_ratio must be positive".into());
        }
        if let Some(s) = self.s_tap_offset {
            if !(s > 0.0) {
                return err("s_tap_offset must be positive".into());
            }
        }
        if let Some(c) = self.bubble_window_clip {
            if !(c >= 0.0) {
                return err("bubble_window_clip must be non-negative".into());
            }
        }
        if let Some(ratios) = &self.falling_ratio_per_element {
            if ratios.len() != self.num_elements() {
                return Err(Error::SizeMismatch {
                    context: "falling_ratio_per_element",
                    got: ratios.len(),
                    expected: self.num_elements(),
                });
            }
            if ratios.iter().any(|r| !(*r > 0.0)) {
                return err("falling_ratio_per_element entries must be positive".into());
            }
        }
        for step in &self.skew_steps {
            if step.tap_index >= self.num_elements() {
                return Err(Error::CodeOutOfRange {
                    code: step.tap_index,
                    len: self.num_elements(),
                });
            }
        }
        Ok(())
    }
}

/// A concrete drawn delay profile: cumulative tap arrival times for both
/// polarities plus the noise parameters used when sampling.
#[derive(Debug, Clone, PartialEq)]
pub struct TapProfile {
    rising_elem: Vec<f64>,
    fall_ratio: Vec<f64>,
    s_offset: f64,
    taps_per_element: usize,
    rising_cum: Vec<f64>,
    falling_cum: Vec<f64>,
    sample_offsets: Vec<f64>,
    bubble_sigma: f64,
    bubble_clip: f64,
    element_jitter_sigma: f64,
}

/// Draws the static per-element mismatch and per-tap sampling offsets from
/// `config.seed` and assembles the cumulative tap arrays.
///
/// The static draw order is fixed (element widths first, then sample
/// offsets), so a given seed always produces the same line. Fails if any
/// cumulative array would decrease, which happens when a skew step drives
/// an element width negative or the dual-sampling tap offset exceeds an
/// element width.
pub fn build_profile(config: &DelayLineConfig) -> Result<TapProfile> {
    config.validate()?;
    let n = config.num_elements();
    let mut rng = <SimRng as rand::SeedableRng>::seed_from_u64(config.seed);

    let mut rising_elem = vec![config.nominal_element_delay; n];
    if config.mismatch_sigma > 0.0 {
        for w in rising_elem.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *w = (*w + z * config.mismatch_sigma).max(0.0);
        }
    }
    for step in &config.skew_steps {
        rising_elem[step.tap_index] += step.extra_delay;
    }
    for (i, w) in rising_elem.iter().enumerate() {
        if *w < 0.0 {
            return Err(Error::NonMonotoneProfile { tap: i, polarity: "rising" });
        }
    }

    let fall_ratio = match &config.falling_ratio_per_element {
        Some(r) => r.clone(),
        None => vec![config.falling_speed_ratio; n],
    };

    let taps_per_element = if config.dual_sampling { 2 } else { 1 };
    let s_offset = if config.dual_sampling {
        config.s_tap_offset.unwrap_or(config.nominal_element_delay / 2.0)
    } else {
        0.0
    };

    let tap_count = n * taps_per_element;
    let mut sample_offsets = vec![0.0; tap_count];
    if config.sample_offset_sigma > 0.0 {
        for o in sample_offsets.iter_mut() {
            let z: f64 = rng.sample(StandardNormal);
            *o = z * config.sample_offset_sigma;
        }
    }

    let mut rising_cum = vec![0.0; tap_count];
    let mut falling_cum = vec![0.0; tap_count];
    write_positions(
        &rising_elem,
        &fall_ratio,
        s_offset,
        taps_per_element,
        &mut rising_cum,
        &mut falling_cum,
    );

    for (name, cum) in [("rising", &rising_cum), ("falling", &falling_cum)] {
        let mut prev = 0.0;
        for (i, c) in cum.iter().enumerate() {
            if *c < prev {
                return Err(Error::NonMonotoneProfile { tap: i, polarity: name });
            }
            prev = *c;
        }
    }

    Ok(TapProfile {
        rising_elem,
        fall_ratio,
        s_offset,
        taps_per_element,
        rising_cum,
        falling_cum,
        sample_offsets,
        bubble_sigma: config.bubble_window_sigma,
        bubble_clip: config.bubble_window_clip.unwrap_or(f64::INFINITY),
        element_jitter_sigma: config.element_jitter_sigma,
    })
}

/// Fills the per-tap cumulative arrays from per-element widths.
fn write_positions(
    rising_elem: &[f64],
    fall_ratio: &[f64],
    s_offset: f64,
    taps_per_element: usize,
    rising_cum: &mut [f64],
    falling_cum: &mut [f64],
) {
    let mut acc_r = 0.0;
    let mut acc_f = 0.0;
    for (i, w) in rising_elem.iter().enumerate() {
        acc_r += *w;
        acc_f += fall_ratio[i] * *w;
        if taps_per_element == 2 {
            rising_cum[2 * i] = acc_r;
            falling_cum[2 * i] = acc_f;
            rising_cum[2 * i + 1] = acc_r + s_offset;
            falling_cum[2 * i + 1] = acc_f + fall_ratio[i] * s_offset;
        } else {
            rising_cum[i] = acc_r;
            falling_cum[i] = acc_f;
        }
    }
}

impl TapProfile {
    /// Number of captured taps.
    pub fn tap_count(&self) -> usize {
        self.rising_cum.len()
    }

    /// Number of carry elements.
    pub fn num_elements(&self) -> usize {
        self.rising_elem.len()
    }

    /// Cumulative rising-edge arrival time per tap, ps.
    pub fn rising_cum(&self) -> &[f64] {
        &self.rising_cum
    }

    /// Cumulative falling-edge arrival time per tap, ps.
    pub fn falling_cum(&self) -> &[f64] {
        &self.falling_cum
    }

    /// Static per-tap sampling skew, ps.
    pub fn sample_offsets(&self) -> &[f64] {
        &self.sample_offsets
    }

    /// Cumulative arrival times for one polarity.
    pub fn cum(&self, polarity: Polarity) -> &[f64] {
        match polarity {
            Polarity::Rising => &self.rising_cum,
            Polarity::Falling => &self.falling_cum,
        }
    }

    /// Per-shot per-element propagation jitter std dev, ps.
    pub fn element_jitter_sigma(&self) -> f64 {
        self.element_jitter_sigma
    }

    /// Per-shot per-tap sampling skew std dev, ps.
    pub fn bubble_sigma(&self) -> f64 {
        self.bubble_sigma
    }

    /// First differences of the cumulative array: the width of each code
    /// bin, including the dead time before tap 0.
    pub fn bin_widths(&self, polarity: Polarity) -> Vec<f64> {
        let cum = self.cum(polarity);
        let mut widths = Vec::with_capacity(cum.len());
        let mut prev = 0.0;
        for c in cum {
            widths.push(c - prev);
            prev = *c;
        }
        widths
    }

    /// Total conversion range of the line for one polarity: the arrival
    /// time of the last tap, ps.
    pub fn measurement_range(&self, polarity: Polarity) -> f64 {
        *self.cum(polarity).last().expect("profile has at least 8 taps")
    }

    /// Number of taps a noiseless edge of `polarity` has passed after
    /// `elapsed` ps: the ideal captured code. An edge exactly at a tap
    /// boundary counts as having passed it. Saturates at the tap count.
    pub fn edge_position(&self, polarity: Polarity, elapsed: f64) -> usize {
        self.cum(polarity).partition_point(|c| *c <= elapsed)
    }

    /// One-off sampling convenience; run loops should reuse a [`Sampler`].
    pub fn sample(&self, edges: &[Edge], rng: &mut SimRng) -> CapturedWord {
        let mut sampler = Sampler::new(self);
        let mut word = CapturedWord::zeroed(self.tap_count());
        sampler.sample_into(edges, rng, &mut word);
        word
    }
}

/// The flip-flop states captured by one sampling clock: bit `i` is true
/// when tap `i` reads as "edge already passed".
///
/// With a single edge in flight the word is the plain edge-passed
/// thermometer regardless of polarity. With a falling/rising pair in
/// flight (wave union) bits record the captured signal level, so the word
/// reads high, low across the pulse, high again.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CapturedWord {
    bits: Vec<bool>,
}

impl CapturedWord {
    /// An all-zero word of `len` taps.
    pub fn zeroed(len: usize) -> Self {
        CapturedWord { bits: vec![false; len] }
    }

    /// Wraps raw bits as a captured word.
    pub fn from_bits(bits: Vec<bool>) -> Self {
        CapturedWord { bits }
    }

    /// Number of taps.
    pub fn len(&self) -> usize {
        self.bits.len()
    }

    /// True when the word has no taps.
    pub fn is_empty(&self) -> bool {
        self.bits.is_empty()
    }

    /// Raw bit slice.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Number of set bits.
    pub fn ones(&self) -> usize {
        self.bits.iter().filter(|b| **b).count()
    }

    /// True when the word is ones followed by zeros (no bubbles).
    pub fn is_thermometer(&self) -> bool {
        let boundary = self.bits.iter().position(|b| !*b).unwrap_or(self.bits.len());
        self.bits[boundary..].iter().all(|b| !*b)
    }

    fn set(&mut self, i: usize, v: bool) {
        self.bits[i] = v;
    }
}

/// Reusable sampling state for one profile: scratch buffers for the
/// per-shot perturbed tap positions, so the hot loop does not allocate.
pub struct Sampler<'a> {
    profile: &'a TapProfile,
    rise_pos: Vec<f64>,
    fall_pos: Vec<f64>,
}

impl<'a> Sampler<'a> {
    /// Builds a sampler whose scratch starts at the unperturbed positions.
    pub fn new(profile: &'a TapProfile) -> Self {
        Sampler {
            profile,
            rise_pos: profile.rising_cum.clone(),
            fall_pos: profile.falling_cum.clone(),
        }
    }

    /// Samples the line once and writes the captured word.
    ///
    /// `edges` holds the edges in flight: one edge, or a falling/rising
    /// pair for wave-union operation (at most one per polarity). Per-shot
    /// draws happen in a fixed order: element jitter first (one draw per
    /// element, shared by both polarities), then one sampling-skew draw
    /// per tap.
    pub fn sample_into(&mut self, edges: &[Edge], rng: &mut SimRng, word: &mut CapturedWord) {
        let profile = self.profile;
        let tap_count = profile.tap_count();
        assert_eq!(word.len(), tap_count, "word length must match tap count");
        assert!(!edges.is_empty() && edges.len() <= 2, "one or two edges in flight");

        let (mut rising, mut falling) = (None, None);
        for e in edges {
            match e.polarity {
                Polarity::Rising => {
                    assert!(rising.is_none(), "at most one rising edge");
                    rising = Some(e.elapsed);
                }
                Polarity::Falling => {
                    assert!(falling.is_none(), "at most one falling edge");
                    falling = Some(e.elapsed);
                }
            }
        }

        if profile.element_jitter_sigma > 0.0 {
            let sigma = profile.element_jitter_sigma;
            let mut acc_r = 0.0;
            let mut acc_f = 0.0;
            for (i, w) in profile.rising_elem.iter().enumerate() {
                let z: f64 = rng.sample(StandardNormal);
                let w_eff = (*w + z * sigma).max(0.0);
                acc_r += w_eff;
                acc_f += profile.fall_ratio[i] * w_eff;
                if profile.taps_per_element == 2 {
                    self.rise_pos[2 * i] = acc_r;
                    self.fall_pos[2 * i] = acc_f;
                    self.rise_pos[2 * i + 1] = acc_r + profile.s_offset;
                    self.fall_pos[2 * i + 1] = acc_f + profile.fall_ratio[i] * profile.s_offset;
                } else {
                    self.rise_pos[i] = acc_r;
                    self.fall_pos[i] = acc_f;
                }
            }
        }

        let bubbling = profile.bubble_sigma > 0.0;
        for i in 0..tap_count {
            let mut delta = profile.sample_offsets[i];
            if bubbling {
                let z: f64 = rng.sample(StandardNormal);
                let skew = z * profile.bubble_sigma;
                delta += skew.clamp(-profile.bubble_clip, profile.bubble_clip);
            }
            let bit = match (falling, rising) {
                (Some(ef), Some(er)) => {
                    let fall_passed = self.fall_pos[i] <= ef + delta;
                    let rise_passed = self.rise_pos[i] <= er + delta;
                    !(fall_passed && !rise_passed)
                }
                (Some(ef), None) => self.fall_pos[i] <= ef + delta,
                (None, Some(er)) => self.rise_pos[i] <= er + delta,
                (None, None) => unreachable!(),
            };
            word.set(i, bit);
        }
    }

    /// Allocating variant of [`sample_into`](Self::sample_into).
    pub fn sample(&mut self, edges: &[Edge], rng: &mut SimRng) -> CapturedWord {
        let mut word = CapturedWord::zeroed(self.profile.tap_count());
        self.sample_into(edges, rng, &mut word);
        word
    }
}

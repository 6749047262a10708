//! Bubble-tolerant thermometer encoding.
//!
//! Metastability makes the bits near the transition of a captured word
//! unreliable: a raw priority encoder can jump by many codes when a single
//! flip-flop resolves the wrong way. The sub-TDL scheme decomposes the
//! word by stride `S` into `S` interleaved sub-lines, converts each
//! sub-line thermometer to a one-hot vector, each one-hot to a binary
//! count, and sums the counts. A bubble displaced by fewer than `S` taps
//! lands in a different sub-line than the bit it swapped with, so every
//! sub-line stays a valid thermometer and the sum is unchanged.
//!
//! In wave-union mode each sub-line carries the level pattern of a
//! negative pulse (ones, zeros, ones). The rising count is the leading-one
//! run, the falling count is the index where the trailing-one run starts,
//! and each is recovered per sub-line through the same one-hot machinery.

use alloc::vec::Vec;

use crate::delay_line::CapturedWord;
use crate::error::{Error, Result};

/// How a captured word is split into interleaved sub-lines for encoding.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SubTdlLayout {
    /// Interleave stride: sub-line `j` reads taps `j, j+S, j+2S, ...`.
    /// A stride of 1 is a single plain thermometer encoder.
    pub stride: usize,
    /// Tap count of the words this layout encodes.
    pub tap_count: usize,
    /// Decode ones-zeros-ones pulse words instead of single thermometers.
    pub wu_mode: bool,
}

impl SubTdlLayout {
    /// A single-edge layout.
    pub fn new(stride: usize, tap_count: usize) -> Self {
        SubTdlLayout { stride, tap_count, wu_mode: false }
    }

    /// A wave-union (pulse) layout.
    pub fn wave_union(stride: usize, tap_count: usize) -> Self {
        SubTdlLayout { stride, tap_count, wu_mode: true }
    }

    /// Checks stride against the tap count.
    pub fn validate(&self) -> Result<()> {
        if self.stride == 0 || self.stride > self.tap_count {
            return Err(Error::InvalidConfig(alloc::format!(
                "stride {} must be in 1..={}",
                self.stride,
                self.tap_count
            )));
        }
        Ok(())
    }

    fn check_word(&self, word: &CapturedWord) -> Result<()> {
        if word.len() != self.tap_count {
            return Err(Error::LengthMismatch { got: word.len(), expected: self.tap_count });
        }
        self.validate()
    }

    /// Largest fine code this layout can produce plus one: the size of the
    /// code histogram.
    pub fn code_domain(&self) -> usize {
        if self.wu_mode {
            2 * self.tap_count + 1
        } else {
            self.tap_count + 1
        }
    }
}

/// A decode problem in one captured word. Faults are per-shot data, not
/// fatal errors; run loops count them and move on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, thiserror::Error)]
pub enum EncodeFault {
    /// A sub-line was not ones-then-zeros in single-edge mode.
    #[error("sub-line {sub_line} is not a thermometer")]
    NonThermometer {
        /// Index of the offending sub-line.
        sub_line: usize,
    },
    /// A sub-line was not ones-zeros-ones in wave-union mode: the pulse
    /// was too narrow to register on this sub-line, or bubbles shredded it.
    #[error("sub-line {sub_line} does not contain a single pulse")]
    NotOnePulse {
        /// Index of the offending sub-line.
        sub_line: usize,
    },
    /// A one-hot vector had no bit or more than one bit set.
    #[error("vector is not one-hot")]
    NotOneHot,
}

/// A one-hot transition marker over `len + 1` slots: bit `k` set means the
/// sub-line carried exactly `k` leading ones ("the edge sits between taps
/// `k-1` and `k`"); bit 0 is the no-taps-passed marker.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OneHot {
    bits: Vec<bool>,
}

impl OneHot {
    /// Raw slots.
    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    /// Builds directly from slots (for tests and file replay).
    pub fn from_bits(bits: Vec<bool>) -> Self {
        OneHot { bits }
    }
}

/// The encoded result of one captured word.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FineCode {
    /// Taps passed; in wave-union mode the sum of both edge positions.
    pub value: u32,
    /// Rising-edge taps passed (wave-union mode only).
    pub rising_part: Option<u32>,
    /// Falling-edge taps passed (wave-union mode only).
    pub falling_part: Option<u32>,
}

/// Splits a word into `stride` interleaved sub-lines; sub-line `j` holds
/// taps `j, j+S, j+2S, ...` in tap order.
pub fn decompose(word: &CapturedWord, layout: &SubTdlLayout) -> Result<Vec<CapturedWord>> {
    layout.check_word(word)?;
    let bits = word.bits();
    let mut subs = Vec::with_capacity(layout.stride);
    for j in 0..layout.stride {
        let sub: Vec<bool> = bits.iter().copied().skip(j).step_by(layout.stride).collect();
        subs.push(CapturedWord::from_bits(sub));
    }
    Ok(subs)
}

/// Converts a thermometer sub-line to its one-hot transition marker.
///
/// `[1,1,0]` becomes slot 2, the all-zeros word becomes slot 0, and the
/// all-ones word of length `L` becomes slot `L`. Anything with a one after
/// a zero is a bubble fault.
pub fn tm2oh(sub_word: &CapturedWord) -> core::result::Result<OneHot, EncodeFault> {
    let bits = sub_word.bits();
    let ones = bits.iter().position(|b| !*b).unwrap_or(bits.len());
    if bits[ones..].iter().any(|b| *b) {
        return Err(EncodeFault::NonThermometer { sub_line: 0 });
    }
    let mut out = alloc::vec![false; bits.len() + 1];
    out[ones] = true;
    Ok(OneHot { bits: out })
}

/// Index of the single set slot of a one-hot vector.
pub fn oh2bin(one_hot: &OneHot) -> core::result::Result<u32, EncodeFault> {
    let mut found = None;
    for (i, b) in one_hot.bits.iter().enumerate() {
        if *b {
            if found.is_some() {
                return Err(EncodeFault::NotOneHot);
            }
            found = Some(i as u32);
        }
    }
    found.ok_or(EncodeFault::NotOneHot)
}

/// Counts the leading ones of a thermometer sequence; `None` if a one
/// follows a zero (a bubble survived the interleave).
fn scan_thermometer(sub: impl Iterator<Item = bool>) -> Option<u32> {
    let mut ones = 0u32;
    let mut seen_zero = false;
    for bit in sub {
        if bit {
            if seen_zero {
                return None;
            }
            ones += 1;
        } else {
            seen_zero = true;
        }
    }
    Some(ones)
}

/// Decodes a ones-zeros-ones pulse sequence into (leading-one count,
/// start of the trailing-one run), i.e. (rising position, falling
/// position) in sub-line units. Saturation at either end is legal: a
/// leading count of 0 means the rising edge has not reached this
/// sub-line, a missing trailing run means the falling edge has run off
/// its end. `None` means the sequence did not hold a single clean pulse:
/// all ones (the pulse fell entirely between this sub-line's taps) or a
/// shredded pattern.
fn scan_pulse(sub: impl Iterator<Item = bool>) -> Option<(u32, u32)> {
    let mut pos = 0u32;
    let mut rise = None;
    let mut fall = None;
    for bit in sub {
        if bit {
            if rise.is_some() && fall.is_none() {
                fall = Some(pos);
            }
        } else {
            if fall.is_some() {
                return None;
            }
            if rise.is_none() {
                rise = Some(pos);
            }
        }
        pos += 1;
    }
    let a = rise?;
    Some((a, fall.unwrap_or(pos)))
}

/// Encodes a captured word through the sub-TDL pipeline: decompose by
/// stride, convert every sub-line (thermometer to one-hot to binary), and
/// sum the per-sub-line counts. The sub-lines are scanned in place rather
/// than materialized; this runs once per simulated shot.
///
/// For a clean thermometer word the value equals the number of set bits;
/// bubbles displaced by fewer than `stride` taps do not change the value.
/// Panics if the word length does not match the layout; decode problems
/// within a well-formed word come back as [`EncodeFault`]s.
pub fn encode(
    word: &CapturedWord,
    layout: &SubTdlLayout,
) -> core::result::Result<FineCode, EncodeFault> {
    layout
        .check_word(word)
        .expect("word length and stride must match the layout");
    let bits = word.bits();
    let stride = layout.stride;

    if layout.wu_mode {
        let mut rising = 0u32;
        let mut falling = 0u32;
        for j in 0..stride {
            let sub = bits.iter().copied().skip(j).step_by(stride);
            let (a, b) =
                scan_pulse(sub).ok_or(EncodeFault::NotOnePulse { sub_line: j })?;
            rising += a;
            falling += b;
        }
        Ok(FineCode {
            value: rising + falling,
            rising_part: Some(rising),
            falling_part: Some(falling),
        })
    } else {
        let mut value = 0u32;
        for j in 0..stride {
            let sub = bits.iter().copied().skip(j).step_by(stride);
            value +=
                scan_thermometer(sub).ok_or(EncodeFault::NonThermometer { sub_line: j })?;
        }
        Ok(FineCode { value, rising_part: None, falling_part: None })
    }
}

//! End-to-end simulated experiments: code density tests and time-interval
//! sweeps against a configured TDC.
//!
//! A run is deterministic given (configuration, sample count, seed). Work
//! is cut into fixed-size shards whose count depends only on the sample
//! count; shard `i` runs its own RNG stream seeded by a mix of the run
//! seed and `i`, and results merge in shard order. Callers may execute
//! shards on any number of threads and still reproduce the serial result
//! bit for bit.

use alloc::{vec, vec::Vec};

use rand::Rng;
use rand_distr::StandardNormal;

use crate::calibration::{CalTable, CompensationMap, DensityHistogram};
use crate::delay_line::{
    build_profile, CapturedWord, DelayLineConfig, Edge, Polarity, Sampler, TapProfile,
};
use crate::encoder::{encode, SubTdlLayout};
use crate::error::{Error, Result};
use crate::linearity::{report, LinearityReport};
use crate::math;
use crate::wave_union::{launch, LauncherConfig};
use crate::SimRng;

/// Converter architecture being exercised.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Variant {
    /// Single edge, one tap per element.
    Plain,
    /// Wave-union launcher, one tap per element.
    Wu,
    /// Single edge, dual sampling.
    Ds,
    /// Wave-union launcher over a dual-sampled line.
    Dswu,
    /// Dual-sampled wave union read through merged code pairs.
    BinnedDswu,
}

impl Variant {
    /// Every variant, in presentation order.
    pub const ALL: [Variant; 5] =
        [Variant::Plain, Variant::Wu, Variant::Ds, Variant::Dswu, Variant::BinnedDswu];

    /// This variant fires a wave-union launcher.
    pub fn uses_launcher(self) -> bool {
        matches!(self, Variant::Wu | Variant::Dswu | Variant::BinnedDswu)
    }

    /// This variant samples two taps per element.
    pub fn uses_dual_sampling(self) -> bool {
        matches!(self, Variant::Ds | Variant::Dswu | Variant::BinnedDswu)
    }

    /// Histograms are read through merged code pairs.
    pub fn is_binned(self) -> bool {
        matches!(self, Variant::BinnedDswu)
    }

    /// Kebab-case name used by configs and reports.
    pub fn as_str(self) -> &'static str {
        match self {
            Variant::Plain => "plain",
            Variant::Wu => "wu",
            Variant::Ds => "ds",
            Variant::Dswu => "dswu",
            Variant::BinnedDswu => "binned-dswu",
        }
    }
}

impl core::fmt::Display for Variant {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.write_str(self.as_str())
    }
}

impl core::str::FromStr for Variant {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "plain" => Ok(Variant::Plain),
            "wu" => Ok(Variant::Wu),
            "ds" => Ok(Variant::Ds),
            "dswu" => Ok(Variant::Dswu),
            "binned-dswu" => Ok(Variant::BinnedDswu),
            other => Err(Error::InvalidConfig(alloc::format!(
                "unknown variant {other:?} (plain, wu, ds, dswu, binned-dswu)"
            ))),
        }
    }
}

/// The hit-phase interval a run draws from or sweeps over, relative to the
/// sampling clock: a hit at phase `t` has been in flight `t` ps when the
/// clock fires.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PhaseWindow {
    /// Earliest phase, ps.
    pub start: f64,
    /// Window length, ps.
    pub length: f64,
}

impl PhaseWindow {
    /// One past the latest phase, ps.
    pub fn end(&self) -> f64 {
        self.start + self.length
    }
}

/// A complete TDC configuration: line, optional launcher, encoder stride,
/// clock jitter, and which architecture ties them together.
#[derive(Debug, Clone, PartialEq)]
pub struct TdcSystem {
    /// Delay-line description.
    pub delay: DelayLineConfig,
    /// Launcher description; required (and enabled) for wave-union
    /// variants, absent or disabled otherwise.
    pub launcher: Option<LauncherConfig>,
    /// Sub-TDL encoder stride.
    pub stride: usize,
    /// Sampling clock jitter, ps.
    pub sigma_clk: f64,
    /// Architecture.
    pub variant: Variant,
    /// Edge polarity fed to the line by single-edge variants.
    pub hit_polarity: Polarity,
    /// Phase window override; `None` derives the widest unambiguous
    /// window from the profile.
    pub phase_window: Option<PhaseWindow>,
}

impl TdcSystem {
    /// A system with no launcher, stride 1, no clock jitter, and derived
    /// phase window.
    pub fn new(delay: DelayLineConfig, variant: Variant) -> Self {
        TdcSystem {
            delay,
            launcher: None,
            stride: 1,
            sigma_clk: 0.0,
            variant,
            hit_polarity: Polarity::Rising,
            phase_window: None,
        }
    }

    /// Validates the configuration, draws the profile, resolves the
    /// launcher pulse width, and fixes the phase window.
    pub fn prepare(&self) -> Result<PreparedTdc> {
        if !(self.sigma_clk >= 0.0) {
            return Err(Error::InvalidConfig("sigma_clk must be non-negative".into()));
        }
        if self.delay.dual_sampling != self.variant.uses_dual_sampling() {
            return Err(Error::InvalidConfig(alloc::format!(
                "variant {} {} dual sampling",
                self.variant,
                if self.variant.uses_dual_sampling() { "requires" } else { "forbids" }
            )));
        }
        let wants_launcher = self.variant.uses_launcher();
        let enabled = self.launcher.as_ref().map(|l| l.enabled).unwrap_or(false);
        if wants_launcher != enabled {
            return Err(Error::InvalidConfig(alloc::format!(
                "variant {} {} an enabled launcher",
                self.variant,
                if wants_launcher { "requires" } else { "forbids" }
            )));
        }

        let profile = build_profile(&self.delay)?;
        let rise_mr = profile.measurement_range(Polarity::Rising);
        let fall_mr = profile.measurement_range(Polarity::Falling);

        let launcher = if wants_launcher {
            let mut l = self.launcher.clone().expect("checked above");
            l.validate()?;
            if l.pulse_width.is_none() {
                l.pulse_width = Some(rise_mr / 2.0);
            }
            let pw = l.pulse_width.expect("just resolved");
            // The rising edge chases the falling edge; if the falling
            // path falls behind by a full pulse width anywhere, the pulse
            // collapses inside the line and levels stop being
            // high-low-high.
            let max_gap = profile
                .falling_cum()
                .iter()
                .zip(profile.rising_cum())
                .map(|(f, r)| f - r)
                .fold(f64::NEG_INFINITY, f64::max);
            if max_gap >= pw {
                return Err(Error::InvalidConfig(alloc::format!(
                    "pulse width {pw} ps collapses inside the line (falling edge \
                     lags by up to {max_gap} ps)"
                )));
            }
            Some(l)
        } else {
            None
        };

        let layout = SubTdlLayout {
            stride: self.stride,
            tap_count: profile.tap_count(),
            wu_mode: wants_launcher,
        };
        layout.validate()?;

        let window = match self.phase_window {
            Some(w) => {
                if !(w.length > 0.0) || !w.start.is_finite() {
                    return Err(Error::InvalidConfig(
                        "phase window must have positive length".into(),
                    ));
                }
                w
            }
            None => match &launcher {
                Some(l) => {
                    let pw = l.pulse_width.expect("resolved above");
                    let length = (fall_mr - pw).min(rise_mr);
                    if !(length > 0.0) {
                        return Err(Error::InvalidConfig(
                            "pulse width leaves no usable phase window".into(),
                        ));
                    }
                    PhaseWindow { start: pw, length }
                }
                None => PhaseWindow {
                    start: 0.0,
                    length: match self.hit_polarity {
                        Polarity::Rising => rise_mr,
                        Polarity::Falling => fall_mr,
                    },
                },
            },
        };

        Ok(PreparedTdc {
            profile,
            layout,
            launcher,
            sigma_clk: self.sigma_clk,
            variant: self.variant,
            hit_polarity: self.hit_polarity,
            window,
        })
    }
}

/// A validated system with its profile drawn and window fixed; the
/// immutable input shared by all shards of a run.
#[derive(Debug, Clone, PartialEq)]
pub struct PreparedTdc {
    profile: TapProfile,
    layout: SubTdlLayout,
    launcher: Option<LauncherConfig>,
    sigma_clk: f64,
    variant: Variant,
    hit_polarity: Polarity,
    window: PhaseWindow,
}

impl PreparedTdc {
    /// The drawn tap profile.
    pub fn profile(&self) -> &TapProfile {
        &self.profile
    }

    /// The encoder layout in use.
    pub fn layout(&self) -> &SubTdlLayout {
        &self.layout
    }

    /// The resolved launcher, if the variant uses one.
    pub fn launcher(&self) -> Option<&LauncherConfig> {
        self.launcher.as_ref()
    }

    /// The phase window runs draw from.
    pub fn window(&self) -> PhaseWindow {
        self.window
    }

    /// The architecture.
    pub fn variant(&self) -> Variant {
        self.variant
    }

    /// Sampling clock jitter, ps.
    pub fn sigma_clk(&self) -> f64 {
        self.sigma_clk
    }

    /// Builds the analytic jitter budget matching this system, given the
    /// RMS quantization error of its bin population.
    pub fn jitter_budget(&self, sigma_eq: f64) -> JitterBudgetParts {
        JitterBudgetParts {
            sigma_clk: self.sigma_clk,
            sigma_cy: self.profile.element_jitter_sigma(),
            sigma_lut: self.launcher.as_ref().map(|l| l.sigma_lut).unwrap_or(0.0),
            n_elements: self.profile.num_elements(),
            sigma_eq,
            has_launcher: self.launcher.is_some(),
        }
    }

    fn make_edges(&self, elapsed: f64, rng: &mut SimRng) -> ([Edge; 2], usize) {
        match &self.launcher {
            Some(l) => {
                let sig = launch(0.0, l, self.profile.element_jitter_sigma(), rng)
                    .expect("launcher validated during prepare");
                (
                    [
                        Edge::falling(elapsed - sig.falling_launch),
                        Edge::rising(elapsed - sig.rising_launch),
                    ],
                    2,
                )
            }
            None => (
                [Edge { polarity: self.hit_polarity, elapsed }, Edge::rising(0.0)],
                1,
            ),
        }
    }
}

/// Scalar budget inputs harvested from a prepared system; convert into a
/// [`crate::uncertainty::JitterBudget`] by filling the optional parts.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct JitterBudgetParts {
    /// Sampling clock jitter, ps.
    pub sigma_clk: f64,
    /// Per-element jitter, ps.
    pub sigma_cy: f64,
    /// Launcher LUT jitter, ps.
    pub sigma_lut: f64,
    /// Elements in the line.
    pub n_elements: usize,
    /// Quantization RMS, ps.
    pub sigma_eq: f64,
    /// Launcher present.
    pub has_launcher: bool,
}

impl From<JitterBudgetParts> for crate::uncertainty::JitterBudget {
    fn from(p: JitterBudgetParts) -> Self {
        crate::uncertainty::JitterBudget {
            sigma_clk: p.sigma_clk,
            sigma_cy: p.sigma_cy,
            sigma_lut: p.sigma_lut,
            n_elements: p.n_elements,
            sigma_eq: p.sigma_eq,
            has_launcher: p.has_launcher,
            sigma_start: None,
            sigma_inl: None,
            sigma_qav: None,
            sigma_extra: None,
        }
    }
}

/// Shots per shard. Fixed so the shard decomposition of a run depends
/// only on its sample count, never on how many threads execute it.
pub const SHARD_SHOTS: u64 = 1 << 16;

/// Shot counts of each shard of a run.
pub fn shard_layout(samples: u64) -> Vec<u64> {
    let full = samples / SHARD_SHOTS;
    let rem = samples % SHARD_SHOTS;
    let mut v = vec![SHARD_SHOTS; full as usize];
    if rem > 0 {
        v.push(rem);
    }
    v
}

/// Seed of shard `index` within a run: a SplitMix64 mix of the run seed
/// and the shard index, so neighboring shards get unrelated streams.
pub fn shard_seed(seed: u64, index: u64) -> u64 {
    let mut z = seed ^ index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Raw result of a code density run (or one shard of it).
#[derive(Debug, Clone, PartialEq)]
pub struct DensityRun {
    /// Hits per raw code, indexed from code 0.
    pub counts: Vec<u64>,
    /// Shots whose word failed to decode.
    pub fault_count: u64,
    /// Shots fired.
    pub samples: u64,
    /// Window the phases were drawn from.
    pub window: PhaseWindow,
}

impl DensityRun {
    fn empty(tdc: &PreparedTdc) -> Self {
        DensityRun {
            counts: vec![0; tdc.layout.code_domain()],
            fault_count: 0,
            samples: 0,
            window: tdc.window,
        }
    }

    /// Folds another shard's counts into this one. Merge order must be
    /// shard order for bit-identical floats downstream.
    pub fn merge(&mut self, other: &DensityRun) {
        assert_eq!(self.counts.len(), other.counts.len(), "incompatible density runs");
        assert_eq!(self.window, other.window, "incompatible density runs");
        for (a, b) in self.counts.iter_mut().zip(&other.counts) {
            *a += *b;
        }
        self.fault_count += other.fault_count;
        self.samples += other.samples;
    }

    /// Trims the counts to the occupied code span and scales the
    /// conversion range to the kept hits' share of the window.
    ///
    /// Returns the histogram plus the raw code of its first bin.
    pub fn trimmed(&self) -> Result<(DensityHistogram, usize)> {
        let first = self
            .counts
            .iter()
            .position(|c| *c > 0)
            .ok_or(Error::EmptyInput("density run saw no decodable shots"))?;
        let last = self.counts.iter().rposition(|c| *c > 0).expect("nonzero above");
        let kept: Vec<u64> = self.counts[first..=last].to_vec();
        let total: u64 = self.counts.iter().sum();
        let kept_total: u64 = kept.iter().sum();
        let range = self.window.length * (kept_total as f64 / total as f64);
        Ok((DensityHistogram::new(kept, range)?, first))
    }
}

/// Runs one shard of a density test on its own seeded RNG stream.
pub fn density_shard(tdc: &PreparedTdc, shots: u64, stream_seed: u64) -> DensityRun {
    let mut rng = <SimRng as rand::SeedableRng>::seed_from_u64(stream_seed);
    let mut run = DensityRun::empty(tdc);
    let mut sampler = Sampler::new(&tdc.profile);
    let mut word = CapturedWord::zeroed(tdc.profile.tap_count());
    for _ in 0..shots {
        let u: f64 = rng.random();
        let phase = tdc.window.start + u * tdc.window.length;
        let (edges, n_edges) = tdc.make_edges(phase, &mut rng);
        sampler.sample_into(&edges[..n_edges], &mut rng, &mut word);
        match encode(&word, &tdc.layout) {
            Ok(fc) => run.counts[fc.value as usize] += 1,
            Err(_) => run.fault_count += 1,
        }
    }
    run.samples = shots;
    run
}

/// Runs a full code density test serially: all shards in order.
pub fn code_density_run(tdc: &PreparedTdc, samples: u64, seed: u64) -> DensityRun {
    let mut acc = DensityRun::empty(tdc);
    for (i, shots) in shard_layout(samples).into_iter().enumerate() {
        let shard = density_shard(tdc, shots, shard_seed(seed, i as u64));
        acc.merge(&shard);
    }
    acc
}

/// How raw codes become timestamps during a time-interval run.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Calibration {
    /// Phase of the first boundary of the table, ps.
    pub window_start: f64,
    /// Raw code of the table's first bin.
    pub code_offset: usize,
    /// Measured bin boundaries and centers.
    pub table: CalTable,
    /// Optional bin-count formatting: codes read out as their dominant
    /// ideal bin's center instead of their measured center.
    pub compensation: Option<CompensationMap>,
    /// Raw codes are halved (merged pairs) before lookup.
    pub binned: bool,
}

impl Calibration {
    /// A calibration that reads codes straight out of a table.
    pub fn from_table(window_start: f64, code_offset: usize, table: CalTable) -> Self {
        Calibration { window_start, code_offset, table, compensation: None, binned: false }
    }

    /// Checks internal consistency.
    pub fn validate(&self) -> Result<()> {
        if let Some(map) = &self.compensation {
            if map.targets.len() != self.table.n_codes() {
                return Err(Error::SizeMismatch {
                    context: "calibration table vs compensation map",
                    got: map.targets.len(),
                    expected: self.table.n_codes(),
                });
            }
        }
        Ok(())
    }

    /// Timestamp for a raw code, or `None` when the code falls outside
    /// the table.
    ///
    /// Compensated readout picks the target receiving the larger share of
    /// the code's counts and returns that ideal bin's center; a
    /// histogram-level split cannot apply to a single shot.
    pub fn measure(&self, raw_code: u32) -> Option<f64> {
        let mut idx = (raw_code as usize).checked_sub(self.code_offset)?;
        if self.binned {
            idx /= 2;
        }
        if idx >= self.table.n_codes() {
            return None;
        }
        let within = match &self.compensation {
            None => self.table.centers[idx],
            Some(map) => {
                let t = &map.targets[idx];
                let target = match (t.main, t.comp) {
                    (Some(m), Some(c)) => {
                        if t.split_fraction > 0.5 {
                            c
                        } else {
                            m
                        }
                    }
                    (Some(m), None) => m,
                    (None, _) => idx,
                };
                (target as f64 + 0.5) * map.lsb_ideal
            }
        };
        Some(self.window_start + within)
    }
}

/// Sweep plan of a time-interval run.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalSettings {
    /// First true interval, ps.
    pub start: f64,
    /// Interval increment, ps.
    pub step: f64,
    /// Number of intervals.
    pub steps: usize,
    /// Shots per interval.
    pub reps: u64,
}

impl Default for IntervalSettings {
    fn default() -> Self {
        IntervalSettings { start: 0.0, step: 9.41, steps: 16, reps: 50_000 }
    }
}

/// Statistics of one true interval.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalRow {
    /// The interval actually generated, ps.
    pub true_interval: f64,
    /// Mean measured timestamp, ps.
    pub mean_measured: f64,
    /// Mean measurement error, ps.
    pub mean_error: f64,
    /// Population std dev of the measurements, ps.
    pub std_dev: f64,
    /// Shots that produced a usable measurement.
    pub shots: u64,
    /// Shots lost to decode faults or codes outside the calibration.
    pub skipped: u64,
}

/// Result of a full interval sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IntervalResult {
    /// One row per swept interval.
    pub rows: Vec<IntervalRow>,
    /// Mean of the per-interval std devs: the single-shot resolution, ps.
    pub rms_resolution: f64,
    /// Spread (population std dev) of the per-interval std devs, ps.
    pub sigma_rms: f64,
}

/// Mergeable running statistics of one interval's measurements.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub struct IntervalAccum {
    /// Usable shots so far.
    pub n: u64,
    /// Running mean, ps.
    pub mean: f64,
    /// Running sum of squared deviations.
    pub m2: f64,
    /// Shots lost so far.
    pub skipped: u64,
}

impl IntervalAccum {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let d = x - self.mean;
        self.mean += d / self.n as f64;
        self.m2 += d * (x - self.mean);
    }

    /// Folds a later shard into this one (order matters for bit-identical
    /// floats).
    pub fn merge(&mut self, other: &IntervalAccum) {
        self.skipped += other.skipped;
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            self.n = other.n;
            self.mean = other.mean;
            self.m2 = other.m2;
            return;
        }
        let n1 = self.n as f64;
        let n2 = other.n as f64;
        let d = other.mean - self.mean;
        let n = n1 + n2;
        self.mean += d * (n2 / n);
        self.m2 += other.m2 + d * d * n1 * (n2 / n);
        self.n += other.n;
    }

    /// Population std dev of the pushed values.
    pub fn std_dev(&self) -> f64 {
        if self.n == 0 {
            return 0.0;
        }
        math::sqrt(self.m2 / self.n as f64)
    }
}

/// Runs one shard of one interval on its own seeded stream.
pub fn interval_shard(
    tdc: &PreparedTdc,
    cal: &Calibration,
    true_interval: f64,
    shots: u64,
    stream_seed: u64,
) -> IntervalAccum {
    let mut rng = <SimRng as rand::SeedableRng>::seed_from_u64(stream_seed);
    let mut acc = IntervalAccum::default();
    let mut sampler = Sampler::new(&tdc.profile);
    let mut word = CapturedWord::zeroed(tdc.profile.tap_count());
    for _ in 0..shots {
        let mut elapsed = true_interval;
        if tdc.sigma_clk > 0.0 {
            let z: f64 = rng.sample(StandardNormal);
            elapsed += z * tdc.sigma_clk;
        }
        let (edges, n_edges) = tdc.make_edges(elapsed, &mut rng);
        sampler.sample_into(&edges[..n_edges], &mut rng, &mut word);
        match encode(&word, &tdc.layout) {
            Ok(fc) => match cal.measure(fc.value) {
                Some(t) => acc.push(t),
                None => acc.skipped += 1,
            },
            Err(_) => acc.skipped += 1,
        }
    }
    acc
}

/// Sweeps `steps` true intervals and measures each `reps` times through
/// the calibration. Serial reference implementation: shards run in order.
pub fn time_interval_run(
    tdc: &PreparedTdc,
    cal: &Calibration,
    settings: &IntervalSettings,
    seed: u64,
) -> Result<IntervalResult> {
    cal.validate()?;
    if settings.steps == 0 || settings.reps == 0 {
        return Err(Error::EmptyInput("interval sweep needs steps and reps"));
    }
    let layout = shard_layout(settings.reps);
    let shards_per_interval = layout.len() as u64;
    let mut rows = Vec::with_capacity(settings.steps);
    for i in 0..settings.steps {
        let true_interval = settings.start + i as f64 * settings.step;
        let mut acc = IntervalAccum::default();
        for (j, shots) in layout.iter().enumerate() {
            let stream = shard_seed(seed, i as u64 * shards_per_interval + j as u64);
            let shard = interval_shard(tdc, cal, true_interval, *shots, stream);
            acc.merge(&shard);
        }
        rows.push(row_from_accum(true_interval, &acc));
    }
    let stds: Vec<f64> = rows.iter().filter(|r| r.shots > 0).map(|r| r.std_dev).collect();
    let (rms_resolution, sigma_rms) = rms_resolution(&stds)?;
    Ok(IntervalResult { rows, rms_resolution, sigma_rms })
}

/// Builds a result row from merged shard statistics.
pub fn row_from_accum(true_interval: f64, acc: &IntervalAccum) -> IntervalRow {
    IntervalRow {
        true_interval,
        mean_measured: acc.mean,
        mean_error: if acc.n > 0 { acc.mean - true_interval } else { 0.0 },
        std_dev: acc.std_dev(),
        shots: acc.n,
        skipped: acc.skipped,
    }
}

/// Mean and spread (population std dev) of per-interval standard
/// deviations: the quoted RMS resolution of a sweep.
pub fn rms_resolution(std_devs: &[f64]) -> Result<(f64, f64)> {
    if std_devs.is_empty() {
        return Err(Error::EmptyInput("no interval statistics"));
    }
    let n = std_devs.len() as f64;
    let mean = std_devs.iter().sum::<f64>() / n;
    let var = std_devs.iter().map(|s| (s - mean) * (s - mean)).sum::<f64>() / n;
    Ok((mean, math::sqrt(var)))
}

/// Exact calibration from the drawn profile's geometry over the prepared
/// window: the table a perfect (infinite-statistics, zero-noise) density
/// run would converge to. Useful as ground truth next to measured tables.
pub fn ground_truth_calibration(tdc: &PreparedTdc) -> Result<Calibration> {
    let w = tdc.window;
    let mut cuts: Vec<f64> = Vec::new();
    let code_offset;
    match &tdc.launcher {
        Some(l) => {
            let pw = l.pulse_width.expect("resolved during prepare");
            for f in tdc.profile.falling_cum() {
                if *f > w.start && *f < w.end() {
                    cuts.push(*f);
                }
            }
            for r in tdc.profile.rising_cum() {
                let p = r + pw;
                if p > w.start && p < w.end() {
                    cuts.push(p);
                }
            }
            cuts.sort_unstable_by(|a, b| a.partial_cmp(b).expect("finite positions"));
            code_offset = tdc.profile.edge_position(Polarity::Falling, w.start)
                + tdc.profile.edge_position(Polarity::Rising, w.start - pw);
        }
        None => {
            for c in tdc.profile.cum(tdc.hit_polarity) {
                if *c > w.start && *c < w.end() {
                    cuts.push(*c);
                }
            }
            code_offset = tdc.profile.edge_position(tdc.hit_polarity, w.start);
        }
    }
    let mut widths = Vec::with_capacity(cuts.len() + 1);
    let mut prev = w.start;
    for c in &cuts {
        widths.push(c - prev);
        prev = *c;
    }
    widths.push(w.end() - prev);
    Ok(Calibration::from_table(w.start, code_offset, CalTable::from_widths(&widths)?))
}

/// Density-test summary of one architecture in a comparison sweep.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct VariantSummary {
    /// Architecture measured.
    pub variant: Variant,
    /// Shots fired.
    pub samples: u64,
    /// Shots that failed to decode.
    pub fault_count: u64,
    /// Codes in the trimmed histogram (after binning, where applicable).
    pub n_codes: usize,
    /// Mean bin width, ps.
    pub lsb: f64,
    /// Linearity of the analyzed histogram (compensated for wave-union
    /// variants, raw for the others).
    pub linearity: LinearityReport,
}

/// Runs the same line through several architectures and summarizes each.
///
/// The base system provides the line, launcher parameters, stride, and
/// clock; each variant toggles dual sampling and the launcher on the same
/// seed, so every architecture sees the same element mismatch draw.
/// Wave-union histograms are compensated (and pair-merged for the binned
/// variant) before analysis, mirroring how those architectures are read
/// out in practice.
pub fn compare_variants(
    base: &TdcSystem,
    variants: &[Variant],
    samples: u64,
    seed: u64,
) -> Result<Vec<VariantSummary>> {
    let mut out = Vec::with_capacity(variants.len());
    for v in variants {
        let launcher = if v.uses_launcher() {
            let mut l = base
                .launcher
                .clone()
                .ok_or_else(|| {
                    Error::InvalidConfig(alloc::format!(
                        "variant {v} needs launcher parameters"
                    ))
                })?;
            l.enabled = true;
            Some(l)
        } else {
            None
        };
        let sys = TdcSystem {
            delay: DelayLineConfig {
                dual_sampling: v.uses_dual_sampling(),
                ..base.delay.clone()
            },
            launcher,
            stride: base.stride,
            sigma_clk: base.sigma_clk,
            variant: *v,
            hit_polarity: base.hit_polarity,
            phase_window: None,
        };
        let prepared = sys.prepare()?;
        let run = code_density_run(&prepared, samples, seed);
        let (mut hist, _) = run.trimmed()?;
        if v.is_binned() {
            hist = crate::calibration::bin_pairs(&hist)?.hist;
        }
        if v.uses_launcher() {
            let table = crate::calibration::boundaries(&hist)?;
            let map = crate::calibration::build_compensation(&table);
            hist = crate::calibration::apply_compensation(&hist, &map)?;
        }
        out.push(VariantSummary {
            variant: *v,
            samples: run.samples,
            fault_count: run.fault_count,
            n_codes: hist.n_codes(),
            lsb: hist.measurement_range / hist.n_codes() as f64,
            linearity: report(&hist)?,
        });
    }
    Ok(out)
}

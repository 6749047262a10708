//! TOML system descriptions and their conversion into core types.
//!
//! The file mirrors the simulator's structure section by section:
//!
//! ```toml
//! [delay_line]
//! num_carry8 = 60
//! nominal_element_delay = 5.0   # ps
//! mismatch_sigma = 1.2
//! seed = 42                     # static mismatch draw
//! element_jitter_sigma = 0.16
//!
//! [[delay_line.skew_steps]]
//! tap_index = 240
//! extra_delay = 20.0
//!
//! [launcher]
//! pulse_width = 1200.0          # optional: default half the rising range
//! sigma_lut = 1.45
//!
//! [encoder]
//! stride = 4
//!
//! [system]
//! variant = "dswu"              # plain | wu | ds | dswu | binned-dswu
//! sigma_clk = 4.42
//!
//! [interval]
//! step = 9.41
//! reps = 50000
//! ```
//!
//! Dual sampling and launcher enablement follow from `system.variant`, so
//! they cannot be mis-specified; the `[launcher]` section just has to be
//! present for wave-union variants. Unknown keys anywhere are errors.

use std::path::Path;

use serde::Deserialize;
use tdlsim_core::{
    DelayLineConfig, LauncherConfig, PhaseWindow, Polarity, PreparedTdc, SkewStep, TdcSystem,
    Variant,
};

use crate::commands::CliError;

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct ConfigFile {
    delay_line: DelayLineSection,
    launcher: Option<LauncherSection>,
    #[serde(default)]
    encoder: EncoderSection,
    system: SystemSection,
    #[serde(default)]
    interval: IntervalSection,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct DelayLineSection {
    num_carry8: usize,
    #[serde(default = "default_element_delay")]
    nominal_element_delay: f64,
    #[serde(default)]
    mismatch_sigma: f64,
    #[serde(default)]
    s_tap_offset: Option<f64>,
    #[serde(default)]
    skew_steps: Vec<SkewStep>,
    #[serde(default = "default_one")]
    falling_speed_ratio: f64,
    #[serde(default)]
    falling_ratio_per_element: Option<Vec<f64>>,
    #[serde(default)]
    bubble_window_sigma: f64,
    #[serde(default)]
    bubble_window_clip: Option<f64>,
    #[serde(default)]
    sample_offset_sigma: f64,
    #[serde(default)]
    element_jitter_sigma: f64,
    #[serde(default)]
    seed: u64,
}

fn default_element_delay() -> f64 {
    5.0
}

fn default_one() -> f64 {
    1.0
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct LauncherSection {
    #[serde(default)]
    pulse_width: Option<f64>,
    #[serde(default)]
    sigma_lut: f64,
    #[serde(default = "default_launcher_elements")]
    elements: usize,
    #[serde(default)]
    width_jitter_sigma: f64,
}

fn default_launcher_elements() -> usize {
    8
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct EncoderSection {
    #[serde(default = "default_stride")]
    stride: usize,
}

fn default_stride() -> usize {
    1
}

#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SystemSection {
    variant: Variant,
    #[serde(default)]
    sigma_clk: f64,
    #[serde(default)]
    hit_polarity: Option<Polarity>,
    #[serde(default)]
    phase_window: Option<PhaseWindow>,
}

#[derive(Debug, Clone, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct IntervalSection {
    #[serde(default)]
    start: Option<f64>,
    #[serde(default)]
    step: Option<f64>,
    #[serde(default)]
    steps: Option<usize>,
    #[serde(default)]
    reps: Option<u64>,
}

impl Default for EncoderSection {
    fn default() -> Self {
        EncoderSection { stride: default_stride() }
    }
}

/// Sweep defaults carried by the config; unresolved fields fall back to
/// window-derived values once the system is prepared.
#[derive(Debug, Clone, Copy, Default)]
pub struct IntervalDefaults {
    pub start: Option<f64>,
    pub step: Option<f64>,
    pub steps: Option<usize>,
    pub reps: Option<u64>,
}

/// A parsed and converted system description.
#[derive(Debug, Clone)]
pub struct LoadedConfig {
    pub system: TdcSystem,
    pub interval: IntervalDefaults,
}

/// Parses a TOML system description.
pub fn parse(text: &str) -> Result<LoadedConfig, CliError> {
    let file: ConfigFile =
        toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
    let d = file.delay_line;
    let variant = file.system.variant;
    let delay = DelayLineConfig {
        num_carry8: d.num_carry8,
        dual_sampling: variant.uses_dual_sampling(),
        nominal_element_delay: d.nominal_element_delay,
        mismatch_sigma: d.mismatch_sigma,
        s_tap_offset: d.s_tap_offset,
        skew_steps: d.skew_steps,
        falling_speed_ratio: d.falling_speed_ratio,
        falling_ratio_per_element: d.falling_ratio_per_element,
        bubble_window_sigma: d.bubble_window_sigma,
        bubble_window_clip: d.bubble_window_clip,
        sample_offset_sigma: d.sample_offset_sigma,
        element_jitter_sigma: d.element_jitter_sigma,
        seed: d.seed,
    };
    let launcher = file.launcher.map(|l| LauncherConfig {
        enabled: variant.uses_launcher(),
        pulse_width: l.pulse_width,
        sigma_lut: l.sigma_lut,
        elements: l.elements,
        width_jitter_sigma: l.width_jitter_sigma,
    });
    if variant.uses_launcher() && launcher.is_none() {
        return Err(CliError::Config(format!(
            "config: variant {variant} needs a [launcher] section"
        )));
    }
    let system = TdcSystem {
        delay,
        launcher,
        stride: file.encoder.stride,
        sigma_clk: file.system.sigma_clk,
        variant,
        hit_polarity: file.system.hit_polarity.unwrap_or(Polarity::Rising),
        phase_window: file.system.phase_window,
    };
    let i = file.interval;
    Ok(LoadedConfig {
        system,
        interval: IntervalDefaults { start: i.start, step: i.step, steps: i.steps, reps: i.reps },
    })
}

/// Reads and parses a TOML system description from disk.
pub fn load(path: &Path) -> Result<LoadedConfig, CliError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    parse(&text)
}

/// Fills unset sweep fields from the prepared system's phase window:
/// start at the window start, 9.41 ps steps, enough steps to span the
/// window, 50000 shots each.
pub fn resolve_interval(
    prepared: &PreparedTdc,
    defaults: IntervalDefaults,
    overrides: IntervalDefaults,
) -> Result<tdlsim_core::IntervalSettings, CliError> {
    let window = prepared.window();
    let step = overrides.step.or(defaults.step).unwrap_or(9.41);
    if !(step > 0.0) {
        return Err(CliError::Config("interval step must be positive".into()));
    }
    let start = overrides.start.or(defaults.start).unwrap_or(window.start);
    let steps = overrides
        .steps
        .or(defaults.steps)
        .unwrap_or_else(|| ((window.length / step).floor() as usize).max(1));
    let reps = overrides.reps.or(defaults.reps).unwrap_or(50_000);
    if steps == 0 || reps == 0 {
        return Err(CliError::Config("interval sweep needs steps and reps".into()));
    }
    Ok(tdlsim_core::IntervalSettings { start, step, steps, reps })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = r#"
        [delay_line]
        num_carry8 = 2

        [system]
        variant = "plain"
    "#;

    #[test]
    fn minimal_config_parses_with_defaults() {
        let c = parse(MINIMAL).unwrap();
        assert_eq!(c.system.variant, Variant::Plain);
        assert_eq!(c.system.stride, 1);
        assert_eq!(c.system.sigma_clk, 0.0);
        assert!(!c.system.delay.dual_sampling);
        assert!(c.system.launcher.is_none());
        assert_eq!(c.system.delay.nominal_element_delay, 5.0);
        c.system.prepare().unwrap();
    }

    #[test]
    fn variant_drives_dual_sampling_and_launcher() {
        let text = r#"
            [delay_line]
            num_carry8 = 2

            [launcher]
            pulse_width = 45.0
            sigma_lut = 1.45

            [system]
            variant = "dswu"
        "#;
        let c = parse(text).unwrap();
        assert!(c.system.delay.dual_sampling);
        let l = c.system.launcher.as_ref().unwrap();
        assert!(l.enabled);
        assert_eq!(l.pulse_width, Some(45.0));
        c.system.prepare().unwrap();
    }

    #[test]
    fn launcher_section_required_for_wave_union() {
        let text = r#"
            [delay_line]
            num_carry8 = 2

            [system]
            variant = "wu"
        "#;
        assert!(matches!(parse(text), Err(CliError::Config(_))));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = r#"
            [delay_line]
            num_carry8 = 2
            typo_field = 1

            [system]
            variant = "plain"
        "#;
        assert!(matches!(parse(text), Err(CliError::Config(_))));
        let text2 = r#"
            [delay_line]
            num_carry8 = 2

            [system]
            variant = "plain"

            [mystery]
            x = 1
        "#;
        assert!(matches!(parse(text2), Err(CliError::Config(_))));
    }

    #[test]
    fn interval_defaults_resolve_from_the_window() {
        let c = parse(MINIMAL).unwrap();
        let prepared = c.system.prepare().unwrap();
        let s = resolve_interval(&prepared, c.interval, IntervalDefaults::default()).unwrap();
        assert_eq!(s.start, 0.0);
        assert_eq!(s.step, 9.41);
        // 80 ps window / 9.41 -> 8 steps.
        assert_eq!(s.steps, 8);
        assert_eq!(s.reps, 50_000);
        let s2 = resolve_interval(
            &prepared,
            c.interval,
            IntervalDefaults { step: Some(2.0), steps: Some(3), ..Default::default() },
        )
        .unwrap();
        assert_eq!(s2.step, 2.0);
        assert_eq!(s2.steps, 3);
    }
}

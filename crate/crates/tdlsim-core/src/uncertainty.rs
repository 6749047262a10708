//! Analytic jitter budgets for a delay-line TDC and the ring-oscillator
//! route for extracting the per-element jitter.
//!
//! The single-shot error of a captured edge decomposes into independent
//! Gaussian terms that add in quadrature: the launcher chain (when a
//! wave-union launcher is present), the accumulated per-element jitter of
//! the line, quantization, and the sampling clock. The per-element term
//! grows with position in the line; averaged over a uniformly distributed
//! hit it contributes `(n+1)/2 * sigma_cy^2` for an `n`-element line.
//!
//! `sigma_cy` and `sigma_lut` are not directly observable. Ring
//! oscillators built from `m` carry elements plus one feedback LUT have
//! period variance `sigma_lut^2 + m * sigma_cy^2`, so measuring several
//! lengths and fitting variance against `m` separates the two.

use crate::error::{Error, Result};
use crate::math;

/// Inputs of the analytic single-shot and system budgets. All sigmas in ps.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct JitterBudget {
    /// Sampling clock jitter.
    pub sigma_clk: f64,
    /// Per-element jitter of the carry fabric.
    pub sigma_cy: f64,
    /// LUT-path jitter of the launcher chain.
    pub sigma_lut: f64,
    /// Number of carry elements in the delay line.
    pub n_elements: usize,
    /// RMS quantization error of the bin population.
    pub sigma_eq: f64,
    /// A wave-union launcher sits in front of the line.
    pub has_launcher: bool,
    /// Start-signal path jitter (system-level composition only).
    #[cfg_attr(feature = "serde", serde(default))]
    pub sigma_start: Option<f64>,
    /// Nonlinearity-induced error (system-level composition only).
    #[cfg_attr(feature = "serde", serde(default))]
    pub sigma_inl: Option<f64>,
    /// Quantization averaged over the operating range (system-level
    /// composition only).
    #[cfg_attr(feature = "serde", serde(default))]
    pub sigma_qav: Option<f64>,
    /// Anything else the measurement chain adds (system-level composition
    /// only).
    #[cfg_attr(feature = "serde", serde(default))]
    pub sigma_extra: Option<f64>,
}

impl JitterBudget {
    fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sigma_clk", self.sigma_clk),
            ("sigma_cy", self.sigma_cy),
            ("sigma_lut", self.sigma_lut),
            ("sigma_eq", self.sigma_eq),
        ] {
            if !(v >= 0.0) {
                return Err(Error::InvalidConfig(alloc::format!(
                    "{name} must be non-negative"
                )));
            }
        }
        if self.n_elements == 0 {
            return Err(Error::InvalidConfig("n_elements must be at least 1".into()));
        }
        Ok(())
    }
}

/// Analytic jitter chain of one configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UncertaintyReport {
    /// Launcher chain jitter (0 without a launcher), ps.
    pub sigma_wu: f64,
    /// Accumulated line jitter for a uniformly placed hit, ps.
    pub sigma_dl: f64,
    /// Large-line approximation of `sigma_dl` (variance `n/2` instead of
    /// `(n+1)/2`), ps.
    pub sigma_dl_approx: f64,
    /// Single-shot signal-path jitter: launcher and line combined, ps.
    pub sigma_sig: f64,
    /// Single-shot converter error: signal path plus quantization, ps.
    pub sigma_tdc: f64,
    /// Full single-measurement error including the sampling clock, ps.
    pub sigma_system: f64,
}

/// Jitter the wave-union launcher adds to every shot: an 8-element carry
/// chain plus the LUT path, or nothing when no launcher is configured.
pub fn sigma_wu(budget: &JitterBudget) -> f64 {
    if !budget.has_launcher {
        return 0.0;
    }
    math::sqrt(8.0 * budget.sigma_cy * budget.sigma_cy + budget.sigma_lut * budget.sigma_lut)
}

/// Accumulated per-element jitter seen by a hit uniformly distributed
/// over an `n`-element line: `sqrt((n+1)/2) * sigma_cy`, ps.
pub fn expected_sigma_dl(n_elements: usize, sigma_cy: f64) -> f64 {
    math::sqrt((n_elements as f64 + 1.0) / 2.0) * sigma_cy
}

/// Large-`n` shorthand for [`expected_sigma_dl`]: `sqrt(n/2) * sigma_cy`.
pub fn expected_sigma_dl_approx(n_elements: usize, sigma_cy: f64) -> f64 {
    math::sqrt(n_elements as f64 / 2.0) * sigma_cy
}

/// Composes the single-shot error chain from component sigmas.
///
/// The stages nest by quadrature: signal path from launcher and line,
/// converter from signal path and quantization, system from converter and
/// clock. The exact `(n+1)/2` line term is used throughout; the `n/2`
/// approximation is reported alongside.
pub fn budget(b: &JitterBudget) -> Result<UncertaintyReport> {
    b.validate()?;
    let wu = sigma_wu(b);
    let dl = expected_sigma_dl(b.n_elements, b.sigma_cy);
    let dl_approx = expected_sigma_dl_approx(b.n_elements, b.sigma_cy);
    let sig = math::sqrt(wu * wu + dl * dl);
    let tdc = math::sqrt(sig * sig + b.sigma_eq * b.sigma_eq);
    let system = math::sqrt(b.sigma_clk * b.sigma_clk + tdc * tdc);
    Ok(UncertaintyReport {
        sigma_wu: wu,
        sigma_dl: dl,
        sigma_dl_approx: dl_approx,
        sigma_sig: sig,
        sigma_tdc: tdc,
        sigma_system: system,
    })
}

/// System-level quadrature composition from externally measured parts:
/// start path, nonlinearity, averaged quantization, and extras. All four
/// must be present; the error names the first missing one.
pub fn budget_measured(b: &JitterBudget) -> Result<f64> {
    let start = b.sigma_start.ok_or(Error::MissingComponent("sigma_start"))?;
    let inl = b.sigma_inl.ok_or(Error::MissingComponent("sigma_inl"))?;
    let qav = b.sigma_qav.ok_or(Error::MissingComponent("sigma_qav"))?;
    let extra = b.sigma_extra.ok_or(Error::MissingComponent("sigma_extra"))?;
    for (name, v) in [
        ("sigma_start", start),
        ("sigma_inl", inl),
        ("sigma_qav", qav),
        ("sigma_extra", extra),
    ] {
        if !(v >= 0.0) {
            return Err(Error::InvalidConfig(alloc::format!("{name} must be non-negative")));
        }
    }
    Ok(math::sqrt(start * start + inl * inl + qav * qav + extra * extra))
}

/// One measured ring oscillator: chain length and period jitter.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoPoint {
    /// Carry elements in the oscillator loop.
    pub elements: usize,
    /// Measured period jitter, ps.
    pub sigma_ro: f64,
}

/// Result of the variance-vs-length fit.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RoFit {
    /// Per-element jitter, ps.
    pub sigma_cy: f64,
    /// LUT-path jitter, ps.
    pub sigma_lut: f64,
    /// A fitted variance came out negative and was clamped to zero;
    /// the input data contradicts the model.
    pub clamped: bool,
}

/// Separates per-element and LUT jitter from ring-oscillator measurements
/// by a least-squares line through (elements, sigma_ro^2): the slope is
/// the per-element variance, the intercept the LUT variance.
pub fn ro_extract(points: &[RoPoint]) -> Result<RoFit> {
    if points.len() < 2 {
        return Err(Error::DegenerateFit);
    }
    let first = points[0].elements;
    if points.iter().all(|p| p.elements == first) {
        return Err(Error::DegenerateFit);
    }
    for p in points {
        if !(p.sigma_ro >= 0.0) {
            return Err(Error::InvalidConfig("sigma_ro must be non-negative".into()));
        }
    }
    let n = points.len() as f64;
    let mean_x: f64 = points.iter().map(|p| p.elements as f64).sum::<f64>() / n;
    let mean_y: f64 = points.iter().map(|p| p.sigma_ro * p.sigma_ro).sum::<f64>() / n;
    let mut sxx = 0.0;
    let mut sxy = 0.0;
    for p in points {
        let dx = p.elements as f64 - mean_x;
        let dy = p.sigma_ro * p.sigma_ro - mean_y;
        sxx += dx * dx;
        sxy += dx * dy;
    }
    let slope = sxy / sxx;
    let intercept = mean_y - slope * mean_x;
    let clamped = slope < 0.0 || intercept < 0.0;
    Ok(RoFit {
        sigma_cy: math::sqrt(slope.max(0.0)),
        sigma_lut: math::sqrt(intercept.max(0.0)),
        clamped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn reference_budget() -> JitterBudget {
        JitterBudget {
            sigma_clk: 4.42,
            sigma_cy: 0.16,
            sigma_lut: 1.45,
            n_elements: 480,
            sigma_eq: 0.86,
            has_launcher: true,
            sigma_start: None,
            sigma_inl: None,
            sigma_qav: None,
            sigma_extra: None,
        }
    }

    #[test]
    fn launcher_chain_jitter_composes_in_quadrature() {
        let b = reference_budget();
        assert!((sigma_wu(&b) - 1.5190).abs() < 5e-4);
        let no_lut = JitterBudget { sigma_lut: 0.0, ..b };
        assert!((sigma_wu(&no_lut) - 0.16 * 8f64.sqrt()).abs() < 1e-12);
        let no_launcher = JitterBudget { has_launcher: false, ..b };
        assert_eq!(sigma_wu(&no_launcher), 0.0);
    }

    #[test]
    fn line_jitter_scales_with_sqrt_position() {
        assert!((expected_sigma_dl(480, 0.16) - 2.4813).abs() < 5e-4);
        assert_eq!(expected_sigma_dl(1, 0.7), 0.7);
        assert_eq!(expected_sigma_dl(480, 0.0), 0.0);
        // The approximation sits just under the exact value.
        let exact = expected_sigma_dl(480, 0.16);
        let approx = expected_sigma_dl_approx(480, 0.16);
        assert!(approx < exact && (exact - approx) / exact < 2e-3);
    }

    #[test]
    fn full_budget_reproduces_the_reference_chain() {
        let r = budget(&reference_budget()).unwrap();
        assert!((r.sigma_sig - 2.91).abs() <= 0.02);
        assert!((r.sigma_tdc - 3.03).abs() <= 0.02);
        assert!((r.sigma_system - 5.36).abs() <= 0.02);
    }

    #[test]
    fn dual_sampling_budget_without_launcher() {
        let b = JitterBudget { has_launcher: false, sigma_eq: 1.84, ..reference_budget() };
        let r = budget(&b).unwrap();
        assert_eq!(r.sigma_wu, 0.0);
        assert!(r.sigma_sig >= 2.48 && r.sigma_sig <= 2.52);
        assert!((r.sigma_system - 5.41).abs() <= 0.02);
    }

    #[test]
    fn budget_stages_compose_exactly_in_quadrature() {
        let r = budget(&reference_budget()).unwrap();
        let b = reference_budget();
        assert!(
            (r.sigma_sig * r.sigma_sig - (r.sigma_wu * r.sigma_wu + r.sigma_dl * r.sigma_dl))
                .abs()
                < 1e-12
        );
        assert!(
            (r.sigma_tdc * r.sigma_tdc - (r.sigma_sig * r.sigma_sig + b.sigma_eq * b.sigma_eq))
                .abs()
                < 1e-12
        );
        assert!(
            (r.sigma_system * r.sigma_system
                - (b.sigma_clk * b.sigma_clk + r.sigma_tdc * r.sigma_tdc))
                .abs()
                < 1e-12
        );
    }

    #[test]
    fn zero_budget_is_all_zero() {
        let b = JitterBudget {
            sigma_clk: 0.0,
            sigma_cy: 0.0,
            sigma_lut: 0.0,
            sigma_eq: 0.0,
            ..reference_budget()
        };
        let r = budget(&b).unwrap();
        assert_eq!(r.sigma_system, 0.0);
        assert_eq!(r.sigma_tdc, 0.0);
    }

    #[test]
    fn budget_rejects_bad_inputs() {
        assert!(budget(&JitterBudget { sigma_clk: -1.0, ..reference_budget() }).is_err());
        assert!(budget(&JitterBudget { n_elements: 0, ..reference_budget() }).is_err());
    }

    #[test]
    fn system_composition_needs_all_four_parts() {
        let full = JitterBudget {
            sigma_start: Some(3.0),
            sigma_inl: Some(4.0),
            sigma_qav: Some(0.0),
            sigma_extra: Some(0.0),
            ..reference_budget()
        };
        assert_eq!(budget_measured(&full).unwrap(), 5.0);
        let missing = JitterBudget { sigma_qav: None, ..full };
        assert_eq!(
            budget_measured(&missing),
            Err(Error::MissingComponent("sigma_qav"))
        );
    }

    #[test]
    fn ro_fit_recovers_exact_synthetic_jitter() {
        let (cy, lut) = (0.16, 1.45);
        let points: Vec<RoPoint> = [8usize, 16, 32, 64, 128]
            .iter()
            .map(|m| RoPoint {
                elements: *m,
                sigma_ro: (lut * lut + *m as f64 * cy * cy).sqrt(),
            })
            .collect();
        let fit = ro_extract(&points).unwrap();
        assert!((fit.sigma_cy - cy).abs() < 1e-9);
        assert!((fit.sigma_lut - lut).abs() < 1e-9);
        assert!(!fit.clamped);
    }

    #[test]
    fn ro_fit_works_from_two_points() {
        let points = [
            RoPoint { elements: 8, sigma_ro: 1.0 },
            RoPoint { elements: 16, sigma_ro: (1.0 + 8.0 * 0.04f64).sqrt() },
        ];
        let fit = ro_extract(&points).unwrap();
        assert!((fit.sigma_cy - 0.2).abs() < 1e-9);
    }

    #[test]
    fn ro_fit_rejects_degenerate_inputs() {
        assert_eq!(
            ro_extract(&[RoPoint { elements: 8, sigma_ro: 1.0 }]),
            Err(Error::DegenerateFit)
        );
        let same = [
            RoPoint { elements: 8, sigma_ro: 1.0 },
            RoPoint { elements: 8, sigma_ro: 2.0 },
        ];
        assert_eq!(ro_extract(&same), Err(Error::DegenerateFit));
    }

    #[test]
    fn ro_fit_clamps_contradictory_data() {
        let falling = [
            RoPoint { elements: 8, sigma_ro: 2.0 },
            RoPoint { elements: 16, sigma_ro: 1.0 },
        ];
        let fit = ro_extract(&falling).unwrap();
        assert!(fit.clamped);
        assert_eq!(fit.sigma_cy, 0.0);
    }
}

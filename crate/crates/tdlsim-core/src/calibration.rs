//! Code density calibration: bin boundaries, bin-count formatting, and
//! pair binning.
//!
//! A code density test drives the TDC with hits uniform in time and
//! histograms the codes. Each code's share of the conversion range is its
//! measured bin width, and the running sum of widths gives the actual bin
//! boundary table the converter should be read through.
//!
//! Bin-count formatting ("compensation") redistributes histogram counts
//! from the actual bins onto the ideal uniform grid without touching the
//! resolution: a code whose actual bin lags its ideal position hands its
//! counts to the ideal bin one below, splitting them across the straddled
//! ideal boundary when the bin covers it. The split assumes arrivals are
//! uniform within a bin, so the fraction handed to the upper target is the
//! fraction of the bin's span that lies beyond the ideal boundary.

use alloc::{vec, vec::Vec};

use crate::error::{Error, Result};

/// A code histogram from a density test over a known conversion range.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DensityHistogram {
    /// Hits per code.
    pub counts: Vec<u64>,
    /// Total time span the codes cover, ps.
    pub measurement_range: f64,
}

impl DensityHistogram {
    /// Wraps counts spanning `measurement_range` ps.
    pub fn new(counts: Vec<u64>, measurement_range: f64) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyInput("histogram counts"));
        }
        if !(measurement_range > 0.0) {
            return Err(Error::InvalidConfig(
                "measurement_range must be positive".into(),
            ));
        }
        Ok(DensityHistogram { counts, measurement_range })
    }

    /// Number of codes.
    pub fn n_codes(&self) -> usize {
        self.counts.len()
    }

    /// Total number of hits.
    pub fn total(&self) -> u64 {
        self.counts.iter().sum()
    }

    /// Measured width of each code bin, ps: the code's share of the range.
    pub fn widths(&self) -> Result<Vec<f64>> {
        let total = self.total();
        if total == 0 {
            return Err(Error::EmptyInput("histogram is all zeros"));
        }
        let t = total as f64;
        Ok(self
            .counts
            .iter()
            .map(|c| self.measurement_range * (*c as f64 / t))
            .collect())
    }
}

/// Calibration table: actual bin boundaries and the per-code timestamps
/// read out of them.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CalTable {
    /// `n_codes + 1` boundaries, from 0 to the conversion range, ps.
    pub boundaries: Vec<f64>,
    /// Midpoint of each bin, ps: the timestamp assigned to the code.
    pub centers: Vec<f64>,
    /// Conversion range divided by the number of codes, ps: the bin width
    /// a perfectly linear converter would have.
    pub lsb_ideal: f64,
}

impl CalTable {
    /// Number of codes the table covers.
    pub fn n_codes(&self) -> usize {
        self.centers.len()
    }

    /// Total conversion range, ps.
    pub fn measurement_range(&self) -> f64 {
        *self.boundaries.last().expect("table has at least one bin")
    }

    /// Width of each bin, ps.
    pub fn widths(&self) -> Vec<f64> {
        self.boundaries.windows(2).map(|w| w[1] - w[0]).collect()
    }

    /// Builds a table directly from known bin widths (ground truth from a
    /// synthesized profile, rather than a measured histogram).
    pub fn from_widths(widths: &[f64]) -> Result<Self> {
        if widths.is_empty() {
            return Err(Error::EmptyInput("bin widths"));
        }
        if widths.iter().any(|w| !(*w >= 0.0)) {
            return Err(Error::InvalidConfig("bin widths must be non-negative".into()));
        }
        let mut boundaries = Vec::with_capacity(widths.len() + 1);
        let mut acc = 0.0;
        boundaries.push(0.0);
        for w in widths {
            acc += w;
            boundaries.push(acc);
        }
        if !(acc > 0.0) {
            return Err(Error::InvalidConfig("total width must be positive".into()));
        }
        let centers = boundaries.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
        let lsb_ideal = acc / widths.len() as f64;
        Ok(CalTable { boundaries, centers, lsb_ideal })
    }
}

/// Integrates a density histogram into a [`CalTable`].
///
/// Boundary `k` is the range scaled by the fraction of hits below code
/// `k`, so boundary 0 is exactly 0 and boundary `n` is exactly the range.
/// Zero-count codes produce zero-width bins.
pub fn boundaries(hist: &DensityHistogram) -> Result<CalTable> {
    let total = hist.total();
    if total == 0 {
        return Err(Error::EmptyInput("histogram is all zeros"));
    }
    let t = total as f64;
    let n = hist.n_codes();
    let mut bounds = Vec::with_capacity(n + 1);
    let mut cum = 0u64;
    bounds.push(0.0);
    for c in &hist.counts {
        cum += *c;
        bounds.push(hist.measurement_range * (cum as f64 / t));
    }
    let centers = bounds.windows(2).map(|w| (w[0] + w[1]) / 2.0).collect();
    Ok(CalTable {
        boundaries: bounds,
        centers,
        lsb_ideal: hist.measurement_range / n as f64,
    })
}

/// Where one raw code's counts go on the ideal grid.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct BinTargets {
    /// Primary ideal bin. `None` marks a zero-width (void) code, which
    /// never fires and keeps its index if it somehow does.
    pub main: Option<usize>,
    /// Secondary ideal bin for codes that straddle an ideal boundary.
    pub comp: Option<usize>,
    /// Fraction of the code's counts handed to `comp`.
    pub split_fraction: f64,
}

impl BinTargets {
    fn identity(k: usize) -> Self {
        BinTargets { main: Some(k), comp: None, split_fraction: 0.0 }
    }

    fn void() -> Self {
        BinTargets { main: None, comp: None, split_fraction: 0.0 }
    }
}

/// Per-code routing of raw counts onto the ideal uniform grid.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompensationMap {
    /// One entry per raw code.
    pub targets: Vec<BinTargets>,
    /// Ideal bins no raw code can reach. Only profiles with zero-width
    /// codes produce these; they read as missing output codes.
    pub missing_codes: Vec<usize>,
    /// Ideal bin width the map was built against, ps.
    pub lsb_ideal: f64,
}

/// Builds the count-routing map for a calibration table.
///
/// Codes are scanned once. A code whose left boundary lags its ideal
/// position is remapped: wholly-left bins (right boundary also before the
/// ideal boundary) go entirely to the ideal bin below; bins that straddle
/// their ideal left boundary split between the bin below and their own
/// index, with the fraction of counts beyond the boundary going up.
/// On-time and right-displaced codes keep their index: only the lagging
/// side is treatable, because a code can only be told apart from its
/// neighbors by the boundary it lags behind.
pub fn build_compensation(table: &CalTable) -> CompensationMap {
    let n = table.n_codes();
    let mr = table.measurement_range();
    let nf = n as f64;
    let ideal = |k: usize| mr * (k as f64 / nf);

    let mut targets: Vec<BinTargets> = (0..n).map(BinTargets::identity).collect();
    for k in 1..n {
        let width = table.boundaries[k + 1] - table.boundaries[k];
        if width == 0.0 {
            targets[k] = BinTargets::void();
            continue;
        }
        let t_act = table.boundaries[k];
        let t_id = ideal(k);
        if t_act < t_id {
            let t_next = table.boundaries[k + 1];
            if t_next <= t_id {
                targets[k] = BinTargets { main: Some(k - 1), comp: None, split_fraction: 0.0 };
            } else {
                // Counts beyond the straddled ideal boundary go up; the
                // rest belongs below it (uniform arrival within the bin).
                let split = (t_next - t_id) / width;
                targets[k] =
                    BinTargets { main: Some(k - 1), comp: Some(k), split_fraction: split };
            }
        }
    }
    // Zero-width codes at index 0 are void too.
    if n > 0 && table.boundaries[1] - table.boundaries[0] == 0.0 {
        targets[0] = BinTargets::void();
    }

    let mut reached = vec![false; n];
    for t in &targets {
        if let Some(m) = t.main {
            reached[m] = true;
        }
        if let Some(c) = t.comp {
            if t.split_fraction > 0.0 {
                reached[c] = true;
            }
        }
    }
    let missing_codes = reached
        .iter()
        .enumerate()
        .filter_map(|(k, r)| (!*r).then_some(k))
        .collect();

    CompensationMap { targets, missing_codes, lsb_ideal: table.lsb_ideal }
}

/// Routes a histogram's counts through a compensation map.
///
/// Counts are integers, so a split code distributes them by largest
/// remainder between its two targets (ties go to `main`); the total is
/// conserved exactly. Void codes keep their counts in place, which only
/// matters for histograms that disagree with the calibration run.
pub fn apply_compensation(
    hist: &DensityHistogram,
    map: &CompensationMap,
) -> Result<DensityHistogram> {
    if hist.n_codes() != map.targets.len() {
        return Err(Error::SizeMismatch {
            context: "histogram vs compensation map",
            got: hist.n_codes(),
            expected: map.targets.len(),
        });
    }
    let mut out = vec![0u64; hist.n_codes()];
    for (k, t) in map.targets.iter().enumerate() {
        let c = hist.counts[k];
        match (t.main, t.comp) {
            (None, _) => out[k] += c,
            (Some(m), None) => out[m] += c,
            (Some(m), Some(cc)) => {
                let comp_real = c as f64 * t.split_fraction;
                let main_real = c as f64 - comp_real;
                let comp_int = comp_real as u64;
                let main_int = main_real as u64;
                let leftover = c - comp_int - main_int;
                let comp_rem = comp_real - comp_int as f64;
                let main_rem = main_real - main_int as f64;
                let (mut to_main, mut to_comp) = (main_int, comp_int);
                if leftover > 0 {
                    if comp_rem > main_rem {
                        to_comp += leftover;
                    } else {
                        to_main += leftover;
                    }
                }
                out[m] += to_main;
                out[cc] += to_comp;
            }
        }
    }
    DensityHistogram::new(out, hist.measurement_range)
}

/// A histogram after merging adjacent code pairs, plus what the merge had
/// to drop.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct PairedHistogram {
    /// The merged histogram; its range shrinks by the dropped tail's share.
    pub hist: DensityHistogram,
    /// Codes dropped from the tail (0 or 1).
    pub dropped_codes: usize,
    /// Hits lost with the dropped tail code.
    pub dropped_count: u64,
}

/// Merges adjacent code pairs: `counts'[j] = counts[2j] + counts[2j+1]`.
///
/// Dual-sampling lines alternate wide and narrow bins by construction;
/// merging pairs trades resolution for uniformity. An odd trailing code
/// is dropped and reported, and the conversion range scales down by the
/// dropped code's share of the hits.
pub fn bin_pairs(hist: &DensityHistogram) -> Result<PairedHistogram> {
    let n = hist.n_codes();
    if n < 2 {
        return Err(Error::EmptyInput("need at least two codes to pair"));
    }
    let pairs = n / 2;
    let mut counts = Vec::with_capacity(pairs);
    for j in 0..pairs {
        counts.push(hist.counts[2 * j] + hist.counts[2 * j + 1]);
    }
    let (dropped_codes, dropped_count) =
        if n % 2 == 1 { (1, hist.counts[n - 1]) } else { (0, 0) };
    let total = hist.total();
    let range = if dropped_codes == 0 {
        hist.measurement_range
    } else if total > 0 {
        // The kept codes cover the range minus the dropped code's share.
        hist.measurement_range * ((total - dropped_count) as f64 / total as f64)
    } else {
        hist.measurement_range * (pairs * 2) as f64 / n as f64
    };
    Ok(PairedHistogram {
        hist: DensityHistogram::new(counts, range)?,
        dropped_codes,
        dropped_count,
    })
}

/// Timestamp assigned to a raw code by a calibration table: the center of
/// its measured bin, ps.
pub fn code_to_time(code: usize, table: &CalTable) -> Result<f64> {
    table
        .centers
        .get(code)
        .copied()
        .ok_or(Error::CodeOutOfRange { code, len: table.n_codes() })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn hist(counts: &[u64], mr: f64) -> DensityHistogram {
        DensityHistogram::new(counts.to_vec(), mr).unwrap()
    }

    #[test]
    fn uniform_histogram_gives_uniform_boundaries() {
        let t = boundaries(&hist(&[1, 1, 1, 1], 4.0)).unwrap();
        assert_eq!(t.boundaries, vec![0.0, 1.0, 2.0, 3.0, 4.0]);
        assert_eq!(t.centers, vec![0.5, 1.5, 2.5, 3.5]);
        assert_eq!(t.lsb_ideal, 1.0);
    }

    #[test]
    fn skewed_histogram_shifts_boundaries() {
        let t = boundaries(&hist(&[1, 3], 4.0)).unwrap();
        assert_eq!(t.boundaries, vec![0.0, 1.0, 4.0]);
        assert_eq!(t.lsb_ideal, 2.0);
    }

    #[test]
    fn zero_count_codes_become_zero_width_bins() {
        let t = boundaries(&hist(&[1, 0, 1], 3.0)).unwrap();
        assert_eq!(t.boundaries, vec![0.0, 1.5, 1.5, 3.0]);
        assert_eq!(t.widths()[1], 0.0);
    }

    #[test]
    fn boundary_ends_are_exact_for_any_histogram() {
        use rand::{Rng, SeedableRng};
        let mut rng = crate::SimRng::seed_from_u64(5);
        for _ in 0..200 {
            let n = rng.random_range(1..40usize);
            let counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..1000u64)).collect();
            if counts.iter().all(|c| *c == 0) {
                continue;
            }
            let mr = rng.random_range(1.0..500.0);
            let t = boundaries(&hist(&counts, mr)).unwrap();
            assert_eq!(t.boundaries[0], 0.0);
            assert_eq!(*t.boundaries.last().unwrap(), mr);
            assert!(t.boundaries.windows(2).all(|w| w[1] >= w[0]));
        }
    }

    #[test]
    fn table_from_widths_matches_histogram_route() {
        let via_hist = boundaries(&hist(&[2, 6, 4], 6.0)).unwrap();
        let via_widths = CalTable::from_widths(&[1.0, 3.0, 2.0]).unwrap();
        for (a, b) in via_hist.boundaries.iter().zip(&via_widths.boundaries) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(via_hist.lsb_ideal, via_widths.lsb_ideal);
    }

    #[test]
    fn uniform_table_compensates_to_identity() {
        let t = boundaries(&hist(&[7, 7, 7, 7, 7], 10.0)).unwrap();
        let map = build_compensation(&t);
        for (k, bt) in map.targets.iter().enumerate() {
            assert_eq!(bt.main, Some(k));
            assert_eq!(bt.comp, None);
        }
        assert!(map.missing_codes.is_empty());
    }

    #[test]
    fn straddling_bin_splits_at_the_ideal_boundary() {
        let t = CalTable::from_widths(&[0.5, 1.5, 1.0]).unwrap();
        let map = build_compensation(&t);
        assert_eq!(map.targets[0].main, Some(0));
        let b1 = map.targets[1];
        assert_eq!(b1.main, Some(0));
        assert_eq!(b1.comp, Some(1));
        assert!((b1.split_fraction - 1.0 / 1.5).abs() < 1e-12);
        assert_eq!(map.targets[2].main, Some(2));
        assert!(map.missing_codes.is_empty());
    }

    #[test]
    fn ultra_wide_bin_with_void_leaves_a_missing_code() {
        // The 3-wide code 1 spans ideal bins 0..3 but can only target two
        // of them; the void code 2 never fires, so ideal bin 2 is
        // unreachable.
        let t = CalTable::from_widths(&[0.5, 3.0, 0.0, 1.0, 0.5]).unwrap();
        let map = build_compensation(&t);
        let b1 = map.targets[1];
        assert_eq!(b1.main, Some(0));
        assert_eq!(b1.comp, Some(1));
        assert!((b1.split_fraction - 2.5 / 3.0).abs() < 1e-12);
        assert_eq!(map.targets[2].main, None);
        assert_eq!(map.targets[3].main, Some(3));
        assert_eq!(map.targets[4].main, Some(4));
        assert_eq!(map.missing_codes, vec![2]);
    }

    #[test]
    fn sub_lsb_wobble_never_loses_codes() {
        // Boundary displacements under one ideal bin: every ideal bin
        // stays reachable.
        let t = CalTable::from_widths(&[0.7, 1.2, 0.6, 1.4, 0.8, 1.3]).unwrap();
        let map = build_compensation(&t);
        assert!(map.missing_codes.is_empty());
    }

    #[test]
    fn compensated_uniform_density_is_flat() {
        // Counts proportional to widths [0.5, 1.5, 1.0]: formatting puts
        // the density back on the uniform grid exactly.
        let h = hist(&[5, 15, 10], 3.0);
        let map = build_compensation(&boundaries(&h).unwrap());
        let out = apply_compensation(&h, &map).unwrap();
        assert_eq!(out.counts, vec![10, 10, 10]);
        assert_eq!(out.total(), h.total());
    }

    #[test]
    fn split_rounding_is_deterministic_and_conserving() {
        let t = CalTable::from_widths(&[0.5, 1.5, 1.0]).unwrap();
        let map = build_compensation(&t);
        // Odd count through a 2/3 split: 7 * 2/3 = 4.667 to comp, 2.333 to
        // main; the leftover unit goes to the larger remainder (comp).
        let h = hist(&[0, 7, 0], 3.0);
        let out = apply_compensation(&h, &map).unwrap();
        assert_eq!(out.counts, vec![2, 5, 0]);
        assert_eq!(out.total(), 7);
    }

    #[test]
    fn compensation_conserves_any_total() {
        use rand::{Rng, SeedableRng};
        let mut rng = crate::SimRng::seed_from_u64(9);
        for _ in 0..200 {
            let n = rng.random_range(2..30usize);
            let widths: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
            let table = match CalTable::from_widths(&widths) {
                Ok(t) => t,
                Err(_) => continue,
            };
            let map = build_compensation(&table);
            let counts: Vec<u64> = (0..n).map(|_| rng.random_range(0..5000u64)).collect();
            if counts.iter().all(|c| *c == 0) {
                continue;
            }
            let h = hist(&counts, table.measurement_range());
            let out = apply_compensation(&h, &map).unwrap();
            assert_eq!(out.total(), h.total());
        }
    }

    #[test]
    fn bin_pairs_merges_adjacent_codes() {
        let p = bin_pairs(&hist(&[1, 3, 2, 2], 8.0)).unwrap();
        assert_eq!(p.hist.counts, vec![4, 4]);
        assert_eq!(p.hist.measurement_range, 8.0);
        assert_eq!(p.dropped_codes, 0);
        assert_eq!(p.dropped_count, 0);
    }

    #[test]
    fn bin_pairs_drops_and_reports_an_odd_tail() {
        let p = bin_pairs(&hist(&[1, 1, 1, 1, 6], 10.0)).unwrap();
        assert_eq!(p.hist.counts, vec![2, 2]);
        assert_eq!(p.dropped_codes, 1);
        assert_eq!(p.dropped_count, 6);
        assert!((p.hist.measurement_range - 4.0).abs() < 1e-12);
    }

    #[test]
    fn code_to_time_reads_bin_centers() {
        let t = boundaries(&hist(&[1, 1, 1, 1], 4.0)).unwrap();
        assert_eq!(code_to_time(2, &t).unwrap(), 2.5);
        assert_eq!(code_to_time(0, &t).unwrap(), 0.5);
        assert!(matches!(
            code_to_time(4, &t),
            Err(Error::CodeOutOfRange { code: 4, len: 4 })
        ));
    }

    #[test]
    fn mismatched_map_is_rejected() {
        let t = CalTable::from_widths(&[1.0, 1.0]).unwrap();
        let map = build_compensation(&t);
        let h = hist(&[1, 2, 3], 3.0);
        assert!(matches!(
            apply_compensation(&h, &map),
            Err(Error::SizeMismatch { .. })
        ));
    }
}

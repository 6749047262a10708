//! On-disk formats: histogram CSV, interval CSV, ring-oscillator CSV,
//! tap profile CSV, and pretty-printed JSON reports.
//!
//! CSV files open with `# key=value` comment lines for scalar metadata,
//! then a header row, then data. Floats are written with Rust's shortest
//! round-trip formatting, so rereading a file reproduces the exact bits
//! and byte-identical runs diff clean.

use std::fmt::Write as _;
use std::path::Path;

use serde::Serialize;
use tdlsim_core::{Calibration, DensityHistogram, IntervalResult, RoPoint, TapProfile};

use crate::commands::CliError;

fn read_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Config(format!("{}: {e}", path.display()))
}

fn write_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Runtime(format!("{}: {e}", path.display()))
}

/// Writes a value as pretty JSON with a trailing newline.
pub fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let mut s = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing {}: {e}", path.display())))?;
    s.push('\n');
    std::fs::write(path, s).map_err(|e| write_err(path, e))
}

/// Renders a value as pretty JSON for stdout.
pub fn to_json_string<T: Serialize>(value: &T) -> Result<String, CliError> {
    serde_json::to_string_pretty(value)
        .map_err(|e| CliError::Runtime(format!("serializing report: {e}")))
}

/// Reads a JSON file into a deserializable value.
pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    serde_json::from_str(&text).map_err(|e| read_err(path, e))
}

/// A histogram plus the metadata the density run attached to it.
#[derive(Debug, Clone, PartialEq)]
pub struct HistogramFile {
    /// Counts over the occupied code span.
    pub hist: DensityHistogram,
    /// Raw code of the first row.
    pub first_code: usize,
    /// Phase of the first bin boundary, ps, when the producer knew it.
    pub window_start: Option<f64>,
}

/// Writes a histogram as `code,count` rows with its conversion range and
/// run counters in comments. Codes are raw: the first row carries
/// `first_code`.
pub fn write_histogram(
    path: &Path,
    file: &HistogramFile,
    samples: u64,
    faults: u64,
) -> Result<(), CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "# measurement_range={}", file.hist.measurement_range);
    if let Some(ws) = file.window_start {
        let _ = writeln!(s, "# window_start={ws}");
    }
    let _ = writeln!(s, "# samples={samples}");
    let _ = writeln!(s, "# faults={faults}");
    s.push_str("code,count\n");
    for (i, c) in file.hist.counts.iter().enumerate() {
        let _ = writeln!(s, "{},{c}", file.first_code + i);
    }
    std::fs::write(path, s).map_err(|e| write_err(path, e))
}

/// Reads a histogram CSV. Rows must be in ascending code order; gaps
/// become zero-count codes. Unknown comment keys are ignored.
pub fn read_histogram(path: &Path) -> Result<HistogramFile, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let mut measurement_range = None;
    let mut window_start = None;
    let mut rows: Vec<(usize, u64)> = Vec::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() {
            continue;
        }
        if let Some(comment) = line.strip_prefix('#') {
            if let Some((k, v)) = comment.trim().split_once('=') {
                match k.trim() {
                    "measurement_range" => {
                        measurement_range = Some(parse_float(path, lineno, v)?);
                    }
                    "window_start" => window_start = Some(parse_float(path, lineno, v)?),
                    _ => {}
                }
            }
            continue;
        }
        if !saw_header {
            if line != "code,count" {
                return Err(read_err(
                    path,
                    format!("line {}: expected header 'code,count', got {line:?}", lineno + 1),
                ));
            }
            saw_header = true;
            continue;
        }
        let (code, count) = line.split_once(',').ok_or_else(|| {
            read_err(path, format!("line {}: expected 'code,count' row", lineno + 1))
        })?;
        let code: usize = code.trim().parse().map_err(|e| {
            read_err(path, format!("line {}: bad code: {e}", lineno + 1))
        })?;
        let count: u64 = count.trim().parse().map_err(|e| {
            read_err(path, format!("line {}: bad count: {e}", lineno + 1))
        })?;
        if let Some((last, _)) = rows.last() {
            if code <= *last {
                return Err(read_err(
                    path,
                    format!("line {}: codes must be strictly ascending", lineno + 1),
                ));
            }
        }
        rows.push((code, count));
    }
    let measurement_range = measurement_range
        .ok_or_else(|| read_err(path, "missing '# measurement_range=' comment"))?;
    let (first_code, _) = *rows
        .first()
        .ok_or_else(|| read_err(path, "no histogram rows"))?;
    let last_code = rows.last().expect("nonempty").0;
    let mut counts = vec![0u64; last_code - first_code + 1];
    for (code, count) in rows {
        counts[code - first_code] = count;
    }
    let hist = DensityHistogram::new(counts, measurement_range)
        .map_err(|e| read_err(path, e))?;
    Ok(HistogramFile { hist, first_code, window_start })
}

fn parse_float(path: &Path, lineno: usize, v: &str) -> Result<f64, CliError> {
    v.trim()
        .parse()
        .map_err(|e| read_err(path, format!("line {}: bad float: {e}", lineno + 1)))
}

/// Writes an interval sweep as CSV, aggregates in the comments.
pub fn write_interval_csv(path: &Path, result: &IntervalResult) -> Result<(), CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "# rms_resolution={}", result.rms_resolution);
    let _ = writeln!(s, "# sigma_rms={}", result.sigma_rms);
    s.push_str("true_interval,mean_measured,mean_error,std_dev,shots,skipped\n");
    for r in &result.rows {
        let _ = writeln!(
            s,
            "{},{},{},{},{},{}",
            r.true_interval, r.mean_measured, r.mean_error, r.std_dev, r.shots, r.skipped
        );
    }
    std::fs::write(path, s).map_err(|e| write_err(path, e))
}

/// Reads `elements,sigma_ro` rows for the ring-oscillator fit.
pub fn read_ro_points(path: &Path) -> Result<Vec<RoPoint>, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| read_err(path, e))?;
    let mut out = Vec::new();
    let mut saw_header = false;
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        if !saw_header && line == "elements,sigma_ro" {
            saw_header = true;
            continue;
        }
        let (m, sigma) = line.split_once(',').ok_or_else(|| {
            read_err(path, format!("line {}: expected 'elements,sigma_ro' row", lineno + 1))
        })?;
        let elements: usize = m.trim().parse().map_err(|e| {
            read_err(path, format!("line {}: bad element count: {e}", lineno + 1))
        })?;
        let sigma_ro = parse_float(path, lineno, sigma)?;
        out.push(RoPoint { elements, sigma_ro });
    }
    if out.is_empty() {
        return Err(read_err(path, "no ring-oscillator rows"));
    }
    Ok(out)
}

/// Dumps a drawn profile as `tap_index,rising_cum,falling_cum` rows.
pub fn write_profile(path: &Path, profile: &TapProfile) -> Result<(), CliError> {
    let mut s = String::new();
    let _ = writeln!(s, "# num_elements={}", profile.num_elements());
    let _ = writeln!(s, "# tap_count={}", profile.tap_count());
    s.push_str("tap_index,rising_cum,falling_cum\n");
    for (i, (r, f)) in profile.rising_cum().iter().zip(profile.falling_cum()).enumerate() {
        let _ = writeln!(s, "{i},{r},{f}");
    }
    std::fs::write(path, s).map_err(|e| write_err(path, e))
}

/// Reads a calibration produced by `calibrate`.
pub fn read_calibration(path: &Path) -> Result<Calibration, CliError> {
    let cal: Calibration = read_json(path)?;
    cal.validate().map_err(|e| read_err(path, e))?;
    Ok(cal)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn histogram_round_trips() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        let file = HistogramFile {
            hist: DensityHistogram::new(vec![3, 0, 7, 11], 12.25).unwrap(),
            first_code: 5,
            window_start: Some(2.5),
        };
        write_histogram(&path, &file, 21, 0).unwrap();
        let back = read_histogram(&path).unwrap();
        assert_eq!(back, file);
    }

    #[test]
    fn histogram_reader_fills_gaps_and_checks_order() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("h.csv");
        std::fs::write(&path, "# measurement_range=4\ncode,count\n2,5\n4,5\n").unwrap();
        let f = read_histogram(&path).unwrap();
        assert_eq!(f.hist.counts, vec![5, 0, 5]);
        assert_eq!(f.first_code, 2);
        assert_eq!(f.window_start, None);

        std::fs::write(&path, "# measurement_range=4\ncode,count\n4,5\n2,5\n").unwrap();
        assert!(read_histogram(&path).is_err());
        std::fs::write(&path, "code,count\n1,1\n").unwrap();
        assert!(read_histogram(&path).is_err(), "range comment is required");
        std::fs::write(&path, "# measurement_range=4\nwrong,header\n1,1\n").unwrap();
        assert!(read_histogram(&path).is_err());
    }

    #[test]
    fn ro_points_parse_with_optional_header() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("ro.csv");
        std::fs::write(&path, "elements,sigma_ro\n8,1.0\n16,1.3\n").unwrap();
        let pts = read_ro_points(&path).unwrap();
        assert_eq!(pts.len(), 2);
        assert_eq!(pts[1].elements, 16);
        std::fs::write(&path, "# comment\n8,1.0\n").unwrap();
        assert_eq!(read_ro_points(&path).unwrap().len(), 1);
        std::fs::write(&path, "\n").unwrap();
        assert!(read_ro_points(&path).is_err());
    }
}

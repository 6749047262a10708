//! End-to-end checks of the binary: exit codes, the JSON diagnostic on
//! stderr, and stdout fallbacks.

use std::path::Path;
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_tdlsim")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().unwrap()
}

fn write_config(dir: &Path) -> std::path::PathBuf {
    let path = dir.join("system.toml");
    std::fs::write(
        &path,
        r#"
[delay_line]
num_carry8 = 2
mismatch_sigma = 0.8
seed = 5

[system]
variant = "plain"
"#,
    )
    .unwrap();
    path
}

fn stderr_diagnostic(out: &Output) -> serde_json::Value {
    let text = String::from_utf8(out.stderr.clone()).unwrap();
    serde_json::from_str(text.trim()).unwrap_or_else(|e| {
        panic!("stderr is not a JSON diagnostic: {e}\nstderr was: {text}")
    })
}

#[test]
fn density_pipeline_succeeds_with_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let hist = dir.path().join("hist.csv");
    let report = dir.path().join("report.json");
    let out = run(&[
        "density",
        "--config", config.to_str().unwrap(),
        "--samples", "200000",
        "--seed", "1",
        "--histogram", hist.to_str().unwrap(),
        "--report", report.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));

    let text = std::fs::read_to_string(&hist).unwrap();
    assert!(text.starts_with("# measurement_range="), "{text}");
    assert!(text.contains("code,count"));

    let rep: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert!(rep["dnl_pkpk"].as_f64().unwrap() > 0.0);

    // The histogram feeds straight back into calibrate.
    let cal = dir.path().join("cal.json");
    let out = run(&[
        "calibrate",
        "--histogram", hist.to_str().unwrap(),
        "--output", cal.to_str().unwrap(),
        "--compensate",
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let cal_json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&cal).unwrap()).unwrap();
    assert!(cal_json["compensation"].is_object());
}

#[test]
fn unknown_config_key_exits_two_with_json_diagnostic() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("bad.toml");
    std::fs::write(
        &config,
        "[delay_line]\nnum_carry8 = 2\nwibble = 3\n\n[system]\nvariant = \"plain\"\n",
    )
    .unwrap();
    let out = run(&[
        "density",
        "--config", config.to_str().unwrap(),
        "--samples", "10",
        "--histogram", dir.path().join("h.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let diag = stderr_diagnostic(&out);
    assert_eq!(diag["kind"], "config");
    assert!(diag["error"].as_str().unwrap().contains("wibble"));
}

#[test]
fn missing_config_file_exits_two() {
    let out = run(&[
        "density",
        "--config", "/nonexistent/system.toml",
        "--samples", "10",
        "--histogram", "/tmp/unused-hist.csv",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_diagnostic(&out)["kind"], "config");
}

#[test]
fn wave_union_variant_without_launcher_section_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("wu.toml");
    std::fs::write(
        &config,
        "[delay_line]\nnum_carry8 = 2\n\n[system]\nvariant = \"wu\"\n",
    )
    .unwrap();
    let out = run(&[
        "density",
        "--config", config.to_str().unwrap(),
        "--samples", "10",
        "--histogram", dir.path().join("h.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let diag = stderr_diagnostic(&out);
    assert_eq!(diag["kind"], "config");
    assert!(diag["error"].as_str().unwrap().contains("launcher"));
}

#[test]
fn clap_usage_error_exits_two() {
    let out = run(&["density", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unwritable_output_path_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = run(&[
        "density",
        "--config", config.to_str().unwrap(),
        "--samples", "1000",
        "--histogram", "/nonexistent-dir/h.csv",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_diagnostic(&out)["kind"], "runtime");
}

#[test]
fn invalid_thread_env_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = Command::new(bin())
        .args([
            "density",
            "--config", config.to_str().unwrap(),
            "--samples", "1000",
            "--histogram", dir.path().join("h.csv").to_str().unwrap(),
        ])
        .env("TDLSIM_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_diagnostic(&out)["kind"], "config");
}

#[test]
fn zero_samples_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let out = run(&[
        "density",
        "--config", config.to_str().unwrap(),
        "--samples", "0",
        "--histogram", dir.path().join("h.csv").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn budget_streams_to_stdout_without_output_flag() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("budget.json");
    std::fs::write(
        &input,
        r#"{"sigma_clk":4.42,"sigma_cy":0.16,"sigma_lut":1.45,"n_elements":480,"sigma_eq":0.86,"has_launcher":true}"#,
    )
    .unwrap();
    let out = run(&["budget", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value =
        serde_json::from_slice(&out.stdout).expect("stdout is the report JSON");
    assert!((v["sigma_system"].as_f64().unwrap() - 5.361).abs() < 0.001);
}

#[test]
fn ro_fit_recovers_parameters_through_the_binary() {
    let dir = tempfile::tempdir().unwrap();
    let input = dir.path().join("ro.csv");
    let mut text = String::from("elements,sigma_ro\n");
    for i in 1..=16u32 {
        let m = 8 * i;
        let sigma = (1.45f64 * 1.45 + m as f64 * 0.16 * 0.16).sqrt();
        text.push_str(&format!("{m},{sigma}\n"));
    }
    std::fs::write(&input, text).unwrap();
    let out = run(&["ro-fit", "--input", input.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!((v["sigma_cy"].as_f64().unwrap() - 0.16).abs() < 1e-9);
    assert!((v["sigma_lut"].as_f64().unwrap() - 1.45).abs() < 1e-9);
}

#[test]
fn compare_reports_all_variants_with_expected_lsb_ordering() {
    let dir = tempfile::tempdir().unwrap();
    let config = dir.path().join("compare.toml");
    std::fs::write(
        &config,
        r#"
[delay_line]
num_carry8 = 4
mismatch_sigma = 1.0
seed = 21

[launcher]
pulse_width = 82.5
sigma_lut = 1.45

[system]
variant = "plain"
"#,
    )
    .unwrap();
    let output = dir.path().join("compare.json");
    let out = run(&[
        "compare",
        "--config", config.to_str().unwrap(),
        "--samples", "400000",
        "--seed", "2",
        "--output", output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let rows: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&output).unwrap()).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len(), 5);
    let lsb = |name: &str| {
        rows.iter()
            .find(|r| r["variant"] == name)
            .unwrap_or_else(|| panic!("variant {name} missing"))["lsb"]
            .as_f64()
            .unwrap()
    };
    assert!(lsb("ds") < lsb("plain"));
    assert!(lsb("dswu") < lsb("ds"));
    assert!(lsb("binned-dswu") > lsb("dswu"));
}

#[test]
fn profile_dump_lists_every_tap() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let output = dir.path().join("taps.csv");
    let out = run(&[
        "profile",
        "--config", config.to_str().unwrap(),
        "--output", output.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(&output).unwrap();
    assert!(text.contains("tap_index,rising_cum,falling_cum"));
    // 16 taps plus two comment lines and the header.
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 17);
}

#[test]
fn interval_csv_reports_resolution_summary() {
    let dir = tempfile::tempdir().unwrap();
    let config = write_config(dir.path());
    let hist = dir.path().join("h.csv");
    let cal = dir.path().join("c.json");
    let csv = dir.path().join("i.csv");
    for args in [
        vec![
            "density",
            "--config", config.to_str().unwrap(),
            "--samples", "200000",
            "--histogram", hist.to_str().unwrap(),
        ],
        vec!["calibrate", "--histogram", hist.to_str().unwrap(), "--output", cal.to_str().unwrap()],
        vec![
            "interval",
            "--config", config.to_str().unwrap(),
            "--calibration", cal.to_str().unwrap(),
            "--steps", "3",
            "--reps", "5000",
            "--start", "10",
            "--step", "7.3",
            "--output", csv.to_str().unwrap(),
        ],
    ] {
        let out = run(&args);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = std::fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("# rms_resolution="), "{text}");
    assert!(text.contains("true_interval,mean_measured,mean_error,std_dev,shots,skipped"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 4);
}

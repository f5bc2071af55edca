use std::path::Path;
use std::process::{Command, Output};

fn rymet(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rymet"))
        .args(args)
        .env_remove("RYMET_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = rymet(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(2)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn column(csv: &str, name: &str) -> usize {
    csv.lines().nth(1).unwrap().split(',').position(|c| c == name).unwrap()
}

#[test]
fn csv_header_and_schema_line() {
    let out = stdout(&["super-rabi", "--set", "theta_points=3"]);
    let mut lines = out.lines();
    assert_eq!(lines.next(), Some("# rymet super-rabi v1"));
    assert_eq!(
        lines.next(),
        Some("theta,mean_nd,mean_np,reference_nd,reference_np,total")
    );
    assert_eq!(lines.count(), 3);
}

#[test]
fn super_rabi_zero_angle_is_detected_mean() {
    let out = stdout(&["super-rabi", "--set", "thetas=[0]", "--set", "n0=55", "--set", "eta=0.02"]);
    let nd: f64 = rows(&out)[0][column(&out, "mean_nd")].parse().unwrap();
    assert!((nd - 1.1).abs() < 1e-12, "{nd}");
}

#[test]
fn toy_fi_peak_ratio() {
    let out = stdout(&["toy-fi", "--set", "etas=[0.02]", "--set", "theta_points=5"]);
    let ratio: f64 = rows(&out)[0][column(&out, "peak_ratio")].parse().unwrap();
    assert!((ratio - 1.98).abs() < 1e-8, "{ratio}");
}

#[test]
fn toy_fi_empty_grid_is_a_validation_error() {
    let out = rymet(&["toy-fi", "--set", "thetas=[]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn unknown_key_rejected() {
    let out = rymet(&["fi-scan", "--set", "gama_tau=0.1"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gama_tau"));
}

#[test]
fn realization_size_must_divide_total() {
    let out = rymet(&[
        "ml-experiment",
        "--set",
        "total_shots=1000",
        "--set",
        "shots_per_realization=300",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_dipole_moment() {
    let out = rymet(&["sensitivity"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("dipole_moment"));
}

#[test]
fn dipolar_rejects_non_positive_time() {
    let out = rymet(&["dipolar", "--set", "times=[-1e-7]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.json");
    std::fs::write(&cfg, r#"{"gamma_taus": [0.04], "loss_orders": "before", "theta_points": 4}"#)
        .unwrap();
    let cfg = cfg.to_str().unwrap();
    let out = stdout(&["fi-scan", "--config", cfg, "--set", "theta_points=2"]);
    let rows = rows(&out);
    assert_eq!(rows.len(), 2);
    assert!(rows.iter().all(|r| r[0] == "before"));
}

#[test]
fn json_output_to_env_directory() {
    let dir = tempfile::tempdir().unwrap();
    let status = Command::new(env!("CARGO_BIN_EXE_rymet"))
        .args(["sensitivity", "--format", "json", "--set", "dipole_moment=1.6533e-26"])
        .args(["--set", "fi_per_shot=3.6", "--set", "grid_points=400"])
        .env("RYMET_OUTPUT_DIR", dir.path())
        .status()
        .unwrap();
    assert!(status.success());
    let text = std::fs::read_to_string(dir.path().join("sensitivity.json")).unwrap();
    let doc: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(doc["schema"], "rymet/sensitivity/v1");
    let de = doc["rows"][0]["delta_e_v_per_cm"].as_f64().unwrap();
    assert!(de > 0.0 && de < 1e-3, "{de}");
}

fn run_to(path: &Path, args: &[&str]) -> Vec<u8> {
    let mut full = args.to_vec();
    full.extend(["--output", path.to_str().unwrap()]);
    stdout(&full);
    std::fs::read(path).unwrap()
}

#[test]
fn seeded_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "ml-experiment",
        "--set",
        "thetas=[1.2, 2.0]",
        "--set",
        "total_shots=2000",
        "--set",
        "bootstrap=20",
        "--set",
        "grid_points=300",
        "--seed",
        "9",
    ];
    let a = run_to(&dir.path().join("a.csv"), &args);
    let b = run_to(&dir.path().join("b.csv"), &args);
    assert_eq!(a, b);
    let mut other = args.to_vec();
    *other.last_mut().unwrap() = "10";
    let c = run_to(&dir.path().join("c.csv"), &other);
    assert_ne!(a, c);
}

#[test]
fn dipolar_reports_both_conventions() {
    let out = stdout(&["dipolar", "--set", "times=[1e-8, 1e-6]"]);
    let r = &rows(&out)[0];
    let angular: f64 = r[column(&out, "gamma_angular")].parse().unwrap();
    let plain: f64 = r[column(&out, "gamma_plain")].parse().unwrap();
    assert!((angular / 4610.87 - 1.0).abs() < 5e-3, "{angular}");
    assert!((angular / plain - 2.0 * std::f64::consts::PI).abs() < 1e-9);
}

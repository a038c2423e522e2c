use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pqcm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pqcm")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn row<'a>(text: &'a str, key: &str) -> &'a str {
    text.lines()
        .find_map(|l| l.strip_prefix(key).filter(|rest| rest.starts_with(' ')).map(str::trim))
        .unwrap_or_else(|| panic!("no `{key}` row in\n{text}"))
}

fn config_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn clone_plus() {
    let o = pqcm(&["clone", "--state", "plus"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(row(&t, "fidelity"), "0.833333");
    assert_eq!(row(&t, "success_probability"), "0.888889");
    assert_eq!(row(&t, "universal_fidelity"), "0.777778");
    assert_eq!(row(&t, "|φφφ⟩"), "0.866025");
}

#[test]
fn clone_universal() {
    let t = stdout(&pqcm(&["clone", "--state", "H", "--universal"]));
    assert_eq!(row(&t, "fidelity"), "0.777778");
    assert_eq!(row(&t, "success_probability"), "0.666667");
}

#[test]
fn clone_angles() {
    let t = stdout(&pqcm(&["clone", "--state", "theta=0.7,phi=0"]));
    assert_eq!(row(&t, "fidelity"), "0.833333");
}

#[test]
fn clone_json_is_full_precision() {
    let o = pqcm(&["clone", "--state", "V", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((v["fidelity"].as_f64().unwrap() - 5.0 / 6.0).abs() < 1e-12);
    assert!((v["success_probability"].as_f64().unwrap() - 8.0 / 9.0).abs() < 1e-12);
}

#[test]
fn invalid_state_is_a_validation_error() {
    for bad in ["D", "theta=abc", "phi=1", ""] {
        let o = pqcm(&["clone", "--state", bad]);
        assert_eq!(o.status.code(), Some(1), "{bad}");
        assert!(o.stdout.is_empty());
    }
    assert_eq!(pqcm(&["fock", "--state", "sideways"]).status.code(), Some(1));
}

#[test]
fn usage_errors_exit_with_one() {
    assert_eq!(pqcm(&["bogus"]).status.code(), Some(1));
    assert_eq!(pqcm(&["clone"]).status.code(), Some(1));
    assert_eq!(pqcm(&["bounds", "--max-m", "1"]).status.code(), Some(1));
    assert_eq!(pqcm(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_table() {
    let o = pqcm(&["bounds", "--max-m", "5", "--format", "csv"]);
    assert!(o.status.success());
    let t = stdout(&o);
    let lines: Vec<&str> = t.lines().collect();
    assert_eq!(lines[0], "M,F_univ,F_cov");
    assert_eq!(lines[1], "2,0.833333,0.853553");
    assert_eq!(lines[2], "3,0.777778,0.833333");
    assert_eq!(*lines.last().unwrap(), "inf,0.666667,0.750000");
    assert_eq!(lines.len(), 6);
}

#[test]
fn fock_two_mode() {
    let o = pqcm(&["fock", "--geometry", "two-mode"]);
    assert!(o.status.success());
    let t = stdout(&o);
    assert_eq!(row(&t, "probabilities"), "0.750000 0.250000");
    assert_eq!(row(&t, "fidelity"), "0.833333");
    assert_eq!(row(&t, "branch_probability"), "0.333333");
    assert_eq!(row(&t, "crosscheck"), "agree");
}

#[test]
fn fock_collinear_matches_two_mode() {
    let t = stdout(&pqcm(&["fock", "--geometry", "collinear", "--psi", "0.3"]));
    assert_eq!(row(&t, "probabilities"), "0.750000 0.250000");
    assert_eq!(row(&t, "fidelity"), "0.833333");
    assert_eq!(row(&t, "crosscheck"), "agree");
}

#[test]
fn fock_rejects_mismatched_flags() {
    assert_eq!(pqcm(&["fock", "--psi", "0.3"]).status.code(), Some(1));
    assert_eq!(pqcm(&["fock", "--geometry", "collinear", "--state", "H"]).status.code(), Some(1));
    assert_eq!(pqcm(&["fock", "--state", "theta=1,phi=1"]).status.code(), Some(1));
}

#[test]
fn scan_writes_csv_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let cfg = config_path("ideal_z.conf");
    let o = pqcm(&["scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("run.csv")).unwrap();
    assert!(csv.starts_with("position_um,component_h,counts\n"));
    assert_eq!(csv.lines().count(), 1 + 9 * 3);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.path().join("run.json")).unwrap()).unwrap();
    assert_eq!(report, serde_json::from_slice::<serde_json::Value>(&o.stdout).unwrap());
    let f = report["fidelity"].as_f64().unwrap();
    let e = report["fidelity_err"].as_f64().unwrap();
    assert!((f - 5.0 / 6.0).abs() < 3.0 * e, "{f} ± {e}");
    assert!(report["R"][1].is_null());
}

#[test]
fn scan_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config_path("ideal_z.conf");
    let run = |name: &str| {
        let out = dir.path().join(name);
        let o = pqcm(&["scan", cfg.to_str().unwrap(), "--seed", "42", "--out", out.to_str().unwrap()]);
        assert!(o.status.success());
        fs::read(dir.path().join(format!("{name}.csv"))).unwrap()
    };
    assert_eq!(run("a"), run("b"));
    let other = pqcm(&["scan", cfg.to_str().unwrap(), "--seed", "43", "--format", "csv"]);
    assert_ne!(other.stdout, run("c"));
}

#[test]
fn x_scan_recovers_enhancements() {
    let cfg = config_path("x_scan.conf");
    let o = pqcm(&["scan", cfg.to_str().unwrap(), "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for (i, expect) in [(0, 2.0), (2, 3.0)] {
        let r = v["R"][i].as_f64().unwrap();
        let e = v["R_err"][i].as_f64().unwrap();
        assert!((r - expect).abs() < 3.0 * e, "component {i}: {r} ± {e}");
    }
}

#[test]
fn failed_fit_keeps_partial_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("short.conf");
    fs::write(&cfg, "points = -20, 0, 20\ncoherence_sigma = 20\nbaselines = 20, 0, 20\nshots_per_point = 400\n").unwrap();
    let out = dir.path().join("short");
    let o = pqcm(&["scan", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_ne!(o.status.code(), Some(0));
    let csv = fs::read_to_string(dir.path().join("short.csv")).unwrap();
    assert_eq!(csv.lines().count(), 1 + 3 * 3);
    assert!(!dir.path().join("short.json").exists());
}

#[test]
fn bad_config_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.conf");
    fs::write(&cfg, "points = 0\nwavelength = 800\n").unwrap();
    let o = pqcm(&["scan", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavelength"));
    assert_eq!(pqcm(&["scan", "/nonexistent/config"]).status.code(), Some(1));
}

use std::path::PathBuf;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_lovelock-mass")).args(args).output().expect("binary runs")
}

fn tmp(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("lovelock-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    dir.join(name)
}

fn json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn euclidean_mass_is_zero() {
    let out = bin(&["mass", "--metric", "euclidean", "--n", "5", "--k", "2", "--quad-level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"].as_f64(), Some(0.0));
}

#[test]
fn schwarzschild_adm_mass() {
    let out = bin(&["mass", "--metric", "schwarzschild", "--k", "1", "--n", "6", "--m", "1.0", "--as", "adm", "--quad-level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out)["value"].as_f64().unwrap();
    assert!((v - 1.0).abs() < 1e-6, "{v}");
}

#[test]
fn numbers_carry_17_digits() {
    let out = bin(&["mass", "--metric", "schwarzschild", "--k", "2", "--n", "6", "--quad-level", "3", "--radii", "20,40,80,160"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let line = text.lines().find(|l| l.contains("\"value\"")).unwrap();
    let mantissa = line.split(':').nth(1).unwrap().trim().trim_end_matches(',').split('e').next().unwrap().replace(['.', '-'], "");
    assert_eq!(mantissa.len(), 17, "{line}");
}

#[test]
fn flux_csv_default_radii_and_header() {
    let path = tmp("flux.csv");
    let out = bin(&["flux", "--metric", "euclidean", "--n", "5", "--quad-level", "3", "--csv", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = std::fs::read_to_string(&path).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "# integrand=gbc n=5 k=2");
    assert_eq!(lines[1], "r,flux");
    assert_eq!(lines.len(), 6);
    assert!(lines[2].starts_with("2.0000000000000000e1,"));
    assert!(lines[5].starts_with("1.6000000000000000e2,"));
}

#[test]
fn reruns_are_bit_identical() {
    let (a, b) = (tmp("run-a.json"), tmp("run-b.json"));
    for p in [&a, &b] {
        let out = bin(&["verify", "--suite", "sigma2", "--n", "5", "--seed", "1", "--out", p.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
}

#[test]
fn verify_examples_pass() {
    for (suite, n, seed) in [("divergence", "6", "7"), ("sigma2", "5", "1"), ("l2-24h4", "5", "3")] {
        let out = bin(&["verify", "--suite", suite, "--n", n, "--seed", seed]);
        assert_eq!(out.status.code(), Some(0), "{suite}: {}", String::from_utf8_lossy(&out.stderr));
        assert_eq!(json(&out)["pass"], serde_json::Value::Bool(true));
    }
}

#[test]
fn unknown_suite_lists_suites() {
    let out = bin(&["verify", "--suite", "bogus", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("graph-identity") && err.contains("invariance"), "{err}");
}

#[test]
fn errors_name_the_field() {
    let out = bin(&["mass", "--metric", "schwarzschild", "--n", "9"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("n"));
    let out = bin(&["mass", "--metric", "kerr", "--n", "5"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("metric.family"));
}

#[test]
fn config_rejects_unknown_keys_and_flags_override() {
    let bad = tmp("bad.json");
    std::fs::write(&bad, r#"{"metric": {"family": "euclidean", "params": {"n": 5, "mass": 1}}}"#).unwrap();
    assert_eq!(bin(&["mass", "--config", bad.to_str().unwrap()]).status.code(), Some(1));
    let good = tmp("good.json");
    std::fs::write(&good, r#"{"metric": {"family": "schwarzschild", "params": {"n": 5, "m": 3.0}}, "quad_level": 3}"#).unwrap();
    let out = bin(&["mass", "--config", good.to_str().unwrap(), "--metric", "euclidean"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(json(&out)["value"].as_f64(), Some(0.0));
}

#[test]
fn penrose_equality_and_missing_horizon() {
    let out = bin(&["penrose", "--metric", "schwarzschild-graph", "--n", "5", "--m", "1", "--quad-level", "3"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out);
    assert!((v["mass"].as_f64().unwrap() - 1.0).abs() < 1e-6);
    for s in v["slack"].as_array().unwrap() {
        assert!(s.as_f64().unwrap().abs() < 1e-6);
    }
    let out = bin(&["penrose", "--metric", "schwarzschild-graph", "--n", "5", "--horizon", "/nonexistent/h.json"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn ellipsoid_horizon_has_positive_slacks() {
    let h = tmp("ellipsoid.json");
    std::fs::write(&h, r#"{"kind": "ellipsoid", "axes": [2, 1, 1, 1, 1]}"#).unwrap();
    let out = bin(&["penrose", "--horizon", h.to_str().unwrap(), "--quad-level", "8"]);
    assert_eq!(out.status.code(), Some(0));
    for s in json(&out)["af_slack"].as_array().unwrap() {
        assert!(s.as_f64().unwrap() > 1e-3);
    }
}

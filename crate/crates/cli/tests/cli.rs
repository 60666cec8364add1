use std::path::Path;
use std::process::{Command, Output};

fn nomar(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nomar")).args(args).output().expect("binary runs")
}

fn normalized(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .filter(|l| !l.starts_with("# generated_at_unix="))
        .collect::<Vec<_>>()
        .join("\n")
}

#[test]
fn figure1_is_identical_across_worker_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for (dir, workers) in [(&a, "1"), (&b, "8")] {
        let out = nomar(&[
            "figure", "1", "--seed", "42", "--workers", workers, "--samples", "200000", "--out",
            dir.path().to_str().unwrap(),
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = a.path().join("fig1_tau.csv");
    let fb = b.path().join("fig1_tau.csv");
    assert_eq!(normalized(&fa), normalized(&fb));
    assert!(a.path().join("fig1.gp").exists());
}

#[test]
fn ec_prints_csv() {
    let out = nomar(&["ec", "--snr-db", "10", "--samples", "5000", "--seed", "3"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some("axis,axis_value_db,axis_value_linear,strategy,variant,user,estimator,ec_bits_per_s_per_hz,std_err,n_samples,seed")
    );
    assert_eq!(lines.count(), 3 * 2 * 3);
}

#[test]
fn tau_accepts_negative_snr() {
    let out = nomar(&["tau", "--snr-db", "-20", "--estimator", "cf"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(String::from_utf8(out.stdout).unwrap().lines().count(), 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"k_users": 2, "powers": [0.2, 0.8], "snr_db": 10, "betas": [1, -2], "strategies": ["OMA"]}"#).unwrap();
    let out = nomar(&["sweep", "--config", bad.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beta must be negative") && err.contains("user 1"), "{err}");

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{\"k_users\": 2,\n \"betas\": [-2 -2]}").unwrap();
    let out = nomar(&["sweep", "--config", broken.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));

    assert_eq!(nomar(&["figure", "7"]).status.code(), Some(2));
}

#[test]
fn sweep_writes_named_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("k3.json");
    std::fs::write(
        &cfg,
        r#"{"k_users": 3, "powers": [0.05, 0.15, 0.8], "snr_grid_db": [0, 20], "betas": [-2, -2, -2],
            "strategies": ["OMA", "NOMA", "NOMA-R"], "nomar_variant": "event", "n_samples": 5000, "seed": 9,
            "estimator": "mc"}"#,
    )
    .unwrap();
    let out = nomar(&["sweep", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = std::fs::read_to_string(dir.path().join("k3.csv")).unwrap();
    assert!(text.starts_with("# generated_at_unix="));
    assert_eq!(text.lines().count(), 3 + 2 * 3 * 4);
}

#[test]
fn validate_passes() {
    let out = nomar(&["validate", "--samples", "50000", "--seed", "1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).contains("0 failed"));
}

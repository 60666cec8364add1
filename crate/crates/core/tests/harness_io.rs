use nomar_core::harness::{
    load_config, normalized_contents, read_results, run_sweep, EstimatorChoice, UserLabel, CLOSED_FORM,
    CLOSED_FORM_ERROR, MONTE_CARLO,
};

fn write(dir: &std::path::Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn nomar_sweep_agrees_across_estimators() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "s.json",
        r#"{"k_users": 2, "powers": [0.2, 0.8], "snr_grid_db": [-40, -20, 0, 20, 40], "betas": [-2, -2],
            "strategies": ["NOMA-R"], "nomar_variant": "both", "n_samples": 400000, "seed": 1}"#,
    );
    let mut spec = load_config(&cfg).unwrap();
    assert_eq!(spec.estimator, EstimatorChoice::Both);
    spec.out_path = Some(dir.path().join("s.csv"));
    let table = run_sweep(&spec).unwrap();
    let rows = read_results(&dir.path().join("s.csv")).unwrap();
    assert_eq!(rows.len(), table.rows.len());
    for cf in rows.iter().filter(|r| r.estimator == CLOSED_FORM) {
        let mc = rows
            .iter()
            .find(|r| {
                r.estimator == MONTE_CARLO
                    && r.axis_value_db == cf.axis_value_db
                    && r.variant == cf.variant
                    && r.user == cf.user
            })
            .unwrap();
        assert!((cf.ec - mc.ec).abs() <= 3.5 * mc.std_err + 1e-12, "{cf:?} vs {mc:?}");
    }
}

#[test]
fn rerun_is_byte_identical_and_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "k3.json",
        r#"{"k_users": 3, "snr_db": 35, "betas": [-2, -2, -2], "strategies": ["OMA", "NOMA", "NOMA-R"],
            "axis": "beta1", "grid": [-10, -2, -0.1], "n_samples": 20000, "seed": 5}"#,
    );
    let mut spec = load_config(&cfg).unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    spec.out_path = Some(a.clone());
    let table = run_sweep(&spec).unwrap();
    spec.out_path = Some(b.clone());
    run_sweep(&spec).unwrap();
    assert_eq!(normalized_contents(&a).unwrap(), normalized_contents(&b).unwrap());
    let back = read_results(&a).unwrap();
    for (x, y) in table.rows.iter().zip(&back) {
        assert_eq!(x.ec.to_bits(), y.ec.to_bits());
        assert_eq!(x.std_err.to_bits(), y.std_err.to_bits());
    }
    assert!(back.iter().any(|r| r.estimator == CLOSED_FORM_ERROR && r.user == UserLabel::Sum));
    assert_eq!(back.iter().filter(|r| r.estimator == MONTE_CARLO).count(), 3 * 3 * 4);
}

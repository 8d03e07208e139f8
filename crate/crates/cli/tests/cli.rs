use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn run(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_carleman"))
        .args(args)
        .current_dir(dir)
        .output()
        .unwrap()
}

fn report(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap()
}

#[test]
fn extend_delta() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("delta0.json"), r#"{"coeffs_re": [1.0]}"#).unwrap();
    let out = run(
        &[
            "extend",
            "--coeffs",
            "delta0.json",
            "--weight",
            "gevrey:1",
            "--eval",
            "0.1,0.5",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    let v = &r["result"]["values"];
    assert!((v[0]["re"].as_f64().unwrap() - 0.99995460).abs() < 1e-8);
    assert!((v[1]["re"].as_f64().unwrap() - (1.0 - (-2f64).exp())).abs() < 1e-10);
    assert_eq!(r["config"]["command"], "extend");
    assert!(r["version"].is_string());
}

#[test]
fn analyze_gevrey_with_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "analyze", "--seq", "gevrey:1", "--prefix", "10000", "--csv", "grid.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let r = report(&out);
    assert!((r["result"]["omega"]["value"].as_f64().unwrap() - 1.0).abs() < 0.02);
    assert_eq!(r["result"]["proximate_order"]["pass"], true);
    let csv = std::fs::read_to_string(dir.path().join("grid.csv")).unwrap();
    assert!(csv.starts_with("t,hM,M,d\n"));
    assert_eq!(csv.lines().count(), 201);
}

#[test]
fn analyze_qpower_fails_moderate_growth() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&run(
        &["analyze", "--seq", "qpower:2", "--prefix", "1000"],
        dir.path(),
    ));
    assert_eq!(r["result"]["regularity"]["moderate"]["pass"], false);
}

#[test]
fn quasi_verdicts() {
    let dir = tempfile::tempdir().unwrap();
    let r = report(&run(
        &["quasi", "--seq", "gevrey:1", "--gamma", "1"],
        dir.path(),
    ));
    assert_eq!(r["result"]["korenbljum"]["verdict"], "quasianalytic");
    assert_eq!(r["result"]["watson"]["quasianalytic"], false);
    let r = report(&run(
        &["quasi", "--seq", "alphabeta:1:3", "--gamma", "1"],
        dir.path(),
    ));
    assert_eq!(r["result"]["korenbljum"]["verdict"], "not-quasianalytic");
}

#[test]
fn moments_csv_matches_gamma() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &[
            "moments",
            "--seq",
            "gevrey:0.5",
            "--kernel",
            "classical:2",
            "--count",
            "40",
            "--csv",
            "m.csv",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("m.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("p,m,logm,relerr"));
    for line in lines {
        let cells: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        let want = statrs_free_ln_gamma(1.0 + cells[0] / 2.0);
        assert!((cells[2] - want).abs() < 1e-9, "{line}");
    }
}

// ln Gamma(x) for x = n/2 by the recurrence from Gamma(1) and Gamma(1/2)
fn statrs_free_ln_gamma(x: f64) -> f64 {
    let (mut y, mut acc) = if (x.fract() - 0.5).abs() < 1e-12 {
        (0.5, std::f64::consts::PI.sqrt().ln())
    } else {
        (1.0, 0.0)
    };
    while y < x - 1e-9 {
        acc += y.ln();
        y += 1.0;
    }
    acc
}

#[test]
fn flat_and_certify_exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(
        &["flat", "--weight", "gevrey:1", "--subsector", "0.8:1.0"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(report(&out)["result"]["certificate"]["pass"], true);

    std::fs::write(dir.path().join("delta0.json"), r#"{"coeffs_re": [1.0]}"#).unwrap();
    let out = run(
        &["certify", "--coeffs", "delta0.json", "--weight", "gevrey:1"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let out = run(
        &[
            "certify",
            "--target",
            "regularity",
            "--seq",
            "qpower:2",
            "--prefix",
            "50",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn input_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        run(&["analyze", "--seq", "nope:1"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(&["quasi", "--seq", "gevrey:1"], dir.path())
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        run(
            &["extend", "--coeffs", "missing.json", "--eval", "0.1"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
    assert_eq!(
        run(
            &["flat", "--weight", "gevrey:1", "--subsector", "1.5:1"],
            dir.path()
        )
        .status
        .code(),
        Some(2)
    );
}

#[test]
fn reports_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = run(&["analyze", "--seq", "alphabeta:1:2"], dir.path());
    let b = run(&["analyze", "--seq", "alphabeta:1:2"], dir.path());
    assert_eq!(a.stdout, b.stdout);
}

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn threshlab(out: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_threshlab"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn run_dirs(out: &Path) -> Vec<PathBuf> {
    let mut dirs: Vec<PathBuf> = fs::read_dir(out)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    dirs.sort();
    dirs
}

#[test]
fn phase_diagram_writes_grid_boundaries_and_manifest() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(
        out.path(),
        &[
            "phase-diagram",
            "--P",
            "2",
            "--N0",
            "2",
            "--beta-max",
            "3",
            "--R-max",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dirs = run_dirs(out.path());
    assert_eq!(dirs.len(), 1);
    let grid = fs::read_to_string(dirs[0].join("psi_grid.csv")).unwrap();
    assert_eq!(grid.lines().count(), 1 + 200 * 200);
    let curves = fs::read_to_string(dirs[0].join("boundaries.csv")).unwrap();
    assert!(curves.starts_with("curve_id,beta,R\n"));
    for id in [
        "ordered|glassy",
        "ordered|paramagnetic",
        "glassy|paramagnetic",
    ] {
        assert!(curves.contains(id), "{id}");
    }
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dirs[0].join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["command"], "phase-diagram");
    assert_eq!(manifest["resolved"]["P"], "2");
    assert!(manifest["version"].is_string() && manifest["created_unix"].is_u64());
    // one summary line per output file
    assert_eq!(stdout(&o).lines().count(), 2);
    assert!(stdout(&o).contains("triple point (β, R) = (1, 1)"));
}

#[test]
fn slepian_check_prints_residuals() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(out.path(), &["slepian", "--check"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("normalization residual"), "{text}");
    assert!(text.contains("derivative residual"), "{text}");
}

#[test]
fn sweep_threshold_reruns_are_byte_identical() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("thr.cfg");
    fs::write(&cfg, "P = 2\nN0 = 2\nT = 10\nDelta0 = 1\nM = 0.4\nR = 0.3, 0.6, 0.9, 1.2, 1.5\nmode = surrogate\n").unwrap();
    let runs = out.path().join("runs");
    let args = [
        "sweep-threshold",
        "--config",
        cfg.to_str().unwrap(),
        "--trials",
        "200",
        "--seed",
        "7",
    ];
    for _ in 0..2 {
        let o = threshlab(&runs, &args);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let dirs = run_dirs(&runs);
    assert_eq!(dirs.len(), 2);
    for name in ["report.json", "cells.csv", "matrix_anomaly_rate.csv"] {
        let a = fs::read(dirs[0].join(name)).unwrap();
        let b = fs::read(dirs[1].join(name)).unwrap();
        assert_eq!(a, b, "{name}");
    }
    let report: serde_json::Value =
        serde_json::from_slice(&fs::read(dirs[0].join("report.json")).unwrap()).unwrap();
    assert_eq!(report["cells"].as_array().unwrap().len(), 5);
    assert_eq!(report["spec"]["trials"], 200);
}

#[test]
fn usage_errors_exit_2() {
    let out = tempfile::tempdir().unwrap();
    for args in [
        vec!["psi", "--nonsense"],
        vec!["frobnicate"],
        vec!["simulate", "--mode", "quick"],
        vec!["simulate", "--R", "0.3,0.6"],
        vec!["psi", "--threads", "0", "--beta", "1", "--R", "1"],
        vec!["psi", "--R", "1"],
        vec!["mismatch"],
    ] {
        let o = threshlab(out.path(), &args);
        assert_eq!(
            o.status.code(),
            Some(2),
            "{args:?}: {}",
            String::from_utf8_lossy(&o.stderr)
        );
    }
}

#[test]
fn domain_errors_exit_1_and_name_the_invariant() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(
        out.path(),
        &["simulate", "--R", "0", "--M", "0.49", "--trials", "2"],
    );
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("M"), "{err}");
    let o = threshlab(
        out.path(),
        &[
            "simulate",
            "--alpha-min",
            "0.5",
            "--alpha-max",
            "1.5",
            "--trials",
            "2",
        ],
    );
    assert_eq!(o.status.code(), Some(1));
    let o = threshlab(out.path(), &["mismatch", "--rho", "1.5"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn psi_at_the_triple_point() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(
        out.path(),
        &["psi", "--beta", "1", "--R", "1", "--label", "tp"],
    );
    assert!(o.status.success());
    let csv = fs::read_to_string(out.path().join("tp/psi.csv")).unwrap();
    let row: Vec<&str> = csv.lines().nth(1).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 2.0).abs() < 1e-12);
    assert!(row[4].starts_with("boundary("), "{}", row[4]);
    // the label is taken: the second run gets a suffix
    let o = threshlab(
        out.path(),
        &["psi", "--beta", "1", "--R", "1", "--label", "tp"],
    );
    assert!(o.status.success());
    assert!(out.path().join("tp-2/psi.csv").exists());
}

#[test]
fn simulate_writes_trials_and_summary() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(
        out.path(),
        &[
            "simulate",
            "--R",
            "0.3",
            "--trials",
            "16",
            "--mode",
            "exact",
            "--beta",
            "0.5,1",
            "--threads",
            "2",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let dir = &run_dirs(out.path())[0];
    let trials = fs::read_to_string(dir.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 17);
    assert!(trials.starts_with("trial_index,seed,m_hat,alpha_hat,sq_error,anomalous"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["psi"].as_array().unwrap().len(), 2);
}

#[test]
fn json_config_and_flag_precedence() {
    let out = tempfile::tempdir().unwrap();
    let cfg = out.path().join("p.json");
    fs::write(&cfg, r#"{"P": 2, "N0": 2, "beta": [0.5, 3], "R": 0.5}"#).unwrap();
    let runs = out.path().join("runs");
    let o = threshlab(
        &runs,
        &[
            "psi",
            "--config",
            cfg.to_str().unwrap(),
            "--R",
            "1.5",
            "--label",
            "j",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(runs.join("j/psi.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv
        .lines()
        .skip(1)
        .all(|l| l.split(',').nth(1).unwrap().parse::<f64>().unwrap() == 1.5));
}

#[test]
fn mismatch_reports_its_triple_point() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(
        out.path(),
        &["mismatch", "--rho", "0.5", "--resolution", "20"],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(
        stdout(&o).contains("triple point (β, R) = (0.5, 0.25)"),
        "{}",
        stdout(&o)
    );
}

#[test]
fn bounds_and_sweep_psi_run() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(out.path(), &["bounds", "--R", "0.1,0.2,2", "--T", "40"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("PASS large-rate-disagreement"));
    let o = threshlab(
        out.path(),
        &[
            "sweep-psi",
            "--beta",
            "0.5,2",
            "--R",
            "0.5",
            "--T",
            "6,8",
            "--trials",
            "4",
            "--emit-plot-data",
            "--label",
            "sp",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.path().join("sp/plot_data.csv").exists());
    assert!(out.path().join("sp/matrix_gap.csv").exists());
}

#[test]
fn joint_diagram_needs_an_amplitude_range() {
    let out = tempfile::tempdir().unwrap();
    let o = threshlab(out.path(), &["phase-diagram-joint", "--resolution", "10"]);
    assert_eq!(o.status.code(), Some(2));
    let o = threshlab(
        out.path(),
        &[
            "phase-diagram-joint",
            "--alpha-min",
            "0.5",
            "--resolution",
            "10",
            "--anomalous",
        ],
    );
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
}

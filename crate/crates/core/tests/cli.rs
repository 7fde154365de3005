use std::fs;
use std::process::Command;

use polyhho::experiment::{fit_slope, run_experiment, ExperimentConfig, ExperimentKind};

const BIN: &str = env!("CARGO_BIN_EXE_hho-cond");
const FIXTURE: &str = include_str!("fixtures/convergence.csv");

fn parse_csv(text: &str) -> Vec<Vec<String>> {
    text.lines().skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

fn column(rows: &[Vec<String>], i: usize, k: &str) -> Vec<f64> {
    rows.iter().filter(|r| r[9] == k).map(|r| r[i].parse().unwrap()).collect()
}

#[test]
fn fixture_slopes_are_in_band() {
    let rows = parse_csv(FIXTURE);
    for (k, lo, hi) in [("0", 0.7, 1.4), ("1", 1.7, 2.4)] {
        let h = column(&rows, 1, k);
        let kappa = column(&rows, 7, k);
        let err = column(&rows, 8, k);
        let hinv: Vec<f64> = h.iter().map(|x| 1.0 / x).collect();
        let s = fit_slope(&hinv, &kappa).unwrap();
        assert!((1.6..=2.4).contains(&s), "{s}");
        let s = fit_slope(&h, &err).unwrap();
        assert!(s >= lo && s <= hi, "{s}");
    }
}

#[test]
fn rerun_reproduces_fixture() {
    let mut cfg = ExperimentConfig::new(ExperimentKind::Convergence);
    cfg.ns = vec![4, 8, 16, 32];
    cfg.ks = vec![0, 1];
    let fresh = parse_csv(&run_experiment(&cfg).unwrap().csv_string());
    let pinned = parse_csv(FIXTURE);
    assert_eq!(fresh.len(), pinned.len());
    for (a, b) in fresh.iter().zip(&pinned) {
        for (x, y) in a.iter().zip(b) {
            match (x.parse::<f64>(), y.parse::<f64>()) {
                (Ok(x), Ok(y)) => assert!((x - y).abs() <= 1e-8 * y.abs().max(1e-300), "{x} vs {y}"),
                _ => assert_eq!(x, y),
            }
        }
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let run = |threads: usize| {
        let mut cfg = ExperimentConfig::new(ExperimentKind::Penta);
        cfg.ns = vec![8, 16, 24];
        cfg.ks = vec![0, 1];
        cfg.threads = Some(threads);
        run_experiment(&cfg).unwrap().csv_string()
    };
    assert_eq!(run(1), run(4));
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("rows.csv");
    fs::write(&cfg, format!("experiment = penta\nn = 8,16\nk = 0\nout = {}\n", out.display())).unwrap();
    let status = Command::new(BIN)
        .args(["--config", cfg.to_str().unwrap(), "--experiment", "convergence", "--n", "2,4,8"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    let text = fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("hMin,hMax,NbCells,NbInternalEdges,Epsilon,MinEig,MaxEig,Condition,EnergyError"));
    let rows = parse_csv(&text);
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| !r[8].is_empty()));
}

#[test]
fn stdout_output_and_summary() {
    let out = Command::new(BIN)
        .args(["--experiment", "cut_eps", "--n", "4", "--eps", "1e-2,1e-3,1e-4", "--k", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8(out.stdout).unwrap();
    assert_eq!(stdout.lines().count(), 4);
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("slope MaxEig vs 1/Epsilon"));
}

#[test]
fn configuration_errors_exit_with_2() {
    let cases: &[&[&str]] = &[
        &["--experiment", "nonsense"],
        &["--experiment", "penta", "--k", "x"],
        &["--experiment", "penta", "--stab", "hdg"],
        &["--experiment", "penta", "--stab", "kminus1", "--k", "1"],
        &["--experiment", "penta", "--basis", "chebyshev"],
        &["--experiment", "penta", "--threads", "0"],
        &["--k", "1"],
        &["--experiment", "penta", "--no-such-flag"],
        &["--config", "/nonexistent/file.cfg"],
    ];
    for args in cases {
        let status = Command::new(BIN).args(*args).output().unwrap().status;
        assert_eq!(status.code(), Some(2), "{args:?}");
    }
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "experiment = penta\ncolour = blue\n").unwrap();
    let status = Command::new(BIN).args(["--config", cfg.to_str().unwrap()]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn numerical_failure_exits_with_3() {
    // a single-cell mesh has no internal faces, so every row fails
    let out = Command::new(BIN)
        .args(["--experiment", "convergence", "--n", "1", "--k", "0"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn help_exits_cleanly() {
    let out = Command::new(BIN).arg("--help").output().unwrap();
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    for flag in [
        "--experiment",
        "--k",
        "--l-mode",
        "--stab",
        "--n",
        "--eps",
        "--levels",
        "--basis",
        "--out",
        "--threads",
        "--dense-threshold",
    ] {
        assert!(text.contains(flag), "{flag}");
    }
}

mod common;

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use common::*;
use perisolve::fourier::analyze;
use perisolve::io::{read_samples_csv, ProblemFile};
use perisolve::solver::solve;
use perisolve::symbol::ProblemSpec;
use perisolve::TrigPolynomial;

fn perisolve(args: &[&str], threads: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_perisolve"));
    cmd.args(args).env_remove("PERISOLVE_THREADS");
    if let Some(t) = threads {
        cmd.env("PERISOLVE_THREADS", t);
    }
    cmd.output().expect("binary runs")
}

fn write_problem(dir: &Path, name: &str, p: &ProblemSpec, f: TrigPolynomial) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(
        &path,
        serde_json::to_string_pretty(&ProblemFile::new(p, f)).unwrap(),
    )
    .unwrap();
    path
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn solve_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "p.json", &kernel_problem(), kernel_forcing());
    let csv = dir.path().join("u.csv");
    let out = perisolve(
        &[
            "solve",
            "--problem",
            s(&problem),
            "--modes",
            "8",
            "--grid",
            "64",
            "--out",
            s(&csv),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    let samples =
        read_samples_csv(std::io::BufReader::new(std::fs::File::open(&csv).unwrap())).unwrap();
    let back = analyze(&samples, 8).unwrap();
    let want = solve(&kernel_problem(), &kernel_forcing(), 8).unwrap().u;
    assert!(back.max_coeff_distance(&want) <= 1e-12);
}

#[test]
fn verify_reports_small_defects() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "p.json", &damped(), cos_t());
    let out = perisolve(&["verify", "--problem", s(&problem), "--grid", "128"], None);
    assert_eq!(out.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(report["coeff_defect"].as_f64().unwrap() <= 1e-10);
    assert_eq!(report["pass"], serde_json::Value::Bool(true));
    for order in report["observed_orders"].as_array().unwrap() {
        assert!((1.7..=2.3).contains(&order.as_f64().unwrap()));
    }
}

#[test]
fn resonance_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let flat = ProblemSpec::ode(1, scalar(0.0)).unwrap();
    let problem = write_problem(dir.path(), "p.json", &flat, cos_t());
    let out = perisolve(
        &[
            "solve",
            "--problem",
            s(&problem),
            "--out",
            s(&dir.path().join("u.csv")),
        ],
        None,
    );
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Resonance at k=0"));
    assert!(out.stdout.is_empty());

    let out = perisolve(&["oracle", "--problem", s(&problem), "--grid", "16"], None);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn usage_and_input_errors_exit_with_three() {
    assert_eq!(
        perisolve(&["solve", "--modes", "-1"], None).status.code(),
        Some(3)
    );
    assert_eq!(
        perisolve(&["solve", "--problem", "/nonexistent/p.json"], None)
            .status
            .code(),
        Some(3)
    );
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(
        &bad,
        r#"{"n": 1, "dim": 2, "A": {"re": [[1.0]]}, "forcing": {"dim": 2, "coeffs": []}}"#,
    )
    .unwrap();
    assert_eq!(
        perisolve(&["solve", "--problem", s(&bad)], None)
            .status
            .code(),
        Some(3)
    );
    assert_eq!(
        perisolve(
            &["scan", "--problem", s(&bad), "--modes", "2"],
            Some("zero")
        )
        .status
        .code(),
        Some(3)
    );
    assert_eq!(perisolve(&["--help"], None).status.code(), Some(0));
}

#[test]
fn besov_of_a_constant_prints_root_two_pi() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("one.json");
    let one = TrigPolynomial::scalar(&[(0, c(1.0, 0.0))]);
    std::fs::write(&path, serde_json::to_string(&one).unwrap()).unwrap();
    let out = perisolve(
        &[
            "besov",
            "--function",
            s(&path),
            "--s",
            "1",
            "--p",
            "2",
            "--q",
            "2",
        ],
        None,
    );
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let value: f64 = text.trim().split('\t').nth(1).unwrap().parse().unwrap();
    assert!((value - (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-14);
}

#[test]
fn audit_and_scan_reports() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "p.json", &damped(), cos_t());
    let report = dir.path().join("a.json");
    let out = perisolve(
        &[
            "audit",
            "--problem",
            s(&problem),
            "--kmax",
            "100000",
            "--report",
            s(&report),
        ],
        None,
    );
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let audit: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(audit["m_bound"].as_array().unwrap().len(), 4);
    assert_eq!(audit["step1"]["sup_norm"].as_f64(), Some(2.0));
    assert_eq!(
        audit["step2"]["identity_holds"],
        serde_json::Value::Bool(false)
    );

    let out = perisolve(&["scan", "--problem", s(&problem), "--modes", "3"], None);
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "k,sigma_min,sigma_max,cond");
    assert_eq!(lines.len(), 8);
    assert!(lines[4].starts_with("0,1.0000000000000000e0"));
}

#[test]
fn reports_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let problem = write_problem(dir.path(), "p.json", &kernel_problem(), kernel_forcing());
    let runs: Vec<Vec<u8>> = ["1", "3", "8"]
        .iter()
        .map(|t| {
            let out = perisolve(
                &["verify", "--problem", s(&problem), "--grid", "64"],
                Some(t),
            );
            assert!(out.status.success());
            out.stdout
        })
        .collect();
    assert!(runs.windows(2).all(|w| w[0] == w[1]));
}

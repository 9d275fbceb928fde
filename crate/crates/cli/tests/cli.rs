use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use herman_cli::{Payload, Report};

fn cli(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_herman-cli"))
        .args(args)
        .current_dir(dir)
        .env("HERMAN_REPORT_DIR", dir.join("reports"))
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn report_path(out: &Output) -> PathBuf {
    let stdout = String::from_utf8_lossy(&out.stdout);
    let line = stdout.lines().find_map(|l| l.strip_prefix("report: ")).expect("report line");
    PathBuf::from(line)
}

fn load(dir: &Path, out: &Output) -> Report {
    let path = report_path(out);
    let path = if path.is_absolute() { path } else { dir.join(path) };
    Report::from_json(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn argmax_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["exact", "--n", "9", "--functional", "ET", "--argmax"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = load(dir.path(), &out);
    let Payload::Argmax(best) = &report.payload else { panic!("payload kind") };
    assert!((best.max_value - 12.0).abs() < 1e-9);
    assert!(best.maximizer_gaps.iter().all(|g| g.sorted() == [3, 3, 3]));
    assert!(report.passed());
}

#[test]
fn recursion_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["verify-recursion", "--n-max", "8"]);
    assert_eq!(code(&out), 0);
    let Payload::Recursion(r) = load(dir.path(), &out).payload else { panic!() };
    assert!(r.max_residual < 1e-10);
    assert_eq!(r.rows.len(), 6);
}

#[test]
fn scan_q_example() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["scan-q", "--step", "0.000833", "--delta", "0.03"]);
    assert_eq!(code(&out), 0);
    let Payload::QScan(q) = load(dir.path(), &out).payload else { panic!() };
    assert!(q.scan.min >= 0.7599);
}

#[test]
fn failing_invariant_exits_one_with_witness() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["scan-ratio", "--n-max", "30", "--threshold", "0.95"]);
    assert_eq!(code(&out), 1);
    let report = load(dir.path(), &out);
    let failed: Vec<_> = report.failures().collect();
    assert_eq!(failed.len(), 1);
    assert!(failed[0].witness.as_ref().unwrap().get("gaps").is_some());

    let out = cli(dir.path(), &["verify-recursion", "--n-max", "4", "--tolerance", "1e-30"]);
    assert_eq!(code(&out), 1);
}

#[test]
fn bad_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    for args in [
        &["exact"][..],
        &["exact", "--n", "2"],
        &["simulate", "--tokens", "1,2,3"],
        &["simulate", "--n", "9", "--gaps", "3,3"],
        &["simulate", "--n", "8", "--gaps", "3,3,3"],
        &["exact", "--n", "5", "--functional", "base"],
        &["exact", "--n", "5", "--exact", "--float"],
        &["scan-q", "--step", "-1"],
        &["scan-ratio", "--n", "10", "--n-max", "5"],
        &["exact", "--n", "3", "--functional", "base", "--base", "4"],
        &["frobnicate"],
    ] {
        let out = cli(dir.path(), args);
        assert_eq!(code(&out), 2, "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    }
}

#[test]
fn capacity_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&cli(dir.path(), &["exact", "--n", "40"])), 3);
    assert_eq!(code(&cli(dir.path(), &["exact", "--n", "14", "--exact"])), 3);
    assert_eq!(code(&cli(dir.path(), &["verify-recursion", "--n-max", "13"])), 3);
    assert_eq!(
        code(&cli(dir.path(), &["simulate", "--n", "9", "--runs", "10", "--t-max", "0"])),
        3
    );
}

#[test]
fn rerun_needs_force() {
    let dir = tempfile::tempdir().unwrap();
    let args = ["scan-ratio", "--n-max", "20"];
    let first = cli(dir.path(), &args);
    assert_eq!(code(&first), 0);
    let again = cli(dir.path(), &args);
    assert_eq!(code(&again), 2);
    assert!(String::from_utf8_lossy(&again.stderr).contains("--force"));
    let forced = cli(dir.path(), &["scan-ratio", "--n-max", "20", "--force"]);
    assert_eq!(code(&forced), 0);
    assert_eq!(report_path(&first), report_path(&forced));
    let name = report_path(&first).file_name().unwrap().to_string_lossy().into_owned();
    assert!(name.starts_with("scan-ratio-") && name.ends_with(".json"));
}

#[test]
fn report_round_trips_with_sorted_keys() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["simulate", "--n", "7", "--runs", "2000", "--seed", "5"]);
    assert_eq!(code(&out), 0);
    let text = std::fs::read_to_string(report_path(&out)).unwrap();
    let report = Report::from_json(&text).unwrap();
    assert_eq!(report.to_json().unwrap(), text);
    assert_eq!(Report::from_json(&report.to_json().unwrap()).unwrap(), report);

    let value: serde_json::Value = serde_json::from_str(&text).unwrap();
    let keys: Vec<_> = value.as_object().unwrap().keys().cloned().collect();
    assert_eq!(keys, ["checks", "payload", "provenance", "spec", "timestamp", "tool_version"]);
    let order: Vec<usize> = keys.iter().map(|k| text.find(&format!("\"{k}\"")).unwrap()).collect();
    assert!(order.windows(2).all(|w| w[0] < w[1]));
    assert_eq!(report.provenance.seed, Some(5));
}

#[test]
fn replay_reproduces_payload() {
    let dir = tempfile::tempdir().unwrap();
    let run = |name: &str| {
        let out = cli(
            dir.path(),
            &["simulate", "--n", "11", "--runs", "5000", "--seed", "99", "--out", name],
        );
        assert_eq!(code(&out), 0);
        load(dir.path(), &out)
    };
    let (a, b) = (run("a.json"), run("b.json"));
    assert_eq!(a.payload, b.payload);
    assert_eq!(a.checks, b.checks);
    assert_eq!(a.provenance, b.provenance);
    let c = cli(dir.path(), &["simulate", "--n", "11", "--runs", "5000", "--seed", "100", "--out", "c.json"]);
    assert_ne!(load(dir.path(), &c).payload, a.payload);
}

#[test]
fn csv_projections() {
    let dir = tempfile::tempdir().unwrap();
    let read_csv = |out: &Output| std::fs::read_to_string(report_path(out).with_extension("csv")).unwrap();

    let out = cli(dir.path(), &["exact", "--n", "5", "--exact", "--csv"]);
    assert_eq!(code(&out), 0);
    let text = read_csv(&out);
    let lines: Vec<_> = text.lines().collect();
    assert_eq!(lines[0], "n,tokens,value,exact");
    assert_eq!(lines.len(), 17);
    assert!(lines.contains(&"5,1 2 3,2.3999999999999999e0,12/5"));

    let out = cli(dir.path(), &["distribution", "--n", "3", "--tokens", "1,2,3", "--t-max", "3", "--csv"]);
    let text = read_csv(&out);
    assert_eq!(text.lines().next().unwrap(), "t,P(T<=t)");
    assert_eq!(text.lines().nth(2).unwrap(), "1,7.5000000000000000e-1");

    let out = cli(dir.path(), &["scan-q", "--step", "0.01", "--sample-step", "0.25", "--csv"]);
    assert_eq!(code(&out), 0);
    let text = read_csv(&out);
    assert_eq!(text.lines().next().unwrap(), "u,v,Q");
    // Lattice i + j <= 4 at spacing 1/4.
    assert_eq!(text.lines().count(), 1 + 15);

    let out = cli(dir.path(), &["scan-ratio", "--n-max", "10", "--csv"]);
    assert_eq!(code(&out), 2);
    assert!(!dir.path().join("reports").read_dir().unwrap().any(|e| {
        e.unwrap().file_name().to_string_lossy().starts_with("scan-ratio")
    }));
}

#[test]
fn spec_file_input() {
    let dir = tempfile::tempdir().unwrap();
    let spec = r#"{"command": "exact", "n": 6, "functional": "growth"}"#;
    std::fs::write(dir.path().join("spec.json"), spec).unwrap();
    let out = cli(dir.path(), &["--spec", "spec.json", "--out", "growth.json"]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let report = load(dir.path(), &out);
    let Payload::Values(table) = &report.payload else { panic!() };
    let max = table.rows.iter().map(|r| r.value).fold(0.0, f64::max);
    assert!((max - 1.5).abs() < 1e-9);
    assert!(dir.path().join("growth.json").exists());
}

#[test]
fn gaps_are_canonicalized_in_the_echo() {
    let dir = tempfile::tempdir().unwrap();
    let out = cli(dir.path(), &["distribution", "--gaps", "2,2,3", "--t-max", "10"]);
    assert_eq!(code(&out), 0);
    let report = load(dir.path(), &out);
    let config = report.spec.config.unwrap();
    assert_eq!((config.n(), config.tokens()), (7, &[1, 3, 5][..]));
}

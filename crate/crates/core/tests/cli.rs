//! The `opsplit` binary: subcommands, exit codes, output root and artifacts.

use std::path::Path;
use std::process::{Command, Output};

use opsplit::experiments::{artifacts::read_trace_csv, ReportFile, CSV_COLUMNS, OUTPUT_ENV};

fn opsplit(args: &[&str], out_root: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_opsplit")).args(args).env(OUTPUT_ENV, out_root).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn list_names_every_entry() {
    let dir = tempfile::tempdir().unwrap();
    let o = opsplit(&["list"], dir.path());
    assert!(o.status.success());
    for name in ["km-fpr", "fbs-rates", "square-feasibility", "distributed-admm", "summable-lemma"] {
        assert!(stdout(&o).contains(name), "{name}");
    }
}

#[test]
fn run_writes_artifacts_under_the_output_root() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "abs.json", r#"{"problem": "abs_example", "eps": 0.1, "iters": 100}"#);
    let o = opsplit(&["run", &cfg], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let out = dir.path().join("abs_example-prs");
    let rows = read_trace_csv(&out.join("trace.csv")).unwrap();
    assert_eq!(rows.len(), 101);
    let header = std::fs::read_to_string(out.join("trace.csv")).unwrap();
    assert_eq!(header.lines().next().unwrap(), CSV_COLUMNS.join(","));
    let fpr = std::fs::read_to_string(out.join("fpr.dat")).unwrap();
    assert_eq!(fpr.lines().filter(|l| !l.starts_with('#')).count(), 101);
    let report: ReportFile = serde_json::from_str(&std::fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert!(report.pass);
    assert!(report.checks.iter().all(|c| c.pass));
}

#[test]
fn solver_failure_gives_nonzero_exit_and_a_failed_report() {
    let dir = tempfile::tempdir().unwrap();
    // gamma far above 2 beta: FBS refuses to run.
    let cfg = write_config(dir.path(), "bad.json", r#"{"problem": "lasso", "algorithm": "fbs", "gamma": 50.0, "iters": 10}"#);
    let o = opsplit(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(1));
    let report: ReportFile = serde_json::from_str(&std::fs::read_to_string(dir.path().join("lasso-fbs/report.json")).unwrap()).unwrap();
    assert!(!report.pass);
    assert!(report.error.unwrap().contains("gamma"));
    let r = opsplit(&["report", &dir.path().to_string_lossy()], dir.path());
    assert_eq!(r.status.code(), Some(1));
    assert!(stdout(&r).contains("FAIL"));
}

#[test]
fn bad_inputs_are_usage_errors() {
    let dir = tempfile::tempdir().unwrap();
    let o = opsplit(&["reproduce", "unknown"], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("km-fpr"));
    let cfg = write_config(dir.path(), "typo.json", "{\n \"problem\": \"square\",\n \"algorithm\": \"newton\"\n}");
    let o = opsplit(&["run", &cfg], dir.path());
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("feasibility"));
    let o = opsplit(&["run", "/nonexistent/config.json"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn reproduce_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = opsplit(&["reproduce", "square-feasibility"], dir.path());
    assert!(o.status.success(), "{}", stdout(&o));
    let report: ReportFile = serde_json::from_str(&std::fs::read_to_string(dir.path().join("square-feasibility/report.json")).unwrap()).unwrap();
    assert_eq!(report.criterion, Some(9));
    let factor = report.metrics["gap_factor"];
    assert!((1.0..=2.0 + 1e-12).contains(&factor), "{factor}");
    let r = opsplit(&["report", &dir.path().to_string_lossy()], dir.path());
    assert!(r.status.success());
    assert!(stdout(&r).contains("PASS square-feasibility"));
}

#[test]
fn same_config_gives_identical_files() {
    let dir = tempfile::tempdir().unwrap();
    let body = r#"{"problem": "affine_pair", "algorithm": "feasibility", "dim": 8, "shared": 2, "extra": 3, "seed": 4,
                   "z0": {"seed": 1, "scale": 3.0}, "iters": 400}"#;
    let cfg = write_config(dir.path(), "pair.json", body);
    let a = dir.path().join("a");
    let b = dir.path().join("b");
    assert!(opsplit(&["run", &cfg], &a).status.success());
    assert!(opsplit(&["run", &cfg], &b).status.success());
    for f in ["trace.csv", "report.json", "fpr.dat"] {
        let x = std::fs::read(a.join("affine_pair-feasibility").join(f)).unwrap();
        let y = std::fs::read(b.join("affine_pair-feasibility").join(f)).unwrap();
        assert!(x == y, "{f} differs");
    }
}

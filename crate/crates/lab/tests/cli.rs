use std::path::Path;
use std::process::{Command, Output};

use fracmap_lab::Report;

fn fracmap(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fracmap")).args(args).output().unwrap()
}

fn read_report(dir: &Path) -> Report {
    serde_json::from_str(&std::fs::read_to_string(dir.join("report.json")).unwrap()).unwrap()
}

#[test]
fn non_power_of_two_grid_is_a_config_error() {
    let out = fracmap(&["hodge", "--grid", "12"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("points_per_axis"));
}

#[test]
fn unknown_experiment_is_rejected() {
    assert_eq!(fracmap(&["no-such-experiment"]).status.code(), Some(2));
}

#[test]
fn every_experiment_has_a_subcommand() {
    let out = fracmap(&["list"]);
    let text = String::from_utf8_lossy(&out.stdout);
    for e in fracmap_lab::EXPERIMENTS {
        assert!(text.contains(e.id));
    }
}

#[test]
fn reports_are_written_and_deterministic() {
    let tmp = tempfile::tempdir().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = fracmap(&["partition-of-unity", "--seed", "3", "--out", dir.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0));
    }
    assert!(a.join("partition.csv").exists());
    let (ra, rb) = (read_report(&a), read_report(&b));
    assert!(ra.passed);
    assert_eq!(ra.without_timing(), rb.without_timing());
    assert_eq!(
        std::fs::read(a.join("partition.csv")).unwrap(),
        std::fs::read(b.join("partition.csv")).unwrap()
    );
}

#[test]
fn calibrate_then_regress_and_refuse_other_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("lorentz.json");
    let file = file.to_str().unwrap();
    assert_eq!(fracmap(&["calibrate", "lorentz", "--seed", "5", "--out", file]).status.code(), Some(0));

    let out_dir = tmp.path().join("same");
    let out = fracmap(&["lorentz-algebra", "--seed", "5", "--constants", file, "--out", out_dir.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let report = read_report(&out_dir);
    let regressions: Vec<_> = report.verdicts.iter().filter(|v| v.name.starts_with("regression_")).collect();
    assert!(!regressions.is_empty());
    assert!(regressions.iter().all(|v| v.bound - v.value >= 0.0));

    let out = fracmap(&["lorentz-algebra", "--seed", "5", "--constants", file, "--grid", "2048"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("refusing"));
}

#[test]
fn failing_verdicts_give_exit_code_one() {
    // a 64-point grid is too coarse to resolve the Poincare exponent
    let out = fracmap(&["poincare-scaling", "--grid", "64"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("[FAIL]"));
}

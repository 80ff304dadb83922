use std::path::Path;
use std::process::{Command, Output};

fn ecofog(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ecofog")).args(args).arg("--out-dir").arg(out).output().unwrap()
}

fn tracking_scenario() -> String {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/tracking.json").display().to_string()
}

#[test]
fn solve_rap_writes_result_and_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(&["solve-rap", "--dag", "DAG1", "--alloc", "fog", "--tdag-max", "0.3", "--i-max", "50"], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("rap.json")).unwrap()).unwrap();
    assert_eq!(json["feasible"], true);
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().next(), Some("m,E_TOT,E_NET,lambda"));
    assert_eq!(trace.lines().count(), 51);
}

#[test]
fn infeasible_problem_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(&["solve-rap", "--dag", "DAG1", "--alloc", "mobile", "--tdag-max", "0.001"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let out = ecofog(&["solve", "--dag", "DAG1", "--strategy", "cloud", "--tdag-max", "0.001"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn configuration_errors_exit_with_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(&["solve", "--dag", "missing.json"], dir.path());
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing.json"));
    let out = ecofog(&["solve-rap", "--dag", "DAG1", "--alloc", "M,X,M"], dir.path());
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn validate_reports_dag_violations() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    let good = dir.path().join("good.json");
    ecofog::dag::builtin_dag(ecofog::dag::BuiltinDag::Dag2, 1).save(&good).unwrap();
    let mut json: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&good).unwrap()).unwrap();
    json["tasks"][3] = serde_json::json!(-1.0);
    std::fs::write(&bad, json.to_string()).unwrap();
    let ok = Command::new(env!("CARGO_BIN_EXE_ecofog")).args(["validate", "--dag"]).arg(&good).output().unwrap();
    assert_eq!(ok.status.code(), Some(0));
    let out = Command::new(env!("CARGO_BIN_EXE_ecofog")).args(["validate", "--dag"]).arg(&bad).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stdout).contains("positive task size"));
}

#[test]
fn solve_writes_result_and_generations() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(
        &["solve", "--dag", "DAG3", "--strategy", "agtas", "--seed", "3", "--ps", "6", "--g-max", "3", "--i-max", "60"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("result.json")).unwrap()).unwrap();
    assert_eq!(json["strategy"], "agtas");
    assert_eq!(json["rap_calls"], 24);
    let rows = std::fs::read_to_string(dir.path().join("generations.csv")).unwrap().lines().count();
    assert_eq!(rows, 1 + 4);
}

#[test]
fn sweep_writes_one_record_per_trial_and_value() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(
        &[
            "sweep", "--dag", "DAG1", "--strategy", "fog", "--axis", "tdag_max", "--values", "0.3,0.6", "--trials", "2",
            "--i-max", "40",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let records = std::fs::read_to_string(dir.path().join("records.csv")).unwrap();
    assert_eq!(records.lines().count(), 1 + 4);
    assert!(dir.path().join("aggregates.csv").exists());
}

#[test]
fn track_replays_the_timeline() {
    let dir = tempfile::tempdir().unwrap();
    let out = ecofog(&["track", "--scenario", &tracking_scenario()], dir.path());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let trace = std::fs::read_to_string(dir.path().join("trace.csv")).unwrap();
    assert_eq!(trace.lines().count(), 1 + 5000);
    let regimes = std::fs::read_to_string(dir.path().join("regimes.csv")).unwrap();
    assert_eq!(regimes.lines().count(), 1 + 5);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use risuav::io::{parse_phases_csv, parse_sweep_csv, parse_trajectory_csv};
use risuav::Scenario;
use serde_json::Value;

fn risuav(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_risuav")).args(args).output().expect("binary runs")
}

fn small_config(dir: &Path, edit: impl FnOnce(&mut Value)) -> String {
    let mut c: Value = serde_json::from_str(risuav::scenario::DEFAULT_CONFIG).unwrap();
    c["T"] = 10.0.into();
    c["M"] = 3.into();
    c["q0"] = serde_json::json!([-100.0, 20.0]);
    c["qF"] = serde_json::json!([100.0, 20.0]);
    edit(&mut c);
    let path = dir.join("scenario.json");
    fs::write(&path, serde_json::to_string_pretty(&c).unwrap()).unwrap();
    path.to_str().unwrap().to_owned()
}

fn read(path: impl AsRef<Path>) -> String {
    fs::read_to_string(path.as_ref()).unwrap_or_else(|e| panic!("{}: {e}", path.as_ref().display()))
}

#[test]
fn optimize_writes_feasible_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = dir.path().join("run");
    let o = risuav(&["optimize", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));

    let scenario = Scenario::from_config_str(&read(&cfg)).unwrap();
    let traj = parse_trajectory_csv(&read(out.join("trajectory.csv"))).unwrap();
    assert_eq!(traj.len(), 10);
    assert!(traj.check_mobility(&scenario).is_empty());
    let phases = parse_phases_csv(&read(out.join("phases.csv"))).unwrap();
    assert_eq!(phases.theta.len(), 10);
    assert!(phases.theta.iter().all(|row| row.len() == 3));
    assert!(read(out.join("iterations.csv")).starts_with("iter,avg_rate_bps_hz,surrogate_obj,max_step_m,subproblem_sweeps"));
    assert!(out.join("realization.json").exists());

    let summary: Value = serde_json::from_str(&read(out.join("summary.json"))).unwrap();
    let result = &summary["results"];
    assert!(result["avg_rate_bps_hz"].as_f64().unwrap() > 0.0, "{summary}");
    assert_eq!(result["scenario_hash"].as_str().unwrap(), scenario.hash());
}

#[test]
fn optimize_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    for run in ["a", "b"] {
        let out = dir.path().join(run);
        let o = risuav(&["optimize", "--config", &cfg, "--seed", "7", "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0));
    }
    for file in ["summary.json", "trajectory.csv", "phases.csv", "iterations.csv", "realization.json"] {
        assert_eq!(read(dir.path().join("a").join(file)), read(dir.path().join("b").join(file)), "{file}");
    }
}

#[test]
fn heuristic_benchmarks_share_a_trajectory() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = dir.path().join("bench");
    let o = risuav(&["benchmark", "--config", &cfg, "--algorithms", "ht_pb,ht_npb", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(read(out.join("ht_pb/trajectory.csv")), read(out.join("ht_npb/trajectory.csv")));
    assert_eq!(read(out.join("comparison.csv")).lines().count(), 3);
}

#[test]
fn singleton_benchmark_gives_one_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = dir.path().join("one");
    let o = risuav(&["benchmark", "--config", &cfg, "--algorithms", "jtpb", "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let table = read(out.join("comparison.csv"));
    assert_eq!(table.lines().count(), 2);
    assert!(table.lines().nth(1).unwrap().starts_with("JT&PB,"));
}

#[test]
fn sweep_with_one_flight_time_has_four_rows() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |_| {});
    let out = dir.path().join("sweep");
    let o = risuav(&[
        "sweep-t", "--config", &cfg, "--t-values", "12", "--npb-mode", "zero", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = parse_sweep_csv(&read(out.join("sweep.csv"))).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.t_s == 12.0 && r.stderr == 0.0));
    let best = rows.iter().find(|r| r.algorithm == "JT&PB").unwrap().avg_rate_bps_hz;
    assert!(rows.iter().all(|r| r.avg_rate_bps_hz <= best));
}

#[test]
fn verify_lemma_writes_report() {
    let dir = tempfile::tempdir().unwrap();
    let o = risuav(&["verify-lemma", "--points", "200", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let report: Value = serde_json::from_str(&read(dir.path().join("lemma_report.json"))).unwrap();
    for key in ["points_tested", "min_leading_minor", "min_det_surplus", "max_fd_rel_error"] {
        assert!(report.get(key).is_some(), "missing {key}");
    }
    assert_eq!(report["points_tested"], 200);
}

#[test]
fn missing_key_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| {
        c.as_object_mut().unwrap().remove("vmax");
    });
    let o = risuav(&["optimize", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("vmax"));
    assert!(!dir.path().join("x").exists());
}

#[test]
fn unreachable_endpoint_is_infeasible() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path(), |c| c["T"] = 3.0.into());
    let o = risuav(&["optimize", "--config", &cfg, "--out", dir.path().join("x").to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn usage_errors_and_help() {
    assert_eq!(risuav(&["optimize", "--bogus"]).status.code(), Some(2));
    assert_eq!(risuav(&["optimize", "--npb-mode", "sometimes"]).status.code(), Some(2));
    assert_eq!(risuav(&["optimize", "--epsilon", "0", "--config", "/nonexistent.json"]).status.code(), Some(2));
    assert_eq!(risuav(&["--help"]).status.code(), Some(0));
}

//! End-to-end checks of the installed binary: exit codes, artifact files,
//! and the preset/sweep/report round trip.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_camnet")
}

fn tmp(sub: &str) -> PathBuf {
    let dir = Path::new(env!("CARGO_TARGET_TMPDIR")).join(sub);
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str]) -> Output {
    Command::new(bin()).args(args).output().expect("spawning camnet")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

#[test]
fn optimize_on_preset_reaches_tolerance_and_writes_artifacts() {
    let dir = tmp("optimize_ok");
    let out_s = dir.to_str().unwrap();
    let out = run(&["optimize", "@base", "--seed", "1", "--out", out_s]);
    assert_eq!(code(&out), 0, "stdout: {}", String::from_utf8_lossy(&out.stdout));

    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.join("solution.json")).unwrap()).unwrap();
    assert_eq!(doc["stop_reason"], "tolerance");
    assert_eq!(doc["cameras"].as_array().unwrap().len(), 6);
    assert!(doc["best_err_m2"].as_f64().unwrap() <= doc["tolerance_m2"].as_f64().unwrap());

    let trace = std::fs::read_to_string(dir.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,best_err_m2,eval_ms_classify,eval_ms_cluster,eval_ms_distance,kernel_width"
    );
    assert_eq!(lines.count() as u64, doc["iterations"].as_u64().unwrap());
}

#[test]
fn optimize_exhausting_budget_exits_two() {
    let dir = tmp("optimize_budget");
    let out = run(&[
        "optimize",
        "@base",
        "--tolerance",
        "0",
        "--max-iters",
        "1",
        "--out",
        dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 2);
    assert!(String::from_utf8_lossy(&out.stdout).contains("stop=iteration_limit"));
}

#[test]
fn missing_scenario_file_exits_one() {
    let out = run(&["optimize", "/no/such/scenario.json"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("error"));
}

#[test]
fn unknown_preset_lists_available_names() {
    let out = run(&["optimize", "@nope"]);
    assert_eq!(code(&out), 1);
    assert!(String::from_utf8_lossy(&out.stderr).contains("base"));
}

#[test]
fn preset_writes_a_scenario_that_parses_back_identically() {
    let dir = tmp("preset_roundtrip");
    let path = dir.join("base.json");
    let out = run(&["preset", "base", "--out", path.to_str().unwrap()]);
    assert_eq!(code(&out), 0);

    let text = std::fs::read_to_string(&path).unwrap();
    let parsed = camnet_core::scene::parse_scenario(&text).unwrap();
    assert_eq!(
        camnet_core::scene::serialize_scenario(&parsed),
        camnet_core::scene::serialize_scenario(&camnet_cli::presets::base_room()),
    );
}

#[test]
fn committed_reference_scenario_matches_the_preset() {
    let path = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../scenarios/base_room.json");
    let text = std::fs::read_to_string(path).unwrap();
    assert_eq!(
        text.trim_end(),
        camnet_core::scene::serialize_scenario(&camnet_cli::presets::base_room()).trim_end(),
        "scenarios/base_room.json drifted from the base preset; regenerate with `camnet preset base`"
    );
}

#[test]
fn sweep_then_report_produces_records_and_plots() {
    let dir = tmp("sweep_report");
    let runs = dir.join("runs.csv");
    let out = run(&[
        "sweep",
        "@base",
        "--axis",
        "camera-count",
        "--values",
        "2,3",
        "--reps",
        "1",
        "--tolerance",
        "0",
        "--max-iters",
        "1",
        "--out",
        runs.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", String::from_utf8_lossy(&out.stderr));

    let records = camnet_cli::sweep::read_records(&runs).unwrap();
    assert_eq!(records.len(), 2);
    assert_eq!(records[0].sweep_value, "2");
    assert_eq!(records[1].sweep_value, "3");
    assert!(records.iter().all(|r| r.stop_reason == "iteration_limit"));

    let report_dir = dir.join("report");
    let out = run(&["report", runs.to_str().unwrap(), "--out", report_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    for name in ["group_stats.csv", "scatter.svg", "success.svg"] {
        let f = report_dir.join(name);
        assert!(std::fs::metadata(&f).unwrap().len() > 0, "{name} missing or empty");
    }
    let stats = std::fs::read_to_string(report_dir.join("group_stats.csv")).unwrap();
    assert_eq!(stats.lines().count(), 3); // header + one row per group
}

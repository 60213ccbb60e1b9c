//! End-to-end tests of the binary: formats, exit codes, determinism.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use roc3el::harness::parse_coverage_csv;
use roc3el::regions::{Region2D, Region3D};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_roc3el")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_demo_dataset(path: &Path) {
    let mut csv = String::from("class,value\n");
    for i in 0..20 {
        csv.push_str(&format!("1,{:?}\n", -1.0 + 0.15 * i as f64));
        csv.push_str(&format!("2,{:?}\n", 0.5 + 0.2 * i as f64));
        csv.push_str(&format!("3,{:?}\n", 2.5 + 0.22 * i as f64));
    }
    fs::write(path, csv).unwrap();
}

#[test]
fn vus_on_minimal_file() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "1,0.1\n2,0.5\n3,0.9\n").unwrap();
    let out = run(&["vus", "--input", data.to_str().unwrap()]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["dataset"]["n"], serde_json::json!([1, 1, 1]));
    assert_eq!(v["dataset"]["means_ordered"], true);
    assert_eq!(v["result"]["estimate"], 1.0);
}

#[test]
fn missing_class_is_an_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    fs::write(&data, "1,0.1\n2,0.5\n").unwrap();
    let out = run(&["vus", "--input", data.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("class 3"), "{stderr}");
    assert!(stderr.contains("\"category\":\"input\""), "{stderr}");
}

#[test]
fn invalid_alpha_is_a_validation_error() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_demo_dataset(&data);
    let out = run(&[
        "ci-vus",
        "--input",
        data.to_str().unwrap(),
        "--alpha",
        "1.5",
        "--seed",
        "1",
    ]);
    assert_eq!(out.status.code(), Some(3));
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("\"category\":\"validation\""), "{stderr}");
}

#[test]
fn bootstrap_commands_require_a_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_demo_dataset(&data);
    let out = run(&["ci-vus", "--input", data.to_str().unwrap()]);
    assert!(!out.status.success());
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(stderr.contains("--seed"), "{stderr}");
}

#[test]
fn region3d_csv_round_trips_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_demo_dataset(&data);
    let args = [
        "region3d",
        "--input",
        data.to_str().unwrap(),
        "--t1",
        "0.8",
        "--t2",
        "3.1",
        "--alpha",
        "0.05",
        "--grid-n",
        "25",
    ];
    let a = run(&args);
    assert!(a.status.success());
    let text = String::from_utf8(a.stdout).unwrap();
    assert!(text.starts_with("theta1,theta2,theta3,member\n"));
    let (g1, _, _, mask) = Region3D::mask_from_csv(&text).unwrap();
    assert_eq!(g1.len(), 25);
    assert_eq!(mask.len(), 25 * 25 * 25);
    assert!(mask.iter().any(|m| *m));
    // byte-identical rerun
    let b = run(&args);
    assert_eq!(text, String::from_utf8(b.stdout).unwrap());
}

#[test]
fn region2d_csv_round_trips_with_seed() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_demo_dataset(&data);
    let args = [
        "region2d",
        "--input",
        data.to_str().unwrap(),
        "--theta1",
        "0.8",
        "--t2",
        "3.5",
        "--alpha",
        "0.05",
        "--b",
        "100",
        "--seed",
        "5",
        "--grid-n",
        "41",
    ];
    let a = run(&args);
    assert!(a.status.success(), "{}", String::from_utf8_lossy(&a.stderr));
    let text = String::from_utf8(a.stdout).unwrap();
    let (g2, _, mask) = Region2D::mask_from_csv(&text).unwrap();
    assert_eq!(g2.len(), 41);
    assert!(mask.iter().any(|m| *m));
    let b = run(&args);
    assert_eq!(text, String::from_utf8(b.stdout).unwrap());
}

#[test]
fn empty_interval_outcome_exits_with_its_category() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    // class-2 values sit strictly between the plug-in thresholds' reach,
    // so neither threshold lands inside the class-2 range
    let mut csv = String::new();
    for i in 0..8 {
        csv.push_str(&format!("1,{:?}\n", 1.0 + 0.1 * i as f64));
        csv.push_str(&format!("2,{:?}\n", 6.0 + 0.1 * i as f64));
        csv.push_str(&format!("3,{:?}\n", 10.0 + 0.1 * i as f64));
    }
    fs::write(&data, csv).unwrap();
    let out = run(&[
        "ci-tcf2",
        "--input",
        data.to_str().unwrap(),
        "--theta1",
        "0.5",
        "--theta3",
        "0.5",
        "--seed",
        "3",
        "--b",
        "64",
    ]);
    assert_eq!(out.status.code(), Some(6));
    let stdout = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&stdout).unwrap();
    assert_eq!(v["result"]["outcome"]["outcome"], "empty");
    let stderr = String::from_utf8(out.stderr).unwrap();
    assert!(
        stderr.contains("\"category\":\"empty_interval\""),
        "{stderr}"
    );
}

#[test]
fn simulate_runs_a_plan_in_all_formats() {
    let dir = tempfile::tempdir().unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{
            "method": "region3d",
            "scenario_ids": [1],
            "sizes": [[30, 30, 30]],
            "levels": [0.90, 0.95],
            "replications": 200,
            "bootstrap_b": 50,
            "master_seed": 11
        }"#,
    )
    .unwrap();
    let txt = run(&["simulate", "--plan", plan.to_str().unwrap()]);
    assert!(
        txt.status.success(),
        "{}",
        String::from_utf8_lossy(&txt.stderr)
    );
    let text = String::from_utf8(txt.stdout).unwrap();
    assert!(text.contains("scenario"), "{text}");

    let csv = run(&[
        "simulate",
        "--plan",
        plan.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    let csv_text = String::from_utf8(csv.stdout).unwrap();
    let rows = parse_coverage_csv(&csv_text).unwrap();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0].n, [30, 30, 30]);
    assert!(rows[0].coverage > 0.5 && rows[0].coverage <= 1.0);

    // determinism across invocations
    let csv2 = run(&[
        "simulate",
        "--plan",
        plan.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert_eq!(csv_text, String::from_utf8(csv2.stdout).unwrap());

    let json = run(&[
        "simulate",
        "--plan",
        plan.to_str().unwrap(),
        "--format",
        "json",
    ]);
    let v: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    assert_eq!(v[0]["plan"]["master_seed"], 11);
}

#[test]
fn simulate_accepts_custom_scenarios() {
    let dir = tempfile::tempdir().unwrap();
    let scen = dir.path().join("scen.json");
    fs::write(
        &scen,
        r#"[{
            "id": 42,
            "class1": {"family": "normal", "mean": 0.0, "sd": 1.0},
            "class2": {"family": "normal", "mean": 2.0, "sd": 1.0},
            "class3": {"family": "normal", "mean": 4.0, "sd": 1.0},
            "theta_anchors": [0.8, 0.8]
        }]"#,
    )
    .unwrap();
    let plan = dir.path().join("plan.json");
    fs::write(
        &plan,
        r#"{
            "method": "region3d",
            "scenario_ids": [42],
            "sizes": [[40, 40, 40]],
            "levels": [0.95],
            "replications": 200,
            "bootstrap_b": 50,
            "master_seed": 4
        }"#,
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--plan",
        plan.to_str().unwrap(),
        "--scenario-file",
        scen.to_str().unwrap(),
        "--format",
        "csv",
    ]);
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let rows = parse_coverage_csv(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(rows[0].scenario, 42);
    assert!((rows[0].coverage - 0.95).abs() < 0.06);
}

#[test]
fn scenario_export_parses_back() {
    let out = run(&["scenarios"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let parsed = roc3el::scenarios::scenarios_from_json(&text).unwrap();
    assert_eq!(parsed.len(), 10);
    assert_eq!(parsed, roc3el::scenarios::builtin_scenarios());
}

#[test]
fn outputs_to_file_match_stdout() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("d.csv");
    write_demo_dataset(&data);
    let out_path = dir.path().join("result.json");
    let stdout_run = run(&[
        "ci-vus",
        "--input",
        data.to_str().unwrap(),
        "--seed",
        "9",
        "--b",
        "100",
    ]);
    let file_run = run(&[
        "ci-vus",
        "--input",
        data.to_str().unwrap(),
        "--seed",
        "9",
        "--b",
        "100",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(file_run.status.success());
    let from_file = fs::read_to_string(&out_path).unwrap();
    assert_eq!(from_file, String::from_utf8(stdout_run.stdout).unwrap());
}

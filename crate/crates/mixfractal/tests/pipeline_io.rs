//! End-to-end checks of the compiled binary: exit codes, the one-line
//! diagnostic contract on stderr, flag-over-config precedence, and artifact
//! reproducibility across runs.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::{json, Value};
use tempfile::TempDir;

fn mixfractal(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mixfractal"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, value: &Value) -> String {
    let path = dir.join("config.json");
    fs::write(&path, serde_json::to_string_pretty(value).unwrap()).unwrap();
    path.to_string_lossy().into_owned()
}

/// Small two-component flow; big enough for every fit stage, small enough to
/// keep the whole file fast.
fn small_flow_config(output_dir: &Path) -> Value {
    json!({
        "mode": "pipeline",
        "flow": {
            "components": [
                {"hurst": 0.5, "weight": 2.0},
                {"hurst": 0.7, "weight": 1.0}
            ],
            "length": 4096
        },
        "orders": [2, 3, 4],
        "replicas": 2,
        "seed": 42,
        "output_dir": output_dir.to_string_lossy()
    })
}

fn stderr_line(output: &Output) -> String {
    let text = String::from_utf8_lossy(&output.stderr);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 1, "diagnostics must be one line, got: {text}");
    lines[0].to_string()
}

#[test]
fn pipeline_writes_the_full_artifact_set() {
    let dir = TempDir::new().unwrap();
    let out = dir.path().join("run");
    let config = write_config(dir.path(), &small_flow_config(&out));

    let result = mixfractal(&["pipeline", "--config", &config]);
    assert!(result.status.success(), "{result:?}");
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("artifact"), "stdout: {stdout}");

    for name in [
        "cumulant_diagram_m2.csv",
        "cumulant_diagram_m3.csv",
        "cumulant_diagram_m4.csv",
        "wavelet_diagram.csv",
        "plot_cumulant_m2.csv",
        "plot_wavelet.csv",
        "fit_report.json",
        "run_meta.json",
    ] {
        assert!(out.join(name).is_file(), "{name} missing");
    }

    let header = fs::read_to_string(out.join("wavelet_diagram.csv")).unwrap();
    assert!(header.starts_with("scale_index,log2_statistic,weight,stderr\n"));
    let meta: Value =
        serde_json::from_str(&fs::read_to_string(out.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 42);
    assert_eq!(meta["replica_seeds"].as_array().unwrap().len(), 2);
}

#[test]
fn flags_override_the_config_file() {
    let dir = TempDir::new().unwrap();
    let ignored = dir.path().join("ignored");
    let chosen = dir.path().join("chosen");
    let config = write_config(dir.path(), &small_flow_config(&ignored));

    let result = mixfractal(&[
        "pipeline",
        "--config",
        &config,
        "--seed",
        "9",
        "--replicas",
        "1",
        "--output-dir",
        chosen.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    assert!(!ignored.exists(), "config output_dir must lose to the flag");

    let meta: Value =
        serde_json::from_str(&fs::read_to_string(chosen.join("run_meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 9);
    assert_eq!(meta["config"]["replicas"], 1);
    assert_eq!(meta["replica_seeds"].as_array().unwrap().len(), 1);
}

#[test]
fn equal_seeds_reproduce_every_artifact_byte_for_byte() {
    let dir = TempDir::new().unwrap();
    let first = dir.path().join("first");
    let second = dir.path().join("second");
    let config = write_config(dir.path(), &small_flow_config(&first));

    assert!(mixfractal(&["pipeline", "--config", &config]).status.success());
    let result = mixfractal(&[
        "pipeline",
        "--config",
        &config,
        "--output-dir",
        second.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");

    let mut compared = 0;
    for entry in fs::read_dir(&first).unwrap() {
        let name = entry.unwrap().file_name();
        // run_meta.json echoes the output directory, which differs by design.
        if name == "run_meta.json" {
            continue;
        }
        let a = fs::read(first.join(&name)).unwrap();
        let b = fs::read(second.join(&name)).unwrap();
        assert_eq!(a, b, "{name:?} differs between identically seeded runs");
        compared += 1;
    }
    assert!(compared >= 6, "only {compared} artifacts compared");
}

#[test]
fn synthesize_then_analyze_round_trips() {
    let dir = TempDir::new().unwrap();
    let synth = dir.path().join("synth");
    let analysis = dir.path().join("analysis");
    let config = write_config(dir.path(), &small_flow_config(&synth));

    let result = mixfractal(&["synthesize", "--config", &config]);
    assert!(result.status.success(), "{result:?}");
    let trace = synth.join("trace.csv");
    assert!(trace.is_file());

    let result = mixfractal(&[
        "analyze",
        "--input",
        trace.to_str().unwrap(),
        "--orders",
        "2",
        "--output-dir",
        analysis.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{result:?}");
    assert!(analysis.join("fit_report.json").is_file());
    assert!(!analysis.join("cumulant_diagram_m3.csv").exists());

    let meta: Value = serde_json::from_str(
        &fs::read_to_string(analysis.join("run_meta.json")).unwrap(),
    )
    .unwrap();
    // External traces are never re-seeded.
    assert_eq!(meta["replica_seeds"].as_array().unwrap().len(), 0);
}

#[test]
fn missing_config_file_exits_with_the_io_code() {
    let result = mixfractal(&["pipeline", "--config", "/nonexistent/config.json"]);
    assert_eq!(result.status.code(), Some(14), "{result:?}");
    assert!(stderr_line(&result).starts_with("mixfractal: error[io]:"));
}

#[test]
fn malformed_config_exits_with_the_config_code() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("config.json");
    fs::write(&path, "{ not json").unwrap();
    let result = mixfractal(&["pipeline", "--config", path.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(13), "{result:?}");
    assert!(stderr_line(&result).starts_with("mixfractal: error[config]:"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = TempDir::new().unwrap();
    let mut value = small_flow_config(&dir.path().join("out"));
    value["typo_field"] = json!(1);
    let config = write_config(dir.path(), &value);
    let result = mixfractal(&["pipeline", "--config", &config]);
    assert_eq!(result.status.code(), Some(13), "{result:?}");
    let line = stderr_line(&result);
    assert!(line.contains("typo_field"), "line: {line}");
}

#[test]
fn nonuniform_spacing_reports_the_offending_line() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, "0,1\n2,2\n3,3\n").unwrap();
    let result = mixfractal(&["analyze", "--input", trace.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(11), "{result:?}");
    let line = stderr_line(&result);
    assert!(line.starts_with("mixfractal: error[spacing]:"), "line: {line}");
    assert!(line.contains("line 2"), "line: {line}");
}

#[test]
fn unsupported_order_flag_exits_with_its_code() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, "1\n2\n3\n4\n").unwrap();
    let result = mixfractal(&[
        "analyze",
        "--input",
        trace.to_str().unwrap(),
        "--orders",
        "7",
    ]);
    assert_eq!(result.status.code(), Some(5), "{result:?}");
    assert!(stderr_line(&result).starts_with("mixfractal: error[unsupported-order]:"));
}

#[test]
fn header_only_trace_exits_with_the_empty_input_code() {
    let dir = TempDir::new().unwrap();
    let trace = dir.path().join("trace.csv");
    fs::write(&trace, "count\n").unwrap();
    let result = mixfractal(&["analyze", "--input", trace.to_str().unwrap()]);
    assert_eq!(result.status.code(), Some(12), "{result:?}");
    assert!(stderr_line(&result).starts_with("mixfractal: error[empty-input]:"));
}

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use z3ro_sim::experiments::ScenarioConfig;

const BIN: &str = env!("CARGO_BIN_EXE_z3ro-sim");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .env_remove("Z3RO_SIM_DATA")
        .output()
        .unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let path = dir.join("scenario.cfg");
    std::fs::write(&path, text).unwrap();
    path
}

fn stderr_line(out: &Output) -> String {
    let text = String::from_utf8_lossy(&out.stderr).trim().to_string();
    assert_eq!(text.lines().count(), 1, "stderr: {text}");
    text
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn manifest_outputs(dir: &Path) -> Vec<PathBuf> {
    read_json(&dir.join("manifest.json"))["outputs"]
        .as_array()
        .unwrap()
        .iter()
        .map(|v| PathBuf::from(v.as_str().unwrap()))
        .collect()
}

const SMALL: &str = "channel = rayleigh:8:4:3\nusers = 1\nensemble_size = 5000\n";

#[test]
fn scan_writes_listed_outputs_and_reproducible_echo() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("run1");
    let res = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));

    let outputs = manifest_outputs(&out);
    for name in ["at_user_ecdf.csv", "all_locations_ecdf.csv", "heatmap_user1.csv", "placements.csv", "summary.json"] {
        assert!(outputs.iter().any(|p| p.ends_with(name)), "{name} not listed");
    }
    for p in &outputs {
        assert!(p.exists(), "{} missing", p.display());
    }

    // the echoed config alone reproduces the run
    let summary = read_json(&out.join("summary.json"));
    let echo = summary["config_text"].as_str().unwrap();
    let original = ScenarioConfig::load(&cfg).unwrap();
    assert_eq!(ScenarioConfig::parse(echo).unwrap(), original);
    let cfg2 = tmp.path().join("echo.cfg");
    std::fs::write(&cfg2, echo).unwrap();
    let out2 = tmp.path().join("run2");
    assert!(run(&["scan", "--config", cfg2.to_str().unwrap(), "--out", out2.to_str().unwrap()]).status.success());
    let again = read_json(&out2.join("summary.json"));
    assert_eq!(summary["at_user"], again["at_user"]);
    assert_eq!(summary["all_locations"], again["all_locations"]);
    assert_eq!(
        std::fs::read_to_string(out.join("placements.csv")).unwrap(),
        std::fs::read_to_string(out2.join("placements.csv")).unwrap()
    );
}

#[test]
fn two_user_scan_and_flags() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "channel = rayleigh:8:4:3\nusers = 0,2\n");
    let out = tmp.path().join("pairs");
    let res = run(&[
        "scan", "--users", "2", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(),
        "--ensemble-size", "4000", "--seed", "9", "--threads", "2", "--selection", "first",
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let summary = read_json(&out.join("summary.json"));
    assert_eq!(summary["placements"], 6);
    assert_eq!(summary["config"]["master_seed"], 9);
    assert_eq!(summary["config"]["selection"], "first");
    assert!(out.join("heatmap_user0_2.csv").exists());

    let res = run(&["scan", "--users", "2", "--config", write_config(tmp.path(), SMALL).to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_line(&res).starts_with("error[usage]"));
}

#[test]
fn sweep_grids() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let cfg = cfg.to_str().unwrap();

    let res = run(&["sweep", "--axis", "noise", "--grid", "10:0:5", "--config", cfg]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_line(&res).starts_with("error[usage]"));

    for (axis, grid) in [("noise", "20:20:1"), ("backoff", "-3:-3:1")] {
        let out = tmp.path().join(axis);
        let res = run(&["sweep", "--axis", axis, "--grid", grid, "--config", cfg, "--out", out.to_str().unwrap()]);
        assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
        let table = std::fs::read_to_string(out.join("sweep.csv")).unwrap();
        assert_eq!(table.lines().count(), 2, "{table}");
        assert!(manifest_outputs(&out).iter().all(|p| p.exists()));
    }
}

#[test]
fn pattern_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let out = tmp.path().join("pattern");
    let res = run(&["pattern", "--grid", "0:0:1", "--ensemble-size", "20000", "--out", out.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let table = std::fs::read_to_string(out.join("pattern.csv")).unwrap();
    let lines: Vec<&str> = table.lines().collect();
    assert_eq!(lines.len(), 2);
    assert_eq!(lines[0], "angle_deg,mrt_db,z3ro_db");
    let cols: Vec<f64> = lines[1].split(',').map(|v| v.parse().unwrap()).collect();
    assert!(cols[1] - cols[2] >= 40.0, "{table}");

    let res = run(&["pattern", "--user-angle", "95", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_line(&res).starts_with("error[validation]"));
}

#[test]
fn failures_are_single_line_errors() {
    let tmp = tempfile::tempdir().unwrap();

    let res = run(&["scan"]);
    assert_eq!(res.status.code(), Some(2));
    assert!(stderr_line(&res).starts_with("error[usage]"));

    let bad = write_config(tmp.path(), "users = 0\nfoo = 1\n");
    let res = run(&["scan", "--config", bad.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_line(&res).starts_with("error[parse]"));

    let missing = write_config(tmp.path(), "channel = nowhere.csv\nusers = 0\n");
    let res = run(&["scan", "--config", missing.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_line(&res).starts_with("error[io]"));

    // an output directory below a regular file cannot be created
    let blocker = tmp.path().join("blocker");
    std::fs::write(&blocker, "").unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let res = run(&["scan", "--config", cfg.to_str().unwrap(), "--out", blocker.join("out").to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(1));
    assert!(stderr_line(&res).starts_with("error[io]"));
    assert!(!blocker.join("out").exists());
}

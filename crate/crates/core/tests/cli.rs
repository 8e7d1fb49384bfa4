//! Runs the command-line tool end to end.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn tool() -> Command {
    Command::new(env!("CARGO_BIN_EXE_phonon-entanglement"))
}

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("phonon-cli-{}-{name}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn run(args: &[&str], dir: &Path) -> Output {
    tool().args(args).arg("--out").arg(dir).output().unwrap()
}

fn write_config(dir: &Path, text: &str) -> String {
    let path = dir.join("config.json");
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

#[test]
fn selftest_succeeds() {
    let dir = scratch("selftest");
    let out = run(&["selftest"], &dir);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    assert!(String::from_utf8_lossy(&out.stdout).lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn config_errors_exit_with_two() {
    let dir = scratch("config");
    let unknown = write_config(&dir, r#"{"mode_counts": [3], "no_such_field": 1}"#);
    assert_eq!(run(&["sweep", "--config", &unknown], &dir).status.code(), Some(2));
    let invalid = write_config(&dir, r#"{"mode_counts": [1]}"#);
    assert_eq!(run(&["sweep", "--config", &invalid], &dir).status.code(), Some(2));
    assert_eq!(run(&["sweep", "--config", "/nonexistent/config.json"], &dir).status.code(), Some(2));
}

#[test]
fn missing_maximum_exits_with_four() {
    let dir = scratch("numerical");
    let config = write_config(&dir, r#"{"mode_counts": [2], "temperatures": [6], "time_window": [0.0, 0.05]}"#);
    let out = run(&["sweep", "--config", &config], &dir);
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn sweep_files_are_byte_stable() {
    let dir = scratch("stable");
    let config = write_config(&dir, r#"{"mode_counts": [2, 3], "temperatures": [0, 6], "time_points": 120}"#);
    let [a, b, c] = ["a", "b", "c"].map(|d| dir.join(d));
    assert_eq!(run(&["sweep", "--config", &config], &a).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--config", &config, "--seedless"], &b).status.code(), Some(0));
    assert_eq!(run(&["sweep", "--config", &config, "--threads", "2"], &c).status.code(), Some(0));
    let read = |d: &Path, name: &str| std::fs::read(d.join(name)).unwrap();
    for name in ["sweep.csv", "sweep.json"] {
        assert!(read(&a, name) == read(&b, name), "{name} differs between identical runs");
    }
    // The sidecar records the thread count; the table must not depend on it.
    assert!(read(&a, "sweep.csv") == read(&c, "sweep.csv"));

    let csv = std::fs::read_to_string(a.join("sweep.csv")).unwrap();
    let rows: Vec<&str> = csv.split("\r\n").filter(|l| !l.is_empty()).collect();
    assert_eq!(rows.len(), 5);
    assert!(rows[0].starts_with("n,temperature_K,t_at_max_ps,n_max"));
    let sidecar: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("sweep.json")).unwrap()).unwrap();
    assert_eq!(sidecar["records"].as_array().unwrap().len(), 4);
    assert_eq!(sidecar["spec"]["mode_counts"], serde_json::json!([2, 3]));
}

#[test]
fn coherence_figure_has_continuum_column() {
    let dir = scratch("fig2");
    let out = run(&["fig2"], &dir);
    assert_eq!(out.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.join("fig2.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert!(header.contains("continuum"), "{header}");
    assert!(dir.join("fig2.json").exists());
}

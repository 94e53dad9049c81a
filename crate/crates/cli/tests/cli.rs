use std::fs;
use std::process::{Command, Output};

fn cli(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ris-cellfree"))
        .args(args)
        .output()
        .expect("binary runs")
}

const SMALL: &str = "figure = 1\nnum_aps = 6\nnum_ues = 3\nmc_setups = 2\nmc_channel_realizations = 3\n";

#[test]
fn run_writes_csv_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, SMALL).unwrap();
    let out = dir.path().join("out");
    let result = cli(&[
        "run",
        "--config",
        cfg.to_str().unwrap(),
        "--seed",
        "5",
        "--scenario",
        "ris_optimized",
        "no_ris_small",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stderr));
    let stdout = String::from_utf8_lossy(&result.stdout);
    assert!(stdout.contains("ris_optimized") && stdout.contains("no_ris_small"));
    let samples = fs::read_to_string(out.join("se_samples.csv")).unwrap();
    assert_eq!(samples.lines().count(), 1 + 2 * 2 * 3);
    let manifest = fs::read_to_string(out.join("manifest.txt")).unwrap();
    assert!(manifest.contains("seed = 5"));
    assert!(manifest.contains("scenarios = ris_optimized,no_ris_small"));
}

#[test]
fn flags_override_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("small.cfg");
    fs::write(&cfg, format!("{SMALL}seed = 1\ncombiner = mmse\n")).unwrap();
    let result = cli(&["validate", "--config", cfg.to_str().unwrap(), "--seed", "9", "--scenario", "no_ris_large"]);
    assert!(result.status.success());
    let text = String::from_utf8_lossy(&result.stdout);
    assert!(text.contains("seed = 9"));
    assert!(text.contains("combiner = mmse"));
    assert!(text.contains("scenarios = no_ris_large"));
    assert!(text.contains("num_aps = 6"));
}

#[test]
fn bad_configuration_fails() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.cfg");
    fs::write(&cfg, "num_aps = -3\n").unwrap();
    let result = cli(&["validate", "--config", cfg.to_str().unwrap()]);
    assert!(!result.status.success());
    assert!(String::from_utf8_lossy(&result.stderr).contains("num_aps"));
    let unknown = cli(&["validate", "--scenario", "no_such_scenario"]);
    assert!(!unknown.status.success());
    let zero_threads = cli(&["validate", "--threads", "0"]);
    assert!(!zero_threads.status.success());
}

#[test]
fn oracle_reports_every_check() {
    let result = cli(&["oracle", "--seed", "3"]);
    assert!(result.status.success(), "{}", String::from_utf8_lossy(&result.stdout));
    let text = String::from_utf8_lossy(&result.stdout);
    assert!(text.lines().count() > 20);
    assert!(text.lines().all(|l| l.starts_with("PASS ")));
}

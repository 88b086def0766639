//! End-to-end tests of the `uavsim` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn uavsim(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_uavsim"))
        .args(args)
        .output()
        .expect("binary should spawn")
}

fn write_tiny_config(dir: &Path) -> String {
    let path = dir.join("tiny.toml");
    fs::write(
        &path,
        r#"
[topology]
n_uavs = 2
n_users = 6

[traffic]
n_contents = 8
clusters = 2

[rl]
iterations = 40
epoch_iterations = 10
convergence_window = 10
prediction_days = 1

[rl.liquid]
dims = [4, 4, 8]

[predictor]
training_days = 1
test_days = 1
slots_per_hour = 10
"#,
    )
    .unwrap();
    path.to_str().unwrap().to_string()
}

#[test]
fn run_writes_artifacts_and_replays_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out_a = dir.path().join("a");
    let out_b = dir.path().join("b");
    for out in [&out_a, &out_b] {
        let result = uavsim(&[
            "run",
            "--config",
            &cfg,
            "--seed",
            "3",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(
            result.status.success(),
            "stderr: {}",
            String::from_utf8_lossy(&result.stderr)
        );
        let summary: serde_json::Value = serde_json::from_slice(&result.stdout).unwrap();
        assert_eq!(summary["seed"], 3);
        assert_eq!(summary["algorithm"], "lsm");
        assert_eq!(summary["iterations"], 40);
    }
    for name in [
        "config.toml",
        "metrics.csv",
        "rate_cdf.csv",
        "summary.json",
        "seed.txt",
    ] {
        let a = fs::read(out_a.join(name)).unwrap();
        let b = fs::read(out_b.join(name)).unwrap();
        assert!(!a.is_empty());
        assert_eq!(a, b, "{name} should be byte-identical across reruns");
    }
    let metrics = fs::read_to_string(out_a.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("iteration,hour,requests,stable_total"));
    assert_eq!(
        metrics.lines().count(),
        41,
        "header plus one row per iteration"
    );
}

#[test]
fn sequential_flag_changes_nothing_but_scheduling() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let par = uavsim(&["run", "--config", &cfg, "--seed", "5"]);
    let seq = uavsim(&["run", "--config", &cfg, "--seed", "5", "--sequential"]);
    assert!(par.status.success() && seq.status.success());
    assert_eq!(par.stdout, seq.stdout);
}

#[test]
fn verifiers_report_zero_mismatches() {
    let alloc = uavsim(&["alloc-verify", "--instances", "50", "--max-users", "5"]);
    assert!(alloc.status.success());
    let report: serde_json::Value = serde_json::from_slice(&alloc.stdout).unwrap();
    assert_eq!(report["mismatches"].as_array().unwrap().len(), 0);

    let cache = uavsim(&["cache-verify", "--instances", "50", "--max-contents", "10"]);
    assert!(cache.status.success());
    let report: serde_json::Value = serde_json::from_slice(&cache.stdout).unwrap();
    assert_eq!(report["exact"], 50);
}

#[test]
fn sweep_prints_csv() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_tiny_config(dir.path());
    let out = uavsim(&[
        "sweep", "--config", &cfg, "--axis", "uavs", "--values", "1,2", "--seeds", "2",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "value,median_converged,mean_converged,seed_0,seed_1"
    );
    assert_eq!(lines.count(), 2);
}

#[test]
fn errors_are_machine_readable_json() {
    let out = uavsim(&["run", "--config", "/definitely/not/there.toml"]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert!(err["error"].as_str().unwrap().contains("not/there.toml"));
}

#[test]
fn link_rates_report_keeps_cached_columns_fixed() {
    let out = uavsim(&["link-rates", "--scales", "1,2"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<Vec<&str>> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], rows[1][1], "licensed cache-hit column");
    assert_eq!(rows[0][2], rows[1][2], "unlicensed cache-hit column");
}

use std::fs;
use std::path::Path;

use tpka::cli::run;

fn tpka(config: &Path, out: &Path, cmd: &[&str]) -> i32 {
    let mut args = vec!["tpka", "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(cmd);
    run(args)
}

fn small_config(dir: &Path) -> std::path::PathBuf {
    let p = dir.join("small.toml");
    fs::write(&p, "[deployment]\nsensors = 100\nexpected_degree = 8\nratio = 0.1\n").unwrap();
    p
}

#[test]
fn simulate_writes_reports_aggregate_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(tpka(&cfg, &out, &["simulate", "--seeds", "0,4", "--trace"]), 0);
    for f in ["manifest.json", "aggregate.csv", "aggregate.json", "reports/seed-0.json", "reports/seed-4.json", "traces/seed-4.ndjson"] {
        assert!(out.join(f).is_file(), "{f} missing");
    }
    let manifest: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    let hash = manifest["hash"].as_str().unwrap().to_string();
    assert_eq!(manifest["seeds"], serde_json::json!([0, 4]));
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("reports/seed-4.json")).unwrap()).unwrap();
    assert_eq!(report["manifest"], hash.as_str());
    assert_eq!(report["report"]["seed"], 4);
    assert_eq!(report["report"]["sensors"], 100);
    let csv = fs::read_to_string(out.join("aggregate.csv")).unwrap();
    assert!(csv.starts_with("metric,mean,stddev,min,max,trials,failed,manifest\n"));
    assert!(csv.lines().skip(1).all(|l| l.ends_with(&hash)));
}

#[test]
fn analyze_covers_the_sweep() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(tpka(&cfg, &out, &["--scenario", "C", "analyze"]), 0);
    let csv = fs::read_to_string(out.join("analyze.csv")).unwrap();
    let rows: Vec<_> = csv.lines().skip(1).collect();
    assert!(!rows.is_empty());
    assert!(rows.iter().all(|r| r.starts_with("C,")));
}

#[test]
fn attack_script_with_unknown_node_is_rejected_before_running() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let script = dir.path().join("bad.json");
    fs::write(&script, r#"{"schema":"tpka.attack/1","events":[{"round":6,"action":"capture_sensor","params":{"id":100000}}]}"#).unwrap();
    assert_eq!(tpka(&cfg, &out, &["attack", "--script", script.to_str().unwrap()]), 1);
    assert!(!out.join("resilience.csv").exists());

    fs::write(&script, r#"{"schema":"tpka.attack/9","events":[]}"#).unwrap();
    assert_eq!(tpka(&cfg, &out, &["attack", "--script", script.to_str().unwrap()]), 1);
}

#[test]
fn attack_writes_a_resilience_table() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let script = dir.path().join("ok.json");
    fs::write(
        &script,
        r#"{"schema":"tpka.attack/1","events":[
            {"round":6,"action":"capture_sensor","params":{"id":3}},
            {"round":7,"action":"capture_sensor","params":{"id":9}}]}"#,
    )
    .unwrap();
    assert_eq!(tpka(&cfg, &out, &["attack", "--script", script.to_str().unwrap(), "--seeds", "2"]), 0);
    let csv = fs::read_to_string(out.join("resilience.csv")).unwrap();
    // Two seeds, three prefixes each (0, 1 and 2 captures).
    assert_eq!(csv.lines().count(), 1 + 2 * 3);
    for row in csv.lines().skip(1) {
        let cols: Vec<_> = row.split(',').collect();
        assert_eq!(cols[7], "0", "uncaptured link compromised: {row}");
    }
}

#[test]
fn energy_without_seeds_lists_expected_counts() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    assert_eq!(tpka(&cfg, &out, &["energy"]), 0);
    let csv = fs::read_to_string(out.join("energy.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("sensor,hash,9,,")));
    assert!(csv.lines().any(|l| l.starts_with("third_party,hash,15,,")));
}

#[test]
fn verify_fails_on_a_corrupted_reference() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("bad.toml");
    fs::write(&cfg, "[verify]\nmc_samples = 100000\nsession_trials = 100\nchain_trials = 50\n[verify.reference]\nB = 2.95\n").unwrap();
    assert_eq!(tpka(&cfg, &out, &["verify"]), 2);
    let csv = fs::read_to_string(out.join("verify.csv")).unwrap();
    assert!(csv.lines().any(|l| l.starts_with("coefficient B,") && l.contains(",false,")));

    fs::write(&cfg, "[verify]\nmc_samples = 100000\nsession_trials = 100\nchain_trials = 50\n").unwrap();
    assert_eq!(tpka(&cfg, &out, &["verify"]), 0);
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = dir.path().join("typo.toml");
    fs::write(&cfg, "[deployment]\nsensor = 100\n").unwrap();
    assert_eq!(tpka(&cfg, &out, &["simulate"]), 1);
    assert_eq!(tpka(&dir.path().join("missing.toml"), &out, &["simulate"]), 1);
    let good = small_config(dir.path());
    assert_eq!(tpka(&good, &out, &["simulate", "--seeds", "abc"]), 1);
}

#[test]
fn repeated_runs_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = small_config(dir.path());
    let out = dir.path().join("out");
    let mut snapshots = Vec::new();
    for _ in 0..2 {
        let _ = fs::remove_dir_all(&out);
        assert_eq!(tpka(&cfg, &out, &["simulate", "--seeds", "3"]), 0);
        let read = |f: &str| fs::read(out.join(f)).unwrap();
        snapshots.push((read("aggregate.csv"), read("reports/seed-2.json"), read("manifest.json")));
    }
    assert_eq!(snapshots[0], snapshots[1]);
}

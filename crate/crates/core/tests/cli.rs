mod common;

use std::fs;
use std::path::Path;

use common::*;

fn smoke(cmd: &str) -> String {
    config_dir().join("smoke").join(format!("{cmd}.cfg")).display().to_string()
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.display().to_string()
}

#[test]
fn success_writes_tagged_rows() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let (code, err) = run_cli(&["rethink", &smoke("rethink"), "--seed", "11", "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 0, "{err}");
    let csv = fs::read_to_string(out.join("corruption_sweep.csv")).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    assert_eq!(&header[..2], &["seed", "method"]);
    assert_eq!(*header.last().unwrap(), "config_hash");
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields[0], "11");
        assert_eq!(fields.last().unwrap().len(), 16);
    }
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(out.join("rethink-smoke.meta.json")).unwrap()).unwrap();
    assert_eq!(meta["status"], "ok");
    assert_eq!(meta["seeds"], serde_json::json!([11]));
}

#[test]
fn jsonl_rows_carry_seed_method_and_hash() {
    let dir = tempfile::tempdir().unwrap();
    let (code, err) = run_cli(&["shift-eval", &smoke("shift-eval"), "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(code, 0, "{err}");
    let text = fs::read_to_string(dir.path().join("shift_eval.jsonl")).unwrap();
    let rows: Vec<serde_json::Value> = text.lines().map(|l| serde_json::from_str(l).unwrap()).collect();
    assert!(!rows.is_empty());
    for r in &rows {
        for key in ["seed", "method", "config_hash", "kind", "level", "models", "nll", "accuracy", "ece"] {
            assert!(r.get(key).is_some(), "missing {key} in {r}");
        }
    }
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let unknown = write_config(dir.path(), "a.cfg", "[experiment]\nid = a\nseeds = 1\n[data]\nclasess = 1, 7\n");
    let (code, err) = run_cli(&["rethink", &unknown], None);
    assert_eq!(code, 2, "{err}");
    assert!(err.contains("clasess"), "{err}");

    let no_seeds = write_config(dir.path(), "b.cfg", "[experiment]\nid = b\n");
    assert_eq!(run_cli(&["rethink", &no_seeds], None).0, 2);
    assert_eq!(run_cli(&["no-such-command", &smoke("rethink")], None).0, 2);
    assert_eq!(run_cli(&["rethink", &smoke("rethink")], Some("zero")).0, 2);
    assert_eq!(run_cli(&["rethink"], None).0, 2);
}

#[test]
fn missing_config_exits_4() {
    let (code, err) = run_cli(&["toy-bma", "/nonexistent/toy.cfg"], None);
    assert_eq!(code, 4, "{err}");
}

#[test]
fn numerical_failure_exits_3_into_quarantine() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = write_config(
        dir.path(),
        "dd.cfg",
        "[experiment]\nid = diverge\nseeds = 1\n[data]\nclasses = 0, 1\ntrain_per_class = 5\ntest_per_class = 5\ndownsample = 4\n\
         [model]\nbase_hidden = 4\nwidth_multipliers = 1\n[train]\nepochs = 50\nbatch_size = 5\nlr = 1e6\n\
         [swag]\nrank = 2\ncollect_start = 10\nsamples_per_model = 2\nmodels = 1\n",
    );
    let (code, err) = run_cli(&["double-descent", &cfg, "--out", out.to_str().unwrap()], None);
    assert_eq!(code, 3, "{err}");
    let meta = out.join("quarantine").join("diverge.meta.json");
    let meta: serde_json::Value = serde_json::from_str(&fs::read_to_string(meta).unwrap()).unwrap();
    assert_ne!(meta["status"], "ok");
    assert!(!out.join("double_descent.csv").exists());
}

#[test]
fn worker_count_does_not_change_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut outputs = Vec::new();
    for workers in ["1", "3"] {
        let out = dir.path().join(workers);
        let (code, err) = run_cli(&["double-descent", &smoke("double-descent"), "--out", out.to_str().unwrap()], Some(workers));
        assert_eq!(code, 0, "{err}");
        outputs.push(data_files(&out));
    }
    assert_eq!(outputs[0], outputs[1]);
}

#[test]
fn seed_override_changes_hash() {
    let dir = tempfile::tempdir().unwrap();
    let mut hashes = Vec::new();
    for seed in ["1", "2"] {
        let out = dir.path().join(seed);
        let (code, err) = run_cli(&["temper-sweep", &smoke("temper-sweep"), "--seed", seed, "--out", out.to_str().unwrap()], None);
        assert_eq!(code, 0, "{err}");
        let csv = fs::read_to_string(out.join("temper_sweep.csv")).unwrap();
        hashes.push(csv.lines().nth(1).unwrap().rsplit(',').next().unwrap().to_string());
    }
    assert_ne!(hashes[0], hashes[1]);
}

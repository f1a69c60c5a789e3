mod common;

use std::path::Path;

use common::{normalized_manifest, ok, run_pipeline, sample_workspace, topiclab};

const GOLDEN_MANIFEST: &str = concat!(env!("CARGO_MANIFEST_DIR"), "/tests/golden/sample_manifest.json");

#[test]
fn sample_pipeline_matches_golden_manifest() {
    let ws = sample_workspace();
    run_pipeline(ws.path());
    let got = normalized_manifest(ws.path());
    let stages: Vec<&str> = got["stages"].as_array().unwrap().iter().map(|s| s["stage"].as_str().unwrap()).collect();
    assert_eq!(stages, ["prep", "fit", "diagnose", "tasks"]);

    if std::env::var_os("TOPICLAB_UPDATE_GOLDEN").is_some() {
        std::fs::write(GOLDEN_MANIFEST, serde_json::to_string_pretty(&got).unwrap() + "\n").unwrap();
    }
    let golden: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(GOLDEN_MANIFEST).unwrap()).unwrap();
    assert_eq!(got, golden, "normalized manifest drifted from {GOLDEN_MANIFEST}");
    assert_eq!(ok(ws.path(), &["manifest", "--verify"]).trim(), r#"{"changed":[],"ok":true}"#);
}

#[test]
fn manifest_verify_flags_changed_artifacts() {
    let ws = sample_workspace();
    ok(ws.path(), &["prep", "--config", "config.toml", "--corpus", "corpus.jsonl", "--out", "dtm.bin"]);
    std::fs::write(ws.path().join("dtm.bin"), b"tampered").unwrap();
    let out = topiclab(ws.path(), &["manifest", "--verify"]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(String::from_utf8_lossy(&out.stdout).trim(), r#"{"changed":["dtm"],"ok":false}"#);
}

#[test]
fn one_stopword_changes_the_recorded_config_digest() {
    let ws = sample_workspace();
    let cfg = std::fs::read_to_string(ws.path().join("config.toml")).unwrap();
    std::fs::write(ws.path().join("other.toml"), cfg.replace("\"study\",", "\"studies\",")).unwrap();
    for c in ["config.toml", "other.toml"] {
        ok(ws.path(), &["--manifest", &format!("{c}.manifest.json"), "prep", "--config", c, "--corpus", "corpus.jsonl", "--out", "dtm.bin"]);
    }
    let digest = |c: &str| {
        let m = topiclab_cli::manifest::RunManifest::read(&ws.path().join(format!("{c}.manifest.json"))).unwrap();
        m.config_digest
    };
    assert_ne!(digest("config.toml"), digest("other.toml"));
}

#[test]
fn searchk_writes_one_row_per_k() {
    let ws = sample_workspace();
    let d = ws.path();
    ok(d, &["prep", "--config", "config.toml", "--corpus", "corpus.jsonl", "--out", "dtm.bin"]);
    // Short chains keep this quick; the row count does not depend on them.
    let cfg = std::fs::read_to_string(d.join("config.toml")).unwrap();
    std::fs::write(d.join("quick.toml"), cfg.replace("[fit]\n", "[fit]\nmax_iterations = 60\nburn_in = 20\n")).unwrap();
    ok(d, &["searchk", "--config", "quick.toml", "--dtm", "dtm.bin", "--k", "5,10,15", "--out-dir", "search"]);
    let table = std::fs::read_to_string(d.join("search/diagnostics.tsv")).unwrap();
    let ks: Vec<&str> = table.lines().skip(1).map(|l| l.split('\t').next().unwrap()).collect();
    assert_eq!(ks, ["5", "10", "15"]);
    let topics = std::fs::read_to_string(d.join("search/topic_scores.tsv")).unwrap();
    assert_eq!(topics.lines().count(), 1 + 5 + 10 + 15);
}

#[test]
fn unknown_subcommand_prints_usage_and_exits_2() {
    let out = topiclab(Path::new("."), &["frobnicate"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage:"));
}

#[test]
fn module_errors_give_one_json_line_and_exit_1() {
    let ws = sample_workspace();
    let out = topiclab(ws.path(), &["fit", "--dtm", "missing.bin", "--out", "m.json"]);
    assert_eq!(out.status.code(), Some(1));
    let stderr = String::from_utf8(out.stderr).unwrap();
    let line: serde_json::Value = serde_json::from_str(stderr.trim()).unwrap();
    assert_eq!(line["error"], "io");
    assert!(line["message"].as_str().unwrap().contains("missing.bin"));

    std::fs::write(ws.path().join("bad.toml"), "[fit]\nk = 0\n").unwrap();
    let out = topiclab(ws.path(), &["prep", "--config", "bad.toml", "--corpus", "corpus.jsonl", "--out", "d.bin"]);
    assert_eq!(out.status.code(), Some(1));
    let line: serde_json::Value = serde_json::from_slice(out.stderr.trim_ascii()).unwrap();
    assert_eq!(line["error"], "inference");
    assert!(!ws.path().join("topiclab-manifest.json").exists());
}

#[test]
fn labels_and_offline_metrics() {
    let ws = sample_workspace();
    let d = ws.path();
    run_pipeline(d);
    ok(d, &["labels", "--config", "config.toml", "--model", "model.json", "--corpus", "corpus.jsonl", "--out", "labels.jsonl", "--table", "labels.txt"]);
    let packet: serde_json::Value = serde_json::from_str(std::fs::read_to_string(d.join("labels.jsonl")).unwrap().trim()).unwrap();
    assert_eq!(packet["schema"], 1);
    let topics = packet["topics"].as_array().unwrap();
    assert_eq!(topics.len(), 10);
    assert!(topics.iter().all(|t| t["top_words"].as_array().unwrap().len() == 8 && t["documents"].as_array().unwrap().len() == 3));
    let props: Vec<f64> = topics.iter().map(|t| t["proportion"].as_f64().unwrap()).collect();
    assert!(props.windows(2).all(|w| w[0] >= w[1]));
    assert!(std::fs::read_to_string(d.join("labels.txt")).unwrap().contains("#1 topic"));

    // Every word task answered with its intruder, every topic task skipped.
    let tasks = std::fs::read_to_string(d.join("tasks.jsonl")).unwrap();
    let responses: String = tasks
        .lines()
        .map(|l| {
            let t: serde_json::Value = serde_json::from_str(l).unwrap();
            let choice = if t["kind"] == "word_intrusion" { t["intruder_position"].clone() } else { "skip".into() };
            format!(
                "{}\n",
                serde_json::json!({"schema": 1, "task_id": t["task_id"], "coder_id": "c", "choice": choice, "submitted_at": "2026-01-01T00:00:00Z"})
            )
        })
        .collect();
    std::fs::write(d.join("responses.jsonl"), responses).unwrap();
    let report: serde_json::Value =
        serde_json::from_str(&ok(d, &["metrics", "--tasks", "tasks.jsonl", "--model", "model.json", "--responses", "responses.jsonl"])).unwrap();
    assert_eq!(report["n_responses"], 20);
    assert_eq!(report["word_intrusion"]["model_precision"], 1.0);
    assert_eq!(report["word_intrusion"]["n_scored"], 10);
    assert_eq!(report["topic_intrusion"]["topic_log_odds"], serde_json::Value::Null);
    assert_eq!(report["topic_intrusion"]["n_skipped"], 10);
}

#![allow(dead_code)]

use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::process::{Child, Command, Output, Stdio};

pub const BIN: &str = env!("CARGO_BIN_EXE_topiclab");

pub fn data_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../data")
}

pub fn topiclab(dir: &Path, args: &[&str]) -> Output {
    Command::new(BIN).current_dir(dir).args(args).env_remove("TOPICLAB_CONFIG").env_remove("TOPICLAB_BIND").output().expect("spawn topiclab")
}

/// Runs a subcommand that must succeed; returns stdout.
pub fn ok(dir: &Path, args: &[&str]) -> String {
    let out = topiclab(dir, args);
    assert!(out.status.success(), "topiclab {args:?} failed: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

/// A scratch directory holding the sample corpus and config under short relative names.
pub fn sample_workspace() -> tempfile::TempDir {
    let dir = tempfile::tempdir().unwrap();
    std::fs::copy(data_dir().join("sample_abstracts.jsonl"), dir.path().join("corpus.jsonl")).unwrap();
    std::fs::copy(data_dir().join("sample_config.toml"), dir.path().join("config.toml")).unwrap();
    dir
}

/// Artifacts of [`run_pipeline`], relative to the workspace.
pub const PIPELINE_OUTPUTS: [&str; 6] =
    ["dtm.bin", "model.json", "diag/diagnostics.tsv", "diag/topic_scores.tsv", "tasks.jsonl", "topiclab-manifest.json"];

/// prep -> fit (K = 10) -> diagnose -> tasks, all relative to `dir`.
pub fn run_pipeline(dir: &Path) {
    ok(dir, &["prep", "--config", "config.toml", "--corpus", "corpus.jsonl", "--out", "dtm.bin", "--stats", "stats.json"]);
    ok(dir, &["fit", "--config", "config.toml", "--dtm", "dtm.bin", "--out", "model.json", "--k", "10"]);
    ok(dir, &["diagnose", "--config", "config.toml", "--dtm", "dtm.bin", "--model", "model.json", "--out-dir", "diag"]);
    ok(dir, &["tasks", "--config", "config.toml", "--model", "model.json", "--corpus", "corpus.jsonl", "--out", "tasks.jsonl"]);
}

pub fn normalized_manifest(dir: &Path) -> serde_json::Value {
    let m = topiclab_cli::manifest::RunManifest::read(&dir.join("topiclab-manifest.json")).unwrap();
    m.normalized()
}

/// A running `topiclab serve`; killed on drop.
pub struct Server {
    child: Child,
    pub base: String,
}

impl Server {
    pub fn start(dir: &Path, sessions: &str) -> Server {
        let mut child = Command::new(BIN)
            .current_dir(dir)
            .args(["serve", "--sessions", sessions, "--bind", "127.0.0.1:0"])
            .stderr(Stdio::piped())
            .stdout(Stdio::null())
            .spawn()
            .expect("spawn serve");
        let mut stderr = BufReader::new(child.stderr.take().unwrap());
        let mut line = String::new();
        let addr = loop {
            line.clear();
            if stderr.read_line(&mut line).unwrap() == 0 {
                panic!("serve exited before listening");
            }
            let v: serde_json::Value = serde_json::from_str(line.trim()).unwrap_or_default();
            if let Some(a) = v.get("listening").and_then(|a| a.as_str()) {
                break a.to_owned();
            }
        };
        std::thread::spawn(move || for _ in stderr.lines() {});
        Server { child, base: format!("http://{addr}") }
    }
}

impl Drop for Server {
    fn drop(&mut self) {
        let _ = self.child.kill();
        let _ = self.child.wait();
    }
}

/// Writes `n_word` word tasks and `n_topic` topic tasks from `tasks.jsonl` to
/// `out`, plus a one-session sessions file `sessions.toml` with coders
/// `alice`/`bob` and operator token `op-secret`.
pub fn write_session(dir: &Path, n_word: usize, n_topic: usize, out: &str) {
    let text = std::fs::read_to_string(dir.join("tasks.jsonl")).unwrap();
    let word = text.lines().filter(|l| l.contains("\"kind\":\"word_intrusion\"")).take(n_word);
    let topic = text.lines().filter(|l| l.contains("\"kind\":\"topic_intrusion\"")).take(n_topic);
    let lines: Vec<&str> = word.chain(topic).collect();
    assert_eq!(lines.len(), n_word + n_topic);
    std::fs::write(dir.join(out), lines.join("\n") + "\n").unwrap();
    let sessions = format!(
        r#"[[session]]
id = "s1"
tasks = "{out}"
model = "model.json"
responses = "responses.jsonl"
operator_token = "op-secret"
coders = [{{ id = "alice", token = "tok-alice" }}, {{ id = "bob", token = "tok-bob" }}]
"#
    );
    std::fs::write(dir.join("sessions.toml"), sessions).unwrap();
}

//! Append-only log of coder responses (one JSON record per line).
//!
//! Appends go through a single writer and are synced before they are
//! acknowledged. On open, lines that do not parse (typically a record cut off
//! by a crash) and repeated `(task_id, coder_id)` pairs are moved to
//! `<file>.quarantine` and the log is rewritten without them.

use std::collections::HashSet;
use std::fs::{File, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};
use std::sync::Mutex;

use thiserror::Error;
use topiclab::evaluation::{read_records, write_records};
use topiclab::CoderResponse;

use crate::error::{HarnessError, Result};

#[derive(Debug, Error)]
pub enum AppendError {
    #[error("task `{task_id}` already has a response from coder `{coder_id}`")]
    Duplicate { task_id: String, coder_id: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct LoadReport {
    pub loaded: usize,
    pub quarantined: usize,
}

/// Parsed log contents: accepted records with their raw lines, then rejected raw lines.
struct ParsedLog {
    good: Vec<(String, CoderResponse)>,
    bad: Vec<String>,
}

fn parse_log(bytes: &[u8]) -> ParsedLog {
    let text = String::from_utf8_lossy(bytes);
    let mut good = Vec::new();
    let mut bad = Vec::new();
    let mut seen = HashSet::new();
    let complete = text.ends_with('\n');
    let lines: Vec<&str> = text.split('\n').collect();
    let n = lines.len();
    for (i, line) in lines.into_iter().enumerate() {
        let last = i + 1 == n;
        if line.is_empty() && last {
            continue;
        }
        if line.trim().is_empty() {
            continue;
        }
        let parsed = if last && !complete {
            None
        } else {
            read_records::<CoderResponse, _>(line.as_bytes()).ok().and_then(|mut v| v.pop())
        };
        match parsed {
            Some(r) if seen.insert((r.task_id.clone(), r.coder_id.clone())) => good.push((line.to_owned(), r)),
            _ => bad.push(line.to_owned()),
        }
    }
    ParsedLog { good, bad }
}

/// Reads a response log without modifying it; bad and repeated lines are
/// skipped and counted.
pub fn read_responses(path: &Path) -> Result<(Vec<CoderResponse>, usize)> {
    let bytes = std::fs::read(path).map_err(HarnessError::file(path))?;
    let parsed = parse_log(&bytes);
    Ok((parsed.good.into_iter().map(|(_, r)| r).collect(), parsed.bad.len()))
}

struct Inner {
    file: File,
    records: Vec<CoderResponse>,
    keys: HashSet<(String, String)>,
}

pub struct ResponseStore {
    path: PathBuf,
    inner: Mutex<Inner>,
}

impl ResponseStore {
    pub fn quarantine_path(path: &Path) -> PathBuf {
        let mut p = path.as_os_str().to_owned();
        p.push(".quarantine");
        PathBuf::from(p)
    }

    pub fn open(path: &Path) -> Result<(Self, LoadReport)> {
        let bytes = match std::fs::read(path) {
            Ok(b) => b,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => Vec::new(),
            Err(e) => return Err(HarnessError::File { path: path.into(), source: e }),
        };
        let parsed = parse_log(&bytes);
        if !parsed.bad.is_empty() {
            let qpath = Self::quarantine_path(path);
            let mut q = OpenOptions::new().create(true).append(true).open(&qpath).map_err(HarnessError::file(&qpath))?;
            for line in &parsed.bad {
                writeln!(q, "{line}")?;
            }
            q.sync_all()?;

            let tmp = path.with_extension("rewrite.tmp");
            let mut f = File::create(&tmp).map_err(HarnessError::file(&tmp))?;
            for (line, _) in &parsed.good {
                writeln!(f, "{line}")?;
            }
            f.sync_all()?;
            std::fs::rename(&tmp, path).map_err(HarnessError::file(path))?;
        }
        let file = OpenOptions::new().create(true).append(true).open(path).map_err(HarnessError::file(path))?;
        let report = LoadReport { loaded: parsed.good.len(), quarantined: parsed.bad.len() };
        let records: Vec<CoderResponse> = parsed.good.into_iter().map(|(_, r)| r).collect();
        let keys = records.iter().map(|r| (r.task_id.clone(), r.coder_id.clone())).collect();
        Ok((ResponseStore { path: path.into(), inner: Mutex::new(Inner { file, records, keys }) }, report))
    }

    pub fn path(&self) -> &Path {
        &self.path
    }

    /// Durable once this returns `Ok`.
    pub fn append(&self, response: CoderResponse) -> Result<CoderResponse, AppendError> {
        let mut inner = self.inner.lock().expect("store lock poisoned");
        let key = (response.task_id.clone(), response.coder_id.clone());
        if inner.keys.contains(&key) {
            return Err(AppendError::Duplicate { task_id: key.0, coder_id: key.1 });
        }
        let mut line = Vec::new();
        write_records(std::slice::from_ref(&response), &mut line).map_err(|e| std::io::Error::other(e.to_string()))?;
        inner.file.write_all(&line)?;
        inner.file.sync_data()?;
        inner.keys.insert(key);
        inner.records.push(response.clone());
        Ok(response)
    }

    pub fn records(&self) -> Vec<CoderResponse> {
        self.inner.lock().expect("store lock poisoned").records.clone()
    }

    pub fn len(&self) -> usize {
        self.inner.lock().expect("store lock poisoned").records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use topiclab::Choice;

    fn resp(task: &str, coder: &str, choice: Choice) -> CoderResponse {
        CoderResponse { task_id: task.into(), coder_id: coder.into(), choice, submitted_at: "2026-01-01T00:00:00Z".into() }
    }

    #[test]
    fn append_reload_and_duplicates() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let (store, report) = ResponseStore::open(&path).unwrap();
        assert_eq!(report, LoadReport::default());
        store.append(resp("t1", "a", Choice::Option(2))).unwrap();
        store.append(resp("t1", "b", Choice::Skip)).unwrap();
        assert!(matches!(store.append(resp("t1", "a", Choice::Option(0))), Err(AppendError::Duplicate { .. })));
        drop(store);
        let (store, report) = ResponseStore::open(&path).unwrap();
        assert_eq!(report, LoadReport { loaded: 2, quarantined: 0 });
        assert_eq!(store.records()[1].choice, Choice::Skip);
        assert!(std::fs::read_to_string(&path).unwrap().contains("\"choice\":\"skip\""));
    }

    #[test]
    fn truncated_tail_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let (store, _) = ResponseStore::open(&path).unwrap();
        for i in 0..3 {
            store.append(resp(&format!("t{i}"), "a", Choice::Option(i))).unwrap();
        }
        drop(store);
        let full = std::fs::read(&path).unwrap();
        std::fs::write(&path, &full[..full.len() - 9]).unwrap();

        let (ro, skipped) = read_responses(&path).unwrap();
        assert_eq!((ro.len(), skipped), (2, 1));

        let (store, report) = ResponseStore::open(&path).unwrap();
        assert_eq!(report, LoadReport { loaded: 2, quarantined: 1 });
        let q = std::fs::read_to_string(ResponseStore::quarantine_path(&path)).unwrap();
        assert_eq!(q.lines().count(), 1);
        // the cut-off record can be resubmitted
        store.append(resp("t2", "a", Choice::Option(2))).unwrap();
        drop(store);
        let (_, report) = ResponseStore::open(&path).unwrap();
        assert_eq!(report, LoadReport { loaded: 3, quarantined: 0 });
    }

    #[test]
    fn every_prefix_loads_all_completed_records() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let (store, _) = ResponseStore::open(&path).unwrap();
        for i in 0..4 {
            store.append(resp(&format!("t{i}"), "a", Choice::Option(i))).unwrap();
        }
        drop(store);
        let full = std::fs::read(&path).unwrap();
        for cut in 0..=full.len() {
            let p = dir.path().join(format!("cut{cut}.jsonl"));
            std::fs::write(&p, &full[..cut]).unwrap();
            let complete = full[..cut].iter().filter(|&&b| b == b'\n').count();
            let (store, report) = ResponseStore::open(&p).unwrap();
            assert_eq!(store.len(), complete, "cut at {cut}");
            assert_eq!(report.quarantined, usize::from(cut > 0 && full[cut - 1] != b'\n'));
        }
    }

    #[test]
    fn corrupt_and_repeated_lines_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("r.jsonl");
        let mut log = Vec::new();
        write_records(&[resp("t1", "a", Choice::Option(1)), resp("t1", "a", Choice::Option(2))], &mut log).unwrap();
        log.extend_from_slice(b"{not json}\n");
        std::fs::write(&path, log).unwrap();
        let (store, report) = ResponseStore::open(&path).unwrap();
        assert_eq!(report, LoadReport { loaded: 1, quarantined: 2 });
        assert_eq!(store.records()[0].choice, Choice::Option(1));
    }
}

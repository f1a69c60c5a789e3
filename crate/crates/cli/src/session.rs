//! Coding sessions: a task file, the model it was generated from, a response
//! log and the tokens allowed to use them. Scoring here is shared by the
//! service and the offline `metrics` subcommand.

use std::collections::{BTreeMap, HashMap};
use std::io::BufReader;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};

use serde::{Deserialize, Serialize};
use topiclab::evaluation::{read_tasks, Task};
use topiclab::{model_precision, topic_log_odds, Choice, CoderResponse, EvaluationError, SessionMetrics, TopicModel, TopicIntrusionTask, WordIntrusionTask};

use crate::error::{HarnessError, Result};
use crate::store::{LoadReport, ResponseStore};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoderSpec {
    pub id: String,
    pub token: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionSpec {
    pub id: String,
    pub tasks: PathBuf,
    pub model: PathBuf,
    pub responses: PathBuf,
    pub operator_token: String,
    pub coders: Vec<CoderSpec>,
}

/// Contents of a sessions file. Relative paths resolve against the file's directory.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SessionsFile {
    #[serde(rename = "session")]
    pub sessions: Vec<SessionSpec>,
}

impl SessionsFile {
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(HarnessError::file(path))?;
        let mut file: SessionsFile = toml::from_str(&text).map_err(|e| HarnessError::Session(e.to_string()))?;
        let base = path.parent().unwrap_or(Path::new("."));
        for s in &mut file.sessions {
            for p in [&mut s.tasks, &mut s.model, &mut s.responses] {
                if p.is_relative() {
                    *p = base.join(&*p);
                }
            }
        }
        Ok(file)
    }
}

pub fn load_tasks(path: &Path) -> Result<Vec<Task>> {
    let f = std::fs::File::open(path).map_err(HarnessError::file(path))?;
    Ok(read_tasks(BufReader::new(f))?)
}

pub fn load_model(path: &Path) -> Result<TopicModel> {
    let f = std::fs::File::open(path).map_err(HarnessError::file(path))?;
    Ok(TopicModel::read_json(BufReader::new(f))?)
}

/// Metrics per task kind; `None` when no response of that kind exists.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionReport {
    pub n_responses: usize,
    pub word_intrusion: Option<SessionMetrics>,
    pub topic_intrusion: Option<SessionMetrics>,
}

fn all_skipped(n: usize) -> SessionMetrics {
    SessionMetrics { model_precision: None, topic_log_odds: None, n_scored: 0, n_skipped: n }
}

pub fn score(tasks: &[Task], responses: &[CoderResponse], model: &TopicModel) -> Result<SessionReport> {
    let mut words: Vec<WordIntrusionTask> = Vec::new();
    let mut topics: Vec<TopicIntrusionTask> = Vec::new();
    for t in tasks {
        match t {
            Task::WordIntrusion(w) => words.push(w.clone()),
            Task::TopicIntrusion(t) => topics.push(t.clone()),
        }
    }
    let kind: HashMap<&str, bool> = tasks.iter().map(|t| (t.task_id(), matches!(t, Task::WordIntrusion(_)))).collect();
    let (mut wr, mut tr) = (Vec::new(), Vec::new());
    for r in responses {
        match kind.get(r.task_id.as_str()) {
            Some(true) => wr.push(r.clone()),
            Some(false) => tr.push(r.clone()),
            None => return Err(EvaluationError::UnknownTask(r.task_id.clone()).into()),
        }
    }
    let word_intrusion = match model_precision(&words, &wr) {
        _ if wr.is_empty() => None,
        Ok(m) => Some(m),
        Err(EvaluationError::NoScoredResponses) => Some(all_skipped(wr.len())),
        Err(e) => return Err(e.into()),
    };
    let topic_intrusion = match topic_log_odds(&topics, &tr, model) {
        _ if tr.is_empty() => None,
        Ok(m) => Some(m),
        Err(EvaluationError::NoScoredResponses) => Some(all_skipped(tr.len())),
        Err(e) => return Err(e.into()),
    };
    Ok(SessionReport { n_responses: responses.len(), word_intrusion, topic_intrusion })
}

/// What a coder sees of a task. Carries no intruder position.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskView {
    pub index: usize,
    pub task_id: String,
    pub kind: String,
    pub prompt: String,
    pub options: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snippet: Option<String>,
    pub progress: Progress,
    pub status: TaskStatus,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum TaskStatus {
    Uncoded,
    Coded,
    Skipped,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Progress {
    /// 1-based position of the task in the session (0 in session-wide counters).
    pub current: usize,
    pub coded: usize,
    pub skipped: usize,
    pub total: usize,
}

pub struct Session {
    pub spec: SessionSpec,
    tasks: Vec<Task>,
    index: HashMap<String, usize>,
    model: TopicModel,
    store: ResponseStore,
    coders: HashMap<String, String>,
    closed: AtomicBool,
}

#[derive(Debug)]
pub enum SubmitError {
    UnknownTask(String),
    InvalidChoice(String),
    Duplicate(String),
    Closed,
    Io(String),
}

impl Session {
    pub fn open(spec: SessionSpec) -> Result<(Self, LoadReport)> {
        let tasks = load_tasks(&spec.tasks)?;
        let model = load_model(&spec.model)?;
        let index: HashMap<String, usize> = tasks.iter().enumerate().map(|(i, t)| (t.task_id().to_owned(), i)).collect();
        if index.len() != tasks.len() {
            return Err(HarnessError::Session(format!("session {}: duplicate task ids", spec.id)));
        }
        let (store, report) = ResponseStore::open(&spec.responses)?;
        if let Some(r) = store.records().iter().find(|r| !index.contains_key(&r.task_id)) {
            return Err(HarnessError::Session(format!("session {}: stored response for unknown task {}", spec.id, r.task_id)));
        }
        let coders = spec.coders.iter().map(|c| (c.token.clone(), c.id.clone())).collect();
        let closed = AtomicBool::new(Self::closed_marker(&spec).exists());
        Ok((Session { spec, tasks, index, model, store, coders, closed }, report))
    }

    fn closed_marker(spec: &SessionSpec) -> PathBuf {
        let mut p = spec.responses.as_os_str().to_owned();
        p.push(".closed");
        PathBuf::from(p)
    }

    pub fn id(&self) -> &str {
        &self.spec.id
    }

    pub fn n_tasks(&self) -> usize {
        self.tasks.len()
    }

    pub fn coder_for_token(&self, token: &str) -> Option<&str> {
        self.coders.get(token).map(String::as_str)
    }

    pub fn is_operator(&self, token: &str) -> bool {
        !self.spec.operator_token.is_empty() && token == self.spec.operator_token
    }

    pub fn is_closed(&self) -> bool {
        self.closed.load(Ordering::SeqCst)
    }

    pub fn close(&self) -> Result<()> {
        let marker = Self::closed_marker(&self.spec);
        std::fs::write(&marker, chrono::Utc::now().to_rfc3339()).map_err(HarnessError::file(&marker))?;
        self.closed.store(true, Ordering::SeqCst);
        Ok(())
    }

    fn choices_of(&self, coder: &str) -> BTreeMap<usize, Choice> {
        self.store
            .records()
            .into_iter()
            .filter(|r| r.coder_id == coder)
            .filter_map(|r| self.index.get(&r.task_id).map(|&i| (i, r.choice)))
            .collect()
    }

    fn status(choices: &BTreeMap<usize, Choice>, i: usize) -> TaskStatus {
        match choices.get(&i) {
            None => TaskStatus::Uncoded,
            Some(Choice::Skip) => TaskStatus::Skipped,
            Some(Choice::Option(_)) => TaskStatus::Coded,
        }
    }

    pub fn progress(&self, coder: &str) -> Progress {
        let choices = self.choices_of(coder);
        let skipped = choices.values().filter(|c| **c == Choice::Skip).count();
        Progress { current: 0, coded: choices.len(), skipped, total: self.tasks.len() }
    }

    pub fn statuses(&self, coder: &str) -> Vec<(usize, &str, &'static str, TaskStatus)> {
        let choices = self.choices_of(coder);
        self.tasks.iter().enumerate().map(|(i, t)| (i, t.task_id(), kind_name(t), Self::status(&choices, i))).collect()
    }

    pub fn view(&self, coder: &str, i: usize) -> Option<TaskView> {
        let task = self.tasks.get(i)?;
        let choices = self.choices_of(coder);
        let mut progress = self.progress(coder);
        progress.current = i + 1;
        let (prompt, options, snippet) = match task {
            Task::WordIntrusion(t) => ("Pick the word that does not belong with the others.", t.options.clone(), None),
            Task::TopicIntrusion(t) => (
                "Read the document, then pick the topic that does not fit it.",
                t.topic_options.iter().map(|o| o.words.join(", ")).collect(),
                Some(t.snippet.clone()),
            ),
        };
        Some(TaskView {
            index: i,
            task_id: task.task_id().to_owned(),
            kind: kind_name(task).to_owned(),
            prompt: prompt.to_owned(),
            options,
            snippet,
            progress,
            status: Self::status(&choices, i),
        })
    }

    /// First task this coder has not answered, in task order.
    pub fn next_uncoded(&self, coder: &str) -> Option<TaskView> {
        let choices = self.choices_of(coder);
        (0..self.tasks.len()).find(|i| !choices.contains_key(i)).and_then(|i| self.view(coder, i))
    }

    pub fn submit(&self, coder: &str, task_id: &str, choice: Choice) -> Result<CoderResponse, SubmitError> {
        if self.is_closed() {
            return Err(SubmitError::Closed);
        }
        let &i = self.index.get(task_id).ok_or_else(|| SubmitError::UnknownTask(task_id.to_owned()))?;
        if let Choice::Option(c) = choice {
            let n = self.tasks[i].n_options();
            if c >= n {
                return Err(SubmitError::InvalidChoice(format!("choice {c} is out of range for a task with {n} options")));
            }
        }
        let response = CoderResponse {
            task_id: task_id.to_owned(),
            coder_id: coder.to_owned(),
            choice,
            submitted_at: chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
        };
        self.store.append(response).map_err(|e| match e {
            crate::store::AppendError::Duplicate { .. } => SubmitError::Duplicate(e.to_string()),
            crate::store::AppendError::Io(e) => SubmitError::Io(e.to_string()),
        })
    }

    pub fn report(&self) -> Result<SessionReport> {
        score(&self.tasks, &self.store.records(), &self.model)
    }
}

fn kind_name(t: &Task) -> &'static str {
    match t {
        Task::WordIntrusion(_) => "word_intrusion",
        Task::TopicIntrusion(_) => "topic_intrusion",
    }
}

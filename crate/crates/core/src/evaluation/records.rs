//! Line-delimited, self-describing records: every line carries
//! `"schema": 1` and, for tasks, a `kind` tag.

use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use super::{EvaluationError, TopicIntrusionTask, WordIntrusionTask};

pub const RECORD_SCHEMA: u32 = 1;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Task {
    WordIntrusion(WordIntrusionTask),
    TopicIntrusion(TopicIntrusionTask),
}

impl Task {
    pub fn task_id(&self) -> &str {
        match self {
            Task::WordIntrusion(t) => &t.task_id,
            Task::TopicIntrusion(t) => &t.task_id,
        }
    }

    pub fn n_options(&self) -> usize {
        match self {
            Task::WordIntrusion(t) => t.options.len(),
            Task::TopicIntrusion(t) => t.topic_options.len(),
        }
    }

    pub fn intruder_position(&self) -> usize {
        match self {
            Task::WordIntrusion(t) => t.intruder_position,
            Task::TopicIntrusion(t) => t.intruder_position,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct Envelope<T> {
    schema: u32,
    #[serde(flatten)]
    body: T,
}

pub fn write_records<T: Serialize, W: Write>(records: &[T], mut w: W) -> Result<(), EvaluationError> {
    for r in records {
        let line = serde_json::to_string(&Envelope { schema: RECORD_SCHEMA, body: r })
            .map_err(|e| EvaluationError::Parse { line: 0, message: e.to_string() })?;
        writeln!(w, "{line}")?;
    }
    w.flush()?;
    Ok(())
}

pub fn read_records<T: DeserializeOwned, R: BufRead>(r: R) -> Result<Vec<T>, EvaluationError> {
    let mut out = Vec::new();
    for (i, line) in r.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let env: Envelope<T> =
            serde_json::from_str(&line).map_err(|e| EvaluationError::Parse { line: i + 1, message: e.to_string() })?;
        if env.schema != RECORD_SCHEMA {
            return Err(EvaluationError::Parse { line: i + 1, message: format!("unsupported schema {}", env.schema) });
        }
        out.push(env.body);
    }
    Ok(out)
}

pub fn write_tasks<W: Write>(tasks: &[Task], w: W) -> Result<(), EvaluationError> {
    write_records(tasks, w)
}

pub fn read_tasks<R: BufRead>(r: R) -> Result<Vec<Task>, EvaluationError> {
    read_records(r)
}

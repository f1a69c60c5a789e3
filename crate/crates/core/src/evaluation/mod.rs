//! Stage III: intrusion tasks for human coders, their scoring, and
//! labelling packets.

mod labels;
mod records;
mod scoring;
mod tasks;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

use crate::inference::InferenceError;

pub use labels::{label_export, write_label_table, LabelDocument, LabelPacket, LabelTopic};
pub use records::{read_records, read_tasks, write_records, write_tasks, Task, RECORD_SCHEMA};
pub use scoring::{model_precision, topic_log_odds, THETA_FLOOR};
pub use tasks::{
    gen_topic_intrusion, gen_word_intrusion, model_id, TopicOption, DONOR_TOP_RANK, INTRUDER_MIN_RANK, TOPIC_OPTION_WORDS,
    WORD_TASK_TOP_WORDS,
};

#[derive(Debug, Error)]
pub enum EvaluationError {
    #[error("need at least {need} topics, model has {have}")]
    TooFewTopics { need: usize, have: usize },
    #[error("need at least {need} terms, model has {have}")]
    VocabularyTooSmall { need: usize, have: usize },
    #[error("no term qualifies as an intruder for topic {0}")]
    NoValidIntruder(usize),
    #[error("asked for {wanted} cases but only {have} documents exist")]
    TooFewDocs { wanted: usize, have: usize },
    #[error("unknown task `{0}`")]
    UnknownTask(String),
    #[error("unknown document `{0}`")]
    UnknownDocument(String),
    #[error("choice {choice} is out of range for task `{task_id}`")]
    InvalidChoice { task_id: String, choice: usize },
    #[error("no non-skipped responses to score")]
    NoScoredResponses,
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct WordIntrusionTask {
    pub task_id: String,
    pub model_id: String,
    pub topic_id: usize,
    /// Five top words of the topic plus one intruder, shuffled.
    pub options: Vec<String>,
    pub intruder_position: usize,
    pub gen_seed: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicIntrusionTask {
    pub task_id: String,
    pub model_id: String,
    pub doc_id: String,
    pub snippet: String,
    /// The document's three highest-θ topics plus one intruder, shuffled.
    pub topic_options: Vec<TopicOption>,
    pub intruder_position: usize,
    pub gen_seed: u64,
}

/// A coder's pick: an option index, or an explicit skip.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Choice {
    Option(usize),
    Skip,
}

impl Serialize for Choice {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Choice::Option(i) => s.serialize_u64(*i as u64),
            Choice::Skip => s.serialize_str("skip"),
        }
    }
}

impl<'de> Deserialize<'de> for Choice {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw {
            Index(usize),
            Text(String),
        }
        match Raw::deserialize(d)? {
            Raw::Index(i) => Ok(Choice::Option(i)),
            Raw::Text(s) if s.eq_ignore_ascii_case("skip") => Ok(Choice::Skip),
            Raw::Text(s) => Err(serde::de::Error::custom(format!("expected an option index or \"skip\", got {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CoderResponse {
    pub task_id: String,
    pub coder_id: String,
    pub choice: Choice,
    /// RFC 3339 timestamp.
    pub submitted_at: String,
}

/// Scores for one task kind. `model_precision` is set for word-intrusion
/// scoring, `topic_log_odds` for topic-intrusion scoring.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionMetrics {
    pub model_precision: Option<f64>,
    pub topic_log_odds: Option<f64>,
    pub n_scored: usize,
    pub n_skipped: usize,
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn choice_wire_format() {
        assert_eq!(serde_json::to_string(&Choice::Option(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Choice::Skip).unwrap(), "\"skip\"");
        assert_eq!(serde_json::from_str::<Choice>("\"SKIP\"").unwrap(), Choice::Skip);
        assert!(serde_json::from_str::<Choice>("\"maybe\"").is_err());
        assert!(serde_json::from_str::<Choice>("-1").is_err());
    }
}

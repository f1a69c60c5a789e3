//! Stage I: from raw records to a document-term matrix.

mod dtm;
mod lexicon;
mod preprocess;

use std::collections::{BTreeMap, HashSet};
use std::io::BufRead;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::digest::sha256_hex;

pub use dtm::{build_dtm, corpus_stats, CorpusStats, DocTermMatrix, SparseCounts, Vocabulary};
pub use lexicon::{english_lemmas, english_stopwords};
pub use preprocess::{preprocess, LexiconBase, PreprocessConfig, Preprocessor};

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("no document has any token left after preprocessing")]
    EmptyCorpus,
    #[error("duplicate document id `{0}`")]
    DuplicateId(String),
    #[error("record {0} has an empty id")]
    EmptyId(usize),
    #[error("invalid preprocessing config: {0}")]
    InvalidConfig(String),
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("malformed matrix file: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RawDocument {
    pub id: String,
    pub text: String,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, String>,
}

impl RawDocument {
    pub fn new(id: impl Into<String>, text: impl Into<String>) -> Self {
        RawDocument { id: id.into(), text: text.into(), meta: BTreeMap::new() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ProcessedDocument {
    pub id: String,
    pub tokens: Vec<String>,
}

/// Reads line-delimited JSON records (`id`, `text`, optional `meta`).
/// Blank lines are ignored; ids must be non-empty and unique.
pub fn read_corpus<R: BufRead>(reader: R) -> Result<Vec<RawDocument>, CorpusError> {
    let mut docs = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let doc: RawDocument = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Parse { line: i + 1, message: e.to_string() })?;
        if doc.id.is_empty() {
            return Err(CorpusError::EmptyId(i + 1));
        }
        if !seen.insert(doc.id.clone()) {
            return Err(CorpusError::DuplicateId(doc.id));
        }
        docs.push(doc);
    }
    Ok(docs)
}

fn normalized_text_digest(text: &str) -> String {
    let collapsed = text.split_whitespace().collect::<Vec<_>>().join(" ").to_lowercase();
    sha256_hex(collapsed.as_bytes())
}

/// Drops documents whose lowercased, whitespace-collapsed text was already
/// seen. The first occurrence wins and order is preserved.
pub fn dedupe(docs: Vec<RawDocument>) -> Vec<RawDocument> {
    let mut seen = HashSet::new();
    docs.into_iter().filter(|d| seen.insert(normalized_text_digest(&d.text))).collect()
}

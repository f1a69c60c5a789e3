//! Stage II model selection: held-out likelihood, residual dispersion,
//! semantic coherence and exclusivity, computed for one model or across a
//! grid of topic counts.

mod coherence;
mod exclusivity;
mod heldout;
mod report;
mod residual;
mod search;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::inference::InferenceError;

pub use coherence::semantic_coherence;
pub use exclusivity::{exclusivity, frex_scores};
pub use heldout::{completion_log_likelihood, heldout_log_likelihood, split_corpus, CorpusSplit, HeldoutDoc, HeldoutResult};
pub use report::{
    emit_report, read_diagnostics_table, read_topic_table, write_diagnostics_table, write_topic_table, ReportFormat,
    TopicScoreRow,
};
pub use residual::{dispersion_statistic, residual_dispersion};
pub use search::{diagnose_model, search_k, ModelDiagnostics, SearchResult};

/// Default number of top words for coherence and exclusivity.
pub const DEFAULT_TOP_WORDS: usize = 10;
/// Default FREX weight on exclusivity.
pub const DEFAULT_FREX_WEIGHT: f64 = 0.7;

#[derive(Debug, Error)]
pub enum DiagnosticsError {
    #[error("top word `{0}` occurs in no document")]
    TopWordAbsent(String),
    #[error("exclusivity needs at least two topics")]
    SingleTopic,
    #[error("held-out set is empty")]
    EmptyHeldout,
    #[error("model was not fitted on this corpus")]
    ModelCorpusMismatch,
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error("no diagnostics rows to report")]
    EmptyReport,
    #[error("K = {k}: {source}")]
    AtK {
        k: usize,
        #[source]
        source: Box<DiagnosticsError>,
    },
    #[error(transparent)]
    Inference(#[from] InferenceError),
    #[error("malformed table: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

fn default_infer_iterations() -> usize {
    100
}

/// Document-completion protocol: a seeded share of documents is held out of
/// training, and each held-out document's tokens are split into an observed
/// part (used to infer θ) and a scored part.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HeldoutSplit {
    pub heldout_doc_fraction: f64,
    pub word_split_fraction: f64,
    pub seed: u64,
    /// Gibbs sweeps used to infer θ for each held-out document.
    pub infer_iterations: usize,
}

impl Default for HeldoutSplit {
    fn default() -> Self {
        HeldoutSplit { heldout_doc_fraction: 0.1, word_split_fraction: 0.5, seed: 0, infer_iterations: default_infer_iterations() }
    }
}

impl HeldoutSplit {
    pub fn validate(&self) -> Result<(), DiagnosticsError> {
        for (name, f) in [("heldout_doc_fraction", self.heldout_doc_fraction), ("word_split_fraction", self.word_split_fraction)] {
            if !(f > 0.0 && f < 1.0) {
                return Err(DiagnosticsError::InvalidParameter(format!("{name} must be in (0, 1), got {f}")));
            }
        }
        Ok(())
    }
}

/// One entry of a K grid.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsRow {
    pub k: usize,
    pub heldout_llpw: f64,
    pub residual_dispersion: f64,
    pub mean_coherence: f64,
    pub mean_exclusivity: f64,
    pub wall_time_ms: u64,
}

/// Per-topic coherence and exclusivity of one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TopicScores {
    pub coherence: Vec<f64>,
    pub exclusivity: Vec<f64>,
}

pub(crate) fn mean(xs: &[f64]) -> f64 {
    if xs.is_empty() {
        0.0
    } else {
        xs.iter().sum::<f64>() / xs.len() as f64
    }
}

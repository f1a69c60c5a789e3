//! Stage II core: seeded LDA fitting.
//!
//! [`fit`] runs a collapsed Gibbs sampler. Topic assignments start either
//! uniformly or from the anchor-word estimate of [`spectral_init`], and the
//! reported φ and θ average the count matrices of all post-burn-in sweeps.

mod gibbs;
mod simplex;
mod spectral;

use std::io::{Read, Write};

use ndarray::{Array1, Array2, Axis};
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::DocTermMatrix;

pub use gibbs::{fit, infer_theta};
pub use simplex::simplex_least_squares;
pub use spectral::{cooccurrence, recover_from_cooccurrence, spectral_init, AnchorRecovery};

const MODEL_FORMAT: &str = "topiclab-model";
const MODEL_VERSION: u32 = 1;

#[derive(Debug, Error)]
pub enum InferenceError {
    #[error("corpus has no tokens")]
    EmptyCorpus,
    #[error("document has no tokens")]
    EmptyDocument,
    #[error("invalid hyperparameters: {0}")]
    InvalidHyperparams(String),
    #[error("co-occurrence matrix has fewer than {k} distinct anchor rows (found {found})")]
    RankDeficient { k: usize, found: usize },
    #[error("topic {topic} out of range for a {k}-topic model")]
    TopicOutOfRange { topic: usize, k: usize },
    #[error("term index {0} is outside the model vocabulary")]
    TermOutOfRange(usize),
    #[error("malformed model: {0}")]
    Format(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Init {
    Spectral,
    Random,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Hyperparams {
    pub k: usize,
    /// Symmetric document-topic prior.
    pub alpha: f64,
    /// Symmetric topic-word prior.
    pub eta: f64,
    pub max_iterations: usize,
    pub burn_in: usize,
    pub init: Init,
    pub seed: u64,
}

impl Hyperparams {
    /// Defaults: α = 50/K, η = 0.01, 1000 sweeps with 200 burn-in, spectral init, seed 0.
    pub fn new(k: usize) -> Self {
        Hyperparams {
            k,
            alpha: 50.0 / k.max(1) as f64,
            eta: 0.01,
            max_iterations: 1000,
            burn_in: 200,
            init: Init::Spectral,
            seed: 0,
        }
    }

    pub fn validate(&self) -> Result<(), InferenceError> {
        let bad = |m: String| Err(InferenceError::InvalidHyperparams(m));
        if self.k < 1 {
            return bad("K must be at least 1".into());
        }
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return bad(format!("alpha must be positive, got {}", self.alpha));
        }
        if !(self.eta > 0.0 && self.eta.is_finite()) {
            return bad(format!("eta must be positive, got {}", self.eta));
        }
        if self.burn_in >= self.max_iterations {
            return bad(format!("burn_in ({}) must be below max_iterations ({})", self.burn_in, self.max_iterations));
        }
        Ok(())
    }
}

/// Hyperparameters for a grid of K values. `alpha: None` means 50/K per model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct HyperTemplate {
    pub alpha: Option<f64>,
    pub eta: f64,
    pub max_iterations: usize,
    pub burn_in: usize,
    pub init: Init,
    pub seed: u64,
}

impl Default for HyperTemplate {
    fn default() -> Self {
        let h = Hyperparams::new(1);
        HyperTemplate { alpha: None, eta: h.eta, max_iterations: h.max_iterations, burn_in: h.burn_in, init: h.init, seed: h.seed }
    }
}

impl HyperTemplate {
    pub fn resolve(&self, k: usize, seed: u64) -> Hyperparams {
        let mut h = Hyperparams::new(k);
        if let Some(a) = self.alpha {
            h.alpha = a;
        }
        h.eta = self.eta;
        h.max_iterations = self.max_iterations;
        h.burn_in = self.burn_in;
        h.init = self.init;
        h.seed = seed;
        h
    }
}

/// A fitted model. Immutable once built; rows of `phi` (K×V) and `theta`
/// (D×K) are probability distributions.
#[derive(Debug, Clone, PartialEq)]
pub struct TopicModel {
    phi: Array2<f64>,
    theta: Array2<f64>,
    terms: Vec<String>,
    doc_ids: Vec<String>,
    vocab_digest: String,
    hyper: Hyperparams,
    log_likelihood: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u32,
    hyper: Hyperparams,
    vocab_digest: String,
    terms: Vec<String>,
    doc_ids: Vec<String>,
    phi: Vec<Vec<f64>>,
    theta: Vec<Vec<f64>>,
    log_likelihood: Vec<f64>,
}

fn rows_of(m: &Array2<f64>) -> Vec<Vec<f64>> {
    m.rows().into_iter().map(|r| r.to_vec()).collect()
}

fn from_rows(rows: Vec<Vec<f64>>, ncols: usize, what: &str) -> Result<Array2<f64>, InferenceError> {
    let nrows = rows.len();
    if rows.iter().any(|r| r.len() != ncols) {
        return Err(InferenceError::Format(format!("{what} rows must have {ncols} entries")));
    }
    Array2::from_shape_vec((nrows, ncols), rows.into_iter().flatten().collect())
        .map_err(|e| InferenceError::Format(e.to_string()))
}

fn check_distributions(m: &Array2<f64>, what: &str) -> Result<(), InferenceError> {
    for (i, row) in m.rows().into_iter().enumerate() {
        if row.iter().any(|&x| !x.is_finite() || x < 0.0) {
            return Err(InferenceError::Format(format!("{what} row {i} has a negative or non-finite entry")));
        }
        let s = row.sum();
        if (s - 1.0).abs() > 1e-9 {
            return Err(InferenceError::Format(format!("{what} row {i} sums to {s}")));
        }
    }
    Ok(())
}

impl TopicModel {
    /// Assembles a model from explicit distributions, checking shapes and
    /// that every row sums to one within 1e-9.
    pub fn from_parts(
        phi: Array2<f64>,
        theta: Array2<f64>,
        terms: Vec<String>,
        doc_ids: Vec<String>,
        hyper: Hyperparams,
        log_likelihood: Vec<f64>,
    ) -> Result<Self, InferenceError> {
        let k = phi.nrows();
        if k == 0 || hyper.k != k {
            return Err(InferenceError::Format(format!("phi has {k} rows but K = {}", hyper.k)));
        }
        if phi.ncols() != terms.len() {
            return Err(InferenceError::Format(format!("phi has {} columns for {} terms", phi.ncols(), terms.len())));
        }
        if theta.ncols() != k || theta.nrows() != doc_ids.len() {
            return Err(InferenceError::Format(format!(
                "theta is {}x{}, expected {}x{k}",
                theta.nrows(),
                theta.ncols(),
                doc_ids.len()
            )));
        }
        check_distributions(&phi, "phi")?;
        check_distributions(&theta, "theta")?;
        let vocab_digest = crate::corpus::Vocabulary::new(terms.iter().cloned()).digest();
        Ok(TopicModel { phi, theta, terms, doc_ids, vocab_digest, hyper, log_likelihood })
    }

    pub fn k(&self) -> usize {
        self.phi.nrows()
    }

    pub fn n_terms(&self) -> usize {
        self.phi.ncols()
    }

    pub fn n_docs(&self) -> usize {
        self.theta.nrows()
    }

    pub fn phi(&self) -> &Array2<f64> {
        &self.phi
    }

    pub fn theta(&self) -> &Array2<f64> {
        &self.theta
    }

    pub fn terms(&self) -> &[String] {
        &self.terms
    }

    pub fn doc_ids(&self) -> &[String] {
        &self.doc_ids
    }

    pub fn vocab_digest(&self) -> &str {
        &self.vocab_digest
    }

    pub fn hyper(&self) -> &Hyperparams {
        &self.hyper
    }

    /// Complete-data log-likelihood after each sweep.
    pub fn log_likelihood(&self) -> &[f64] {
        &self.log_likelihood
    }

    pub fn doc_index(&self, id: &str) -> Option<usize> {
        self.doc_ids.iter().position(|d| d == id)
    }

    /// True when the model was fitted on exactly this matrix's vocabulary and documents.
    pub fn matches(&self, dtm: &DocTermMatrix) -> bool {
        self.vocab_digest == dtm.vocab().digest() && self.doc_ids == dtm.doc_ids()
    }

    /// Relabels topics so that new topic `i` is old topic `perm[i]`.
    pub fn permute_topics(&self, perm: &[usize]) -> TopicModel {
        assert_eq!(perm.len(), self.k());
        let phi = self.phi.select(Axis(0), perm);
        let theta = self.theta.select(Axis(1), perm);
        TopicModel { phi, theta, ..self.clone() }
    }

    pub fn write_json<W: Write>(&self, w: W) -> Result<(), InferenceError> {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            hyper: self.hyper.clone(),
            vocab_digest: self.vocab_digest.clone(),
            terms: self.terms.clone(),
            doc_ids: self.doc_ids.clone(),
            phi: rows_of(&self.phi),
            theta: rows_of(&self.theta),
            log_likelihood: self.log_likelihood.clone(),
        };
        serde_json::to_writer(w, &file).map_err(|e| InferenceError::Format(e.to_string()))
    }

    pub fn read_json<R: Read>(r: R) -> Result<Self, InferenceError> {
        let file: ModelFile = serde_json::from_reader(r).map_err(|e| InferenceError::Format(e.to_string()))?;
        if file.format != MODEL_FORMAT || file.version != MODEL_VERSION {
            return Err(InferenceError::Format(format!("unsupported model format {} v{}", file.format, file.version)));
        }
        let phi = from_rows(file.phi, file.terms.len(), "phi")?;
        let theta = from_rows(file.theta, file.hyper.k, "theta")?;
        let model = TopicModel::from_parts(phi, theta, file.terms, file.doc_ids, file.hyper, file.log_likelihood)?;
        if model.vocab_digest != file.vocab_digest {
            return Err(InferenceError::Format("vocab_digest does not match terms".into()));
        }
        Ok(model)
    }
}

/// Indices of `values` in descending order, ties by ascending index.
pub(crate) fn rank_desc(values: impl IntoIterator<Item = f64>) -> Vec<usize> {
    let values: Vec<f64> = values.into_iter().collect();
    let mut idx: Vec<usize> = (0..values.len()).collect();
    idx.sort_by(|&a, &b| values[b].total_cmp(&values[a]).then(a.cmp(&b)));
    idx
}

fn check_topic(model: &TopicModel, topic: usize) -> Result<(), InferenceError> {
    if topic >= model.k() {
        return Err(InferenceError::TopicOutOfRange { topic, k: model.k() });
    }
    Ok(())
}

/// Term indices of topic `topic` by descending probability.
pub fn top_word_indices(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<usize>, InferenceError> {
    check_topic(model, topic)?;
    let mut ranked = rank_desc(model.phi.row(topic).iter().copied());
    ranked.truncate(n);
    Ok(ranked)
}

pub fn top_words(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>, InferenceError> {
    Ok(top_word_indices(model, topic, n)?.into_iter().map(|v| model.terms[v].clone()).collect())
}

/// Document indices by descending share of `topic`.
pub fn top_document_indices(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<usize>, InferenceError> {
    check_topic(model, topic)?;
    let mut ranked = rank_desc(model.theta.column(topic).iter().copied());
    ranked.truncate(n);
    Ok(ranked)
}

pub fn top_documents(model: &TopicModel, topic: usize, n: usize) -> Result<Vec<String>, InferenceError> {
    Ok(top_document_indices(model, topic, n)?.into_iter().map(|d| model.doc_ids[d].clone()).collect())
}

/// Column means of θ.
pub fn mean_topic_proportions(model: &TopicModel) -> Array1<f64> {
    model.theta.mean_axis(Axis(0)).unwrap_or_else(|| Array1::zeros(model.k()))
}

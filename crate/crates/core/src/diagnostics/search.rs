use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    completion_log_likelihood, exclusivity, mean, residual_dispersion, semantic_coherence, split_corpus, DiagnosticsError,
    DiagnosticsRow, HeldoutSplit, TopicScores, DEFAULT_FREX_WEIGHT, DEFAULT_TOP_WORDS,
};
use crate::corpus::DocTermMatrix;
use crate::inference::{fit, HyperTemplate, TopicModel};
use crate::rng::derive_seed;

/// Diagnostics of a single fitted model (no held-out refit).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelDiagnostics {
    pub k: usize,
    pub residual_dispersion: f64,
    pub mean_coherence: f64,
    pub mean_exclusivity: f64,
    pub topics: TopicScores,
}

/// Coherence and exclusivity (top `m` words, FREX weight `w`) plus residual
/// dispersion of `model` against the corpus it was fitted on.
pub fn diagnose_model(model: &TopicModel, dtm: &DocTermMatrix, m: usize, w: f64) -> Result<ModelDiagnostics, DiagnosticsError> {
    let m = m.min(dtm.n_terms());
    let coherence = semantic_coherence(model, dtm, m)?;
    let excl = exclusivity(model, m, w)?;
    let residual = residual_dispersion(model, dtm)?;
    Ok(ModelDiagnostics {
        k: model.k(),
        residual_dispersion: residual,
        mean_coherence: mean(&coherence),
        mean_exclusivity: mean(&excl),
        topics: TopicScores { coherence, exclusivity: excl },
    })
}

#[derive(Debug, Clone)]
pub struct SearchResult {
    pub row: DiagnosticsRow,
    pub topics: TopicScores,
}

/// Fits one model per K on the training part of `split` and scores it.
///
/// Each K uses seed `derive_seed(template.seed, "searchk", K)`; all K share
/// the same held-out documents. Held-out likelihood and residual dispersion
/// use the training fit, coherence counts documents of the full corpus.
/// Grid entries run in parallel; results come back ordered by K.
pub fn search_k(
    dtm: &DocTermMatrix,
    k_list: &[usize],
    template: &HyperTemplate,
    split: &HeldoutSplit,
) -> Result<Vec<SearchResult>, DiagnosticsError> {
    if k_list.is_empty() {
        return Err(DiagnosticsError::InvalidParameter("K list is empty".into()));
    }
    if let Some(&k) = k_list.iter().find(|&&k| k < 2) {
        return Err(DiagnosticsError::InvalidParameter(format!("every K must be at least 2, got {k}")));
    }
    let mut ks = k_list.to_vec();
    ks.sort_unstable();
    ks.dedup();

    let parts = split_corpus(dtm, split)?;
    let train = dtm.select_docs(&parts.train);
    let m = DEFAULT_TOP_WORDS.min(dtm.n_terms());

    ks.par_iter()
        .map(|&k| {
            let at_k = |e: DiagnosticsError| DiagnosticsError::AtK { k, source: Box::new(e) };
            let started = Instant::now();
            let hyper = template.resolve(k, derive_seed(template.seed, "searchk", k as u64));
            let model = fit(&train, &hyper).map_err(|e| at_k(e.into()))?;
            let (total, n) =
                completion_log_likelihood(&model, &parts.heldout, split.infer_iterations, split.seed).map_err(at_k)?;
            let coherence = semantic_coherence(&model, dtm, m).map_err(at_k)?;
            let excl = exclusivity(&model, m, DEFAULT_FREX_WEIGHT).map_err(at_k)?;
            let residual = residual_dispersion(&model, &train).map_err(at_k)?;
            Ok(SearchResult {
                row: DiagnosticsRow {
                    k,
                    heldout_llpw: total / n as f64,
                    residual_dispersion: residual,
                    mean_coherence: mean(&coherence),
                    mean_exclusivity: mean(&excl),
                    wall_time_ms: started.elapsed().as_millis() as u64,
                },
                topics: TopicScores { coherence, exclusivity: excl },
            })
        })
        .collect()
}

use super::{DiagnosticsError, HeldoutSplit};
use crate::corpus::{DocTermMatrix, SparseCounts};
use crate::inference::{fit, infer_theta, Hyperparams, TopicModel};
use crate::rng::{derive_seed, SeededRng};

/// A held-out document split into the part θ is inferred from and the part scored.
#[derive(Debug, Clone, PartialEq)]
pub struct HeldoutDoc {
    pub doc_index: usize,
    pub observed: SparseCounts,
    pub scored: SparseCounts,
}

#[derive(Debug, Clone)]
pub struct CorpusSplit {
    /// Training document indices, ascending.
    pub train: Vec<usize>,
    pub heldout: Vec<HeldoutDoc>,
    /// Held-out documents with fewer than two tokens; excluded from scoring.
    pub skipped: Vec<String>,
}

/// Seeded document-completion split.
///
/// Stream 0 of `split.seed` shuffles document indices; the first
/// `round(D · heldout_doc_fraction)` (at least 1, at most D − 1) are held out.
/// Each held-out document `d` shuffles its tokens on stream `d + 1` and keeps
/// the first `floor(N_d · word_split_fraction)` (clamped to 1..N_d − 1) as observed.
pub fn split_corpus(dtm: &DocTermMatrix, split: &HeldoutSplit) -> Result<CorpusSplit, DiagnosticsError> {
    split.validate()?;
    let n = dtm.n_docs();
    if n < 2 {
        return Err(DiagnosticsError::EmptyHeldout);
    }
    let n_held = ((n as f64 * split.heldout_doc_fraction).round() as usize).clamp(1, n - 1);
    let mut order: Vec<usize> = (0..n).collect();
    SeededRng::stream(split.seed, 0).shuffle(&mut order);
    let mut held = order[..n_held].to_vec();
    held.sort_unstable();
    let mut train = order[n_held..].to_vec();
    train.sort_unstable();

    let mut heldout = Vec::with_capacity(n_held);
    let mut skipped = Vec::new();
    for d in held {
        let mut tokens = dtm.row(d).tokens();
        if tokens.len() < 2 {
            skipped.push(dtm.doc_ids()[d].clone());
            continue;
        }
        SeededRng::stream(split.seed, d as u64 + 1).shuffle(&mut tokens);
        let n_obs = ((tokens.len() as f64 * split.word_split_fraction).floor() as usize).clamp(1, tokens.len() - 1);
        heldout.push(HeldoutDoc {
            doc_index: d,
            observed: SparseCounts::from_terms(tokens[..n_obs].iter().copied()),
            scored: SparseCounts::from_terms(tokens[n_obs..].iter().copied()),
        });
    }
    if heldout.is_empty() {
        return Err(DiagnosticsError::EmptyHeldout);
    }
    Ok(CorpusSplit { train, heldout, skipped })
}

/// `(Σ log p(scored tokens | θ̂, φ), number of scored tokens)` with θ̂
/// inferred from each document's observed part.
pub fn completion_log_likelihood(
    model: &TopicModel,
    docs: &[HeldoutDoc],
    iterations: usize,
    seed: u64,
) -> Result<(f64, u64), DiagnosticsError> {
    let phi = model.phi();
    let mut total = 0.0;
    let mut tokens = 0u64;
    for doc in docs {
        let theta = infer_theta(model, &doc.observed, iterations, derive_seed(seed, "infer", doc.doc_index as u64))?;
        for (w, c) in doc.scored.iter() {
            let p: f64 = theta.iter().enumerate().map(|(k, th)| th * phi[[k, w]]).sum();
            total += c as f64 * p.ln();
            tokens += c as u64;
        }
    }
    Ok((total, tokens))
}

#[derive(Debug, Clone)]
pub struct HeldoutResult {
    /// Mean log-likelihood per scored token (≤ 0).
    pub llpw: f64,
    pub n_docs: usize,
    pub n_tokens: u64,
    pub skipped: Vec<String>,
    /// The model fitted on the training documents.
    pub model: TopicModel,
    pub train: DocTermMatrix,
}

/// Fits on the training part of `split` and scores held-out completions.
pub fn heldout_log_likelihood(dtm: &DocTermMatrix, hyper: &Hyperparams, split: &HeldoutSplit) -> Result<HeldoutResult, DiagnosticsError> {
    let parts = split_corpus(dtm, split)?;
    let train = dtm.select_docs(&parts.train);
    let model = fit(&train, hyper)?;
    let (total, n_tokens) = completion_log_likelihood(&model, &parts.heldout, split.infer_iterations, split.seed)?;
    Ok(HeldoutResult {
        llpw: total / n_tokens as f64,
        n_docs: parts.heldout.len(),
        n_tokens,
        skipped: parts.skipped,
        model,
        train,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::Vocabulary;
    use ndarray::{array, Array2};

    fn dtm(docs: &[&[(usize, u32)]], v: usize) -> DocTermMatrix {
        let rows = docs.iter().map(|d| SparseCounts::from_pairs(d.iter().copied())).collect();
        let ids = (0..docs.len()).map(|i| format!("d{i}")).collect();
        DocTermMatrix::new(ids, Vocabulary::new((0..v).map(|i| format!("w{i:02}"))), rows).unwrap()
    }

    #[test]
    fn uniform_topics_give_minus_log_v() {
        let v = 7;
        let phi = Array2::from_elem((3, v), 1.0 / v as f64);
        let terms = (0..v).map(|i| format!("w{i:02}")).collect();
        let model = TopicModel::from_parts(phi, Array2::from_elem((1, 3), 1.0 / 3.0), terms, vec!["x".into()], Hyperparams::new(3), vec![])
            .unwrap();
        let corpus = dtm(&[&[(0, 3), (2, 1)], &[(1, 2), (6, 5)], &[(3, 1), (4, 2), (5, 1)], &[(0, 1), (6, 1)]], v);
        let split = HeldoutSplit { heldout_doc_fraction: 0.5, seed: 4, ..Default::default() };
        let parts = split_corpus(&corpus, &split).unwrap();
        let (total, n) = completion_log_likelihood(&model, &parts.heldout, 20, 1).unwrap();
        assert!((total / n as f64 + (v as f64).ln()).abs() < 1e-9);
    }

    #[test]
    fn single_topic_hand_value() {
        let model = TopicModel::from_parts(
            array![[0.5, 0.3, 0.2]],
            array![[1.0]],
            vec!["a".into(), "b".into(), "c".into()],
            vec!["x".into()],
            Hyperparams::new(1),
            vec![],
        )
        .unwrap();
        let doc = HeldoutDoc {
            doc_index: 0,
            observed: SparseCounts::from_pairs([(2, 1)]),
            scored: SparseCounts::from_pairs([(0, 2), (1, 1)]),
        };
        let (total, n) = completion_log_likelihood(&model, &[doc], 10, 0).unwrap();
        let expect = (2.0 * 0.5f64.ln() + 0.3f64.ln()) / 3.0;
        assert_eq!(n, 3);
        assert!((total / 3.0 - expect).abs() < 1e-12);
    }

    #[test]
    fn split_is_seeded_and_partitions() {
        let docs: Vec<Vec<(usize, u32)>> = (0..20).map(|i| vec![(i % 5, 3), ((i + 1) % 5, 2)]).collect();
        let refs: Vec<&[(usize, u32)]> = docs.iter().map(|d| d.as_slice()).collect();
        let corpus = dtm(&refs, 5);
        let split = HeldoutSplit { seed: 9, ..Default::default() };
        let a = split_corpus(&corpus, &split).unwrap();
        let b = split_corpus(&corpus, &split).unwrap();
        assert_eq!(a.train, b.train);
        assert_eq!(a.heldout, b.heldout);
        assert_eq!(a.heldout.len(), 2);
        assert_eq!(a.train.len(), 18);
        for h in &a.heldout {
            assert!(!a.train.contains(&h.doc_index));
            assert_eq!(h.observed.total(), 2);
            assert_eq!(h.scored.total(), 3);
            let mut merged: Vec<usize> = h.observed.tokens();
            merged.extend(h.scored.tokens());
            merged.sort();
            assert_eq!(merged, corpus.row(h.doc_index).tokens());
        }
    }

    #[test]
    fn short_docs_are_skipped_and_reported() {
        let corpus = dtm(&[&[(0, 1)], &[(1, 1)], &[(0, 2), (1, 2)]], 2);
        // every doc held out except one; only d2 has two tokens
        let split = HeldoutSplit { heldout_doc_fraction: 0.9, seed: 0, ..Default::default() };
        match split_corpus(&corpus, &split) {
            Ok(parts) => {
                assert!(parts.heldout.iter().all(|h| h.doc_index == 2));
                assert!(!parts.skipped.is_empty());
            }
            Err(e) => assert!(matches!(e, DiagnosticsError::EmptyHeldout)),
        }
        let tiny = dtm(&[&[(0, 1)], &[(1, 1)]], 2);
        assert!(matches!(split_corpus(&tiny, &split), Err(DiagnosticsError::EmptyHeldout)));
    }

    #[test]
    fn fractions_validated() {
        let corpus = dtm(&[&[(0, 2)], &[(1, 2)]], 2);
        let split = HeldoutSplit { heldout_doc_fraction: 1.0, ..Default::default() };
        assert!(matches!(split_corpus(&corpus, &split), Err(DiagnosticsError::InvalidParameter(_))));
    }
}

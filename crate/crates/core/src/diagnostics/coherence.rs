use super::DiagnosticsError;
use crate::corpus::DocTermMatrix;
use crate::inference::{top_word_indices, TopicModel};

/// Sorted document lists for each term.
fn postings(dtm: &DocTermMatrix) -> Vec<Vec<u32>> {
    let mut lists = vec![Vec::new(); dtm.n_terms()];
    for (d, row) in dtm.rows().iter().enumerate() {
        for (t, _) in row.iter() {
            lists[t].push(d as u32);
        }
    }
    lists
}

fn intersection_len(a: &[u32], b: &[u32]) -> usize {
    let (mut i, mut j, mut n) = (0, 0, 0);
    while i < a.len() && j < b.len() {
        match a[i].cmp(&b[j]) {
            std::cmp::Ordering::Less => i += 1,
            std::cmp::Ordering::Greater => j += 1,
            std::cmp::Ordering::Equal => {
                n += 1;
                i += 1;
                j += 1;
            }
        }
    }
    n
}

/// Per-topic `Σ_{m=2..M} Σ_{l<m} log((D(v_m, v_l) + 1) / D(v_l))` over the
/// topic's top `m` words, where `D` counts documents of `dtm`.
pub fn semantic_coherence(model: &TopicModel, dtm: &DocTermMatrix, m: usize) -> Result<Vec<f64>, DiagnosticsError> {
    if model.vocab_digest() != dtm.vocab().digest() {
        return Err(DiagnosticsError::ModelCorpusMismatch);
    }
    if m < 1 || m > dtm.n_terms() {
        return Err(DiagnosticsError::InvalidParameter(format!("M = {m} must be in 1..={}", dtm.n_terms())));
    }
    let lists = postings(dtm);
    (0..model.k())
        .map(|topic| {
            let top = top_word_indices(model, topic, m)?;
            let mut score = 0.0;
            for (mi, &vm) in top.iter().enumerate().skip(1) {
                for &vl in &top[..mi] {
                    let dl = lists[vl].len();
                    if dl == 0 {
                        return Err(DiagnosticsError::TopWordAbsent(dtm.vocab().term(vl).to_owned()));
                    }
                    let co = intersection_len(&lists[vm], &lists[vl]);
                    score += ((co as f64 + 1.0) / dl as f64).ln();
                }
            }
            Ok(score)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{SparseCounts, Vocabulary};
    use crate::inference::Hyperparams;
    use ndarray::array;

    fn model_over(terms: &[&str], phi: ndarray::Array2<f64>) -> TopicModel {
        let k = phi.nrows();
        TopicModel::from_parts(
            phi,
            ndarray::Array2::from_elem((1, k), 1.0 / k as f64),
            terms.iter().map(|s| s.to_string()).collect(),
            vec!["x".into()],
            Hyperparams::new(k),
            vec![],
        )
        .unwrap()
    }

    fn dtm(terms: &[&str], docs: &[&[usize]]) -> DocTermMatrix {
        let rows = docs.iter().map(|d| SparseCounts::from_terms(d.iter().copied())).collect();
        let ids = (0..docs.len()).map(|i| format!("d{i}")).collect();
        DocTermMatrix::new(ids, Vocabulary::new(terms.iter().copied()), rows).unwrap()
    }

    #[test]
    #[allow(clippy::approx_constant)]
    fn co_document_pairs_hand_values() {
        // D(a) = 3, D(a, b) = 2 -> log(3/3) = 0
        let corpus = dtm(&["a", "b", "c"], &[&[0, 1], &[0, 1], &[0, 2]]);
        let m = model_over(&["a", "b", "c"], array![[0.6, 0.3, 0.1]]);
        let s = semantic_coherence(&m, &corpus, 2).unwrap();
        assert!(s[0].abs() < 1e-12);

        // D(a) = 4, D(a, b) = 1 -> log(2/4)
        let corpus = dtm(&["a", "b", "c"], &[&[0, 1], &[0], &[0, 2], &[0], &[2]]);
        let s = semantic_coherence(&m, &corpus, 2).unwrap();
        assert!((s[0] - (0.5f64).ln()).abs() < 1e-12);
        assert!((s[0] + 0.6931).abs() < 1e-4);
    }

    #[test]
    fn single_word_sum_is_empty() {
        let corpus = dtm(&["a", "b"], &[&[0, 1], &[1]]);
        let m = model_over(&["a", "b"], array![[0.6, 0.4], [0.2, 0.8]]);
        assert_eq!(semantic_coherence(&m, &corpus, 1).unwrap(), vec![0.0, 0.0]);
    }

    #[test]
    fn mismatched_vocab_rejected() {
        let corpus = dtm(&["a", "b"], &[&[0, 1]]);
        let m = model_over(&["a", "z"], array![[0.5, 0.5]]);
        assert!(matches!(semantic_coherence(&m, &corpus, 2), Err(DiagnosticsError::ModelCorpusMismatch)));
    }

    #[test]
    fn absent_top_word_detected() {
        let corpus = DocTermMatrix::new(
            vec!["d0".into(), "d1".into()],
            Vocabulary::new(["a", "b", "c"]),
            vec![SparseCounts::from_terms([1]), SparseCounts::from_terms([2])],
        );
        // term `a` has no documents, so the strict constructor rejects it; the
        // training view path can still produce such a matrix.
        assert!(corpus.is_err());
        let full = dtm(&["a", "b", "c"], &[&[0], &[1], &[2]]);
        let view = full.select_docs(&[1, 2]);
        let m = model_over(&["a", "b", "c"], array![[0.6, 0.3, 0.1]]);
        assert!(matches!(semantic_coherence(&m, &view, 2), Err(DiagnosticsError::TopWordAbsent(w)) if w == "a"));
    }

    #[test]
    fn intersection() {
        assert_eq!(intersection_len(&[1, 3, 5, 7], &[2, 3, 7, 9]), 2);
        assert_eq!(intersection_len(&[], &[1]), 0);
    }
}

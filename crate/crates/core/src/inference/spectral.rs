//! Anchor-word recovery of topic-word distributions from word co-occurrence.
//!
//! 1. `Q` (V×V): per-document pair counts `c cᵀ − diag(c)` scaled by
//!    `1 / (N_d (N_d − 1))`, averaged over documents with at least two tokens.
//!    `Q` sums to one and its row sums are word marginals `p(w)`.
//! 2. Rows of `Q` are normalized to conditional distributions `Q̄_w = p(· | w)`.
//! 3. K anchors are picked greedily: the row farthest from the origin, then
//!    repeatedly the row farthest from the affine span of those chosen
//!    (Gram-Schmidt on rows translated by the first anchor).
//! 4. Each `Q̄_w` is written as a convex combination of the anchor rows by
//!    simplex-constrained least squares, giving `p(topic | w)`.
//! 5. Bayes' rule with `p(w)` turns those into `p(w | topic)`.

use ndarray::Array2;

use super::simplex::simplex_least_squares;
use super::InferenceError;
use crate::corpus::DocTermMatrix;

#[derive(Debug, Clone)]
pub struct AnchorRecovery {
    /// Anchor word index per topic, in selection order.
    pub anchors: Vec<usize>,
    /// K×V topic-word estimate; rows sum to one.
    pub phi: Array2<f64>,
}

/// Diagonal-corrected, normalized word co-occurrence matrix of `dtm`.
pub fn cooccurrence(dtm: &DocTermMatrix) -> Array2<f64> {
    let v = dtm.n_terms();
    let mut q = Array2::<f64>::zeros((v, v));
    let mut used = 0usize;
    for row in dtm.rows() {
        let n = row.total() as f64;
        if n < 2.0 {
            continue;
        }
        used += 1;
        let norm = 1.0 / (n * (n - 1.0));
        let entries: Vec<(usize, f64)> = row.iter().map(|(t, c)| (t, c as f64)).collect();
        for &(i, ci) in &entries {
            for &(j, cj) in &entries {
                let pair = if i == j { ci * (ci - 1.0) } else { ci * cj };
                q[[i, j]] += pair * norm;
            }
        }
    }
    if used > 0 {
        q /= used as f64;
    }
    q
}

/// Anchor-word estimate of φ from a document-term matrix.
///
/// `K = 1` returns the corpus term-frequency distribution directly.
pub fn spectral_init(dtm: &DocTermMatrix, k: usize) -> Result<AnchorRecovery, InferenceError> {
    if dtm.total_tokens() == 0 {
        return Err(InferenceError::EmptyCorpus);
    }
    if k == 0 || k > dtm.n_terms() {
        return Err(InferenceError::InvalidHyperparams(format!("K = {k} must be in 1..={}", dtm.n_terms())));
    }
    if k == 1 {
        let totals = dtm.term_totals();
        let n = dtm.total_tokens() as f64;
        let phi = Array2::from_shape_fn((1, totals.len()), |(_, v)| totals[v] as f64 / n);
        let anchor = super::rank_desc(phi.row(0).iter().copied())[0];
        return Ok(AnchorRecovery { anchors: vec![anchor], phi });
    }
    recover_from_cooccurrence(&cooccurrence(dtm), k)
}

/// Steps 2-5 on an explicit co-occurrence matrix (entries ≥ 0, total mass 1).
pub fn recover_from_cooccurrence(q: &Array2<f64>, k: usize) -> Result<AnchorRecovery, InferenceError> {
    let v = q.nrows();
    assert_eq!(q.ncols(), v, "co-occurrence matrix must be square");
    if k == 0 || k > v {
        return Err(InferenceError::InvalidHyperparams(format!("K = {k} must be in 1..={v}")));
    }

    let marginals: Vec<f64> = q.rows().into_iter().map(|r| r.sum()).collect();
    let mut qbar = q.clone();
    for (mut row, &p) in qbar.rows_mut().into_iter().zip(&marginals) {
        if p > 0.0 {
            row /= p;
        }
    }
    let candidates: Vec<usize> = (0..v).filter(|&w| marginals[w] > 0.0).collect();

    let anchors = select_anchors(&qbar, &candidates, k)?;

    // Gram matrix of anchor rows.
    let mut gram = vec![0.0; k * k];
    for a in 0..k {
        for b in a..k {
            let g = qbar.row(anchors[a]).dot(&qbar.row(anchors[b]));
            gram[a * k + b] = g;
            gram[b * k + a] = g;
        }
    }

    // A[w, k] = p(topic k | w) p(w), i.e. the joint p(w, k).
    let mut joint = Array2::<f64>::zeros((k, v));
    for &w in &candidates {
        let target = qbar.row(w);
        let h: Vec<f64> = anchors.iter().map(|&a| qbar.row(a).dot(&target)).collect();
        let weights = if let Some(pos) = anchors.iter().position(|&a| a == w) {
            let mut e = vec![0.0; k];
            e[pos] = 1.0;
            e
        } else {
            simplex_least_squares(&gram, &h)
        };
        for (t, c) in weights.into_iter().enumerate() {
            joint[[t, w]] = c * marginals[w];
        }
    }
    for mut row in joint.rows_mut() {
        let s = row.sum();
        row /= s;
    }
    Ok(AnchorRecovery { anchors, phi: joint })
}

fn select_anchors(qbar: &Array2<f64>, candidates: &[usize], k: usize) -> Result<Vec<usize>, InferenceError> {
    let v = qbar.ncols();
    let argmax = |norms: &[(usize, f64)]| -> (usize, f64) {
        norms.iter().copied().fold((usize::MAX, f64::NEG_INFINITY), |best, cur| if cur.1 > best.1 { cur } else { best })
    };

    let norms: Vec<(usize, f64)> = candidates.iter().map(|&w| (w, qbar.row(w).dot(&qbar.row(w)))).collect();
    if norms.is_empty() {
        return Err(InferenceError::RankDeficient { k, found: 0 });
    }
    let (first, first_norm) = argmax(&norms);
    let mut anchors = vec![first];
    if k == 1 {
        return Ok(anchors);
    }

    // Residuals of every candidate row relative to the first anchor.
    let origin = qbar.row(first).to_owned();
    let mut residual: Vec<Vec<f64>> = candidates
        .iter()
        .map(|&w| qbar.row(w).iter().zip(origin.iter()).map(|(a, b)| a - b).collect())
        .collect();
    let tol = 1e-24 * first_norm.max(f64::MIN_POSITIVE);

    for _ in 1..k {
        let norms: Vec<(usize, f64)> = residual.iter().enumerate().map(|(i, r)| (i, r.iter().map(|x| x * x).sum())).collect();
        let (best, norm2) = argmax(&norms);
        if norm2.is_nan() || norm2 <= tol || anchors.contains(&candidates[best]) {
            return Err(InferenceError::RankDeficient { k, found: anchors.len() });
        }
        anchors.push(candidates[best]);
        let inv = 1.0 / norm2.sqrt();
        let basis: Vec<f64> = residual[best].iter().map(|x| x * inv).collect();
        for r in residual.iter_mut() {
            let proj: f64 = r.iter().zip(&basis).map(|(a, b)| a * b).sum();
            for j in 0..v {
                r[j] -= proj * basis[j];
            }
        }
    }
    Ok(anchors)
}

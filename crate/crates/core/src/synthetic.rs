//! Corpora drawn from a known LDA model, and matching of estimated topics
//! back to the generating ones.

use ndarray::Array2;

use crate::corpus::{build_dtm, DocTermMatrix, ProcessedDocument};
use crate::inference::{Hyperparams, TopicModel};
use crate::rng::SeededRng;

#[derive(Debug, Clone, PartialEq)]
pub struct LdaSpec {
    pub k: usize,
    pub v: usize,
    pub d: usize,
    pub tokens_per_doc: usize,
    /// Symmetric Dirichlet parameter for θ rows.
    pub alpha: f64,
    /// Symmetric Dirichlet parameter for φ rows.
    pub eta: f64,
    pub seed: u64,
}

#[derive(Debug, Clone)]
pub struct SyntheticCorpus {
    pub phi: Array2<f64>,
    pub theta: Array2<f64>,
    pub docs: Vec<ProcessedDocument>,
}

/// Term `i` is spelled `w0007` etc., so lexicographic order equals index order.
pub fn term_name(i: usize) -> String {
    format!("w{i:04}")
}

impl LdaSpec {
    /// φ, θ and documents from stream 0 (φ), 1 (θ) and 2 (tokens) of `seed`.
    pub fn generate(&self) -> SyntheticCorpus {
        let mut rng = SeededRng::stream(self.seed, 0);
        let phi_rows: Vec<f64> = (0..self.k).flat_map(|_| rng.dirichlet(&vec![self.eta; self.v])).collect();
        let phi = Array2::from_shape_vec((self.k, self.v), phi_rows).expect("shape");

        let mut rng = SeededRng::stream(self.seed, 1);
        let theta_rows: Vec<f64> = (0..self.d).flat_map(|_| rng.dirichlet(&vec![self.alpha; self.k])).collect();
        let theta = Array2::from_shape_vec((self.d, self.k), theta_rows).expect("shape");

        let phi_rows: Vec<Vec<f64>> = phi.rows().into_iter().map(|r| r.to_vec()).collect();
        let mut rng = SeededRng::stream(self.seed, 2);
        let docs = (0..self.d)
            .map(|d| {
                let th = theta.row(d).to_vec();
                let tokens = (0..self.tokens_per_doc)
                    .map(|_| {
                        let z = rng.categorical(&th);
                        term_name(rng.categorical(&phi_rows[z]))
                    })
                    .collect();
                ProcessedDocument { id: format!("doc{d:05}"), tokens }
            })
            .collect();
        SyntheticCorpus { phi, theta, docs }
    }
}

impl SyntheticCorpus {
    /// The generating φ and θ as a model over all `v` terms.
    pub fn true_model(&self) -> TopicModel {
        let (k, v) = self.phi.dim();
        TopicModel::from_parts(
            self.phi.clone(),
            self.theta.clone(),
            (0..v).map(term_name).collect(),
            self.docs.iter().map(|d| d.id.clone()).collect(),
            Hyperparams::new(k),
            vec![],
        )
        .expect("Dirichlet draws are distributions")
    }

    /// Document-term matrix over the terms that occur; also returns the
    /// generating index of each matrix column.
    pub fn dtm(&self) -> (DocTermMatrix, Vec<usize>) {
        let (dtm, _) = build_dtm(&self.docs).expect("synthetic documents are non-empty");
        let columns = dtm.vocab().terms().iter().map(|t| t[1..].parse().expect("synthetic term name")).collect();
        (dtm, columns)
    }

    /// True φ restricted to `columns` and renormalized, for comparison with
    /// a model fitted on [`SyntheticCorpus::dtm`].
    pub fn phi_on(&self, columns: &[usize]) -> Array2<f64> {
        let mut out = Array2::from_shape_fn((self.phi.nrows(), columns.len()), |(k, j)| self.phi[[k, columns[j]]]);
        for mut row in out.rows_mut() {
            let s = row.sum();
            if s > 0.0 {
                row /= s;
            }
        }
        out
    }
}

pub fn total_variation(a: &[f64], b: &[f64]) -> f64 {
    0.5 * a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>()
}

/// Greedy one-to-one matching of estimated rows to true rows by smallest
/// total-variation distance. Returns `(estimate_row, true_row, distance)`
/// in the order pairs were taken.
pub fn greedy_match(estimate: &Array2<f64>, truth: &Array2<f64>) -> Vec<(usize, usize, f64)> {
    assert_eq!(estimate.ncols(), truth.ncols());
    let mut pairs: Vec<(usize, usize, f64)> = Vec::new();
    for i in 0..estimate.nrows() {
        for j in 0..truth.nrows() {
            let d = total_variation(estimate.row(i).as_slice().expect("standard layout"), truth.row(j).as_slice().expect("standard layout"));
            pairs.push((i, j, d));
        }
    }
    pairs.sort_by(|a, b| a.2.total_cmp(&b.2).then(a.0.cmp(&b.0)).then(a.1.cmp(&b.1)));
    let mut used_e = vec![false; estimate.nrows()];
    let mut used_t = vec![false; truth.nrows()];
    let mut out = Vec::new();
    for (i, j, d) in pairs {
        if !used_e[i] && !used_t[j] {
            used_e[i] = true;
            used_t[j] = true;
            out.push((i, j, d));
        }
    }
    out
}

/// Mean total-variation distance over a greedy matching.
pub fn matched_tv(estimate: &Array2<f64>, truth: &Array2<f64>) -> f64 {
    let m = greedy_match(estimate, truth);
    m.iter().map(|p| p.2).sum::<f64>() / m.len() as f64
}

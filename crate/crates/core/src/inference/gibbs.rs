use ndarray::{Array1, Array2};
use statrs::function::gamma::ln_gamma;

use super::{spectral_init, Hyperparams, Init, InferenceError, TopicModel};
use crate::corpus::{DocTermMatrix, SparseCounts};
use crate::rng::SeededRng;

struct Sampler<'a> {
    k: usize,
    v: usize,
    alpha: f64,
    eta: f64,
    docs: Vec<Vec<u32>>,
    z: Vec<Vec<u16>>,
    doc_topic: Array2<u32>,
    topic_word: Array2<u32>,
    topic_total: Vec<u32>,
    rng: &'a mut SeededRng,
}

impl Sampler<'_> {
    fn sweep(&mut self) {
        let k = self.k;
        let v_eta = self.v as f64 * self.eta;
        let mut weights = vec![0.0; k];
        for d in 0..self.docs.len() {
            for i in 0..self.docs[d].len() {
                let w = self.docs[d][i] as usize;
                let old = self.z[d][i] as usize;
                self.doc_topic[[d, old]] -= 1;
                self.topic_word[[old, w]] -= 1;
                self.topic_total[old] -= 1;

                for (t, weight) in weights.iter_mut().enumerate() {
                    *weight = (self.doc_topic[[d, t]] as f64 + self.alpha) * (self.topic_word[[t, w]] as f64 + self.eta)
                        / (self.topic_total[t] as f64 + v_eta);
                }
                let new = self.rng.categorical(&weights);

                self.z[d][i] = new as u16;
                self.doc_topic[[d, new]] += 1;
                self.topic_word[[new, w]] += 1;
                self.topic_total[new] += 1;
            }
        }
    }

    /// log p(w, z) with φ and θ integrated out.
    fn log_likelihood(&self) -> f64 {
        let (k, v) = (self.k as f64, self.v as f64);
        let lg_eta = ln_gamma(self.eta);
        let lg_alpha = ln_gamma(self.alpha);
        let mut ll = 0.0;
        for t in 0..self.k {
            ll += ln_gamma(v * self.eta) - ln_gamma(self.topic_total[t] as f64 + v * self.eta);
            for &n in self.topic_word.row(t) {
                if n > 0 {
                    ll += ln_gamma(n as f64 + self.eta) - lg_eta;
                }
            }
        }
        for (d, words) in self.docs.iter().enumerate() {
            ll += ln_gamma(k * self.alpha) - ln_gamma(words.len() as f64 + k * self.alpha);
            for &n in self.doc_topic.row(d) {
                if n > 0 {
                    ll += ln_gamma(n as f64 + self.alpha) - lg_alpha;
                }
            }
        }
        ll
    }
}

fn normalize_rows(m: &mut Array2<f64>) {
    for mut row in m.rows_mut() {
        let s = row.sum();
        row /= s;
    }
}

/// Collapsed Gibbs sampling for LDA with symmetric priors.
///
/// Tokens are visited document by document in term order. The estimates are
/// `φ_kv ∝ n̄_kv + η` and `θ_dk ∝ n̄_dk + α`, where `n̄` averages the count
/// matrices after each sweep past `burn_in`.
pub fn fit(dtm: &DocTermMatrix, hyper: &Hyperparams) -> Result<TopicModel, InferenceError> {
    hyper.validate()?;
    if dtm.total_tokens() == 0 || dtm.n_docs() == 0 {
        return Err(InferenceError::EmptyCorpus);
    }
    if hyper.k > u16::MAX as usize {
        return Err(InferenceError::InvalidHyperparams(format!("K = {} is too large", hyper.k)));
    }
    let (k, v, n_docs) = (hyper.k, dtm.n_terms(), dtm.n_docs());
    let docs: Vec<Vec<u32>> = dtm.rows().iter().map(|r| r.tokens().into_iter().map(|t| t as u32).collect()).collect();

    let init_phi = match hyper.init {
        Init::Spectral => Some(spectral_init(dtm, k)?.phi),
        Init::Random => None,
    };

    let mut rng = SeededRng::new(hyper.seed);
    let mut doc_topic = Array2::<u32>::zeros((n_docs, k));
    let mut topic_word = Array2::<u32>::zeros((k, v));
    let mut topic_total = vec![0u32; k];
    let mut z = Vec::with_capacity(n_docs);
    let mut column = vec![0.0; k];
    for (d, words) in docs.iter().enumerate() {
        let mut zd = Vec::with_capacity(words.len());
        for &w in words {
            let t = match &init_phi {
                Some(phi) => {
                    column.iter_mut().enumerate().for_each(|(t, c)| *c = phi[[t, w as usize]]);
                    rng.categorical(&column)
                }
                None => rng.below(k),
            };
            zd.push(t as u16);
            doc_topic[[d, t]] += 1;
            topic_word[[t, w as usize]] += 1;
            topic_total[t] += 1;
        }
        z.push(zd);
    }

    let mut sampler = Sampler {
        k,
        v,
        alpha: hyper.alpha,
        eta: hyper.eta,
        docs,
        z,
        doc_topic,
        topic_word,
        topic_total,
        rng: &mut rng,
    };

    let mut trace = Vec::with_capacity(hyper.max_iterations);
    let mut sum_topic_word = Array2::<f64>::zeros((k, v));
    let mut sum_doc_topic = Array2::<f64>::zeros((n_docs, k));
    let mut samples = 0usize;
    for sweep in 1..=hyper.max_iterations {
        sampler.sweep();
        trace.push(sampler.log_likelihood());
        if sweep > hyper.burn_in {
            sum_topic_word.zip_mut_with(&sampler.topic_word, |s, &n| *s += n as f64);
            sum_doc_topic.zip_mut_with(&sampler.doc_topic, |s, &n| *s += n as f64);
            samples += 1;
        }
    }

    let inv = 1.0 / samples as f64;
    let mut phi = sum_topic_word.mapv(|s| s * inv + hyper.eta);
    let mut theta = sum_doc_topic.mapv(|s| s * inv + hyper.alpha);
    normalize_rows(&mut phi);
    normalize_rows(&mut theta);

    TopicModel::from_parts(phi, theta, dtm.vocab().terms().to_vec(), dtm.doc_ids().to_vec(), hyper.clone(), trace)
}

/// θ for an unseen document with φ held fixed.
///
/// Runs `iterations` sweeps of `p(z = k) ∝ (n_dk + α) φ_kw` seeded by `seed`,
/// averages the topic counts over the second half of the sweeps, and smooths
/// with the model's α. With zero iterations the initial assignment is used.
pub fn infer_theta(model: &TopicModel, doc: &SparseCounts, iterations: usize, seed: u64) -> Result<Array1<f64>, InferenceError> {
    if doc.total() == 0 {
        return Err(InferenceError::EmptyDocument);
    }
    if let Some((t, _)) = doc.iter().find(|&(t, _)| t >= model.n_terms()) {
        return Err(InferenceError::TermOutOfRange(t));
    }
    let k = model.k();
    let alpha = model.hyper().alpha;
    let phi = model.phi();
    let words = doc.tokens();
    let mut rng = SeededRng::new(seed);

    let mut counts = vec![0u32; k];
    let mut weights = vec![0.0; k];
    let mut z: Vec<usize> = words
        .iter()
        .map(|&w| {
            weights.iter_mut().enumerate().for_each(|(t, x)| *x = phi[[t, w]]);
            let t = rng.categorical(&weights);
            counts[t] += 1;
            t
        })
        .collect();

    let mut acc = vec![0.0; k];
    let mut samples = 0usize;
    let burn = iterations / 2;
    for sweep in 1..=iterations {
        for (i, &w) in words.iter().enumerate() {
            counts[z[i]] -= 1;
            for (t, x) in weights.iter_mut().enumerate() {
                *x = (counts[t] as f64 + alpha) * phi[[t, w]];
            }
            z[i] = rng.categorical(&weights);
            counts[z[i]] += 1;
        }
        if sweep > burn {
            acc.iter_mut().zip(&counts).for_each(|(a, &c)| *a += c as f64);
            samples += 1;
        }
    }
    if samples == 0 {
        acc.iter_mut().zip(&counts).for_each(|(a, &c)| *a = c as f64);
        samples = 1;
    }

    let mut theta = Array1::from_iter(acc.iter().map(|&a| a / samples as f64 + alpha));
    let s = theta.sum();
    theta /= s;
    Ok(theta)
}

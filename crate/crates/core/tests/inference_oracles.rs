use ndarray::{array, Array2};
use topiclab::corpus::{build_dtm, ProcessedDocument};
use topiclab::inference::{recover_from_cooccurrence, top_documents, top_words};
use topiclab::synthetic::greedy_match;
use topiclab::{fit, Hyperparams, Init, TopicModel};

/// Planted separable model: word `k` (k < 3) occurs only in topic `k`; words
/// 3..6 are shared.
fn planted() -> (Array2<f64>, Array2<f64>) {
    let phi = array![
        [0.30, 0.00, 0.00, 0.40, 0.20, 0.10],
        [0.00, 0.25, 0.00, 0.15, 0.25, 0.35],
        [0.00, 0.00, 0.40, 0.10, 0.10, 0.40],
    ];
    let theta = array![[0.7, 0.2, 0.1], [0.1, 0.6, 0.3], [0.2, 0.2, 0.6], [0.5, 0.0, 0.5], [0.3, 0.4, 0.3]];
    (phi, theta)
}

/// Expected diagonal-corrected co-occurrence, `(1/D) Σ_d q_d q_dᵀ` with `q_d = φᵀ θ_d`.
fn exact_cooccurrence(phi: &Array2<f64>, theta: &Array2<f64>) -> Array2<f64> {
    let q = theta.dot(phi);
    q.t().dot(&q) / theta.nrows() as f64
}

#[test]
fn spectral_recovers_planted_separable_model() {
    let (phi, theta) = planted();
    let q = exact_cooccurrence(&phi, &theta);
    assert!((q.sum() - 1.0).abs() < 1e-14);
    let r = recover_from_cooccurrence(&q, 3).unwrap();
    let mut anchors = r.anchors.clone();
    anchors.sort();
    assert_eq!(anchors, [0, 1, 2]);
    let mut max_err: f64 = 0.0;
    for (t, &a) in r.anchors.iter().enumerate() {
        for v in 0..6 {
            max_err = max_err.max((r.phi[[t, v]] - phi[[a, v]]).abs());
        }
    }
    assert!(max_err <= 1e-6, "max abs error {max_err:e}");
}

fn two_block_docs() -> Vec<ProcessedDocument> {
    (0..40)
        .map(|d| {
            let block = if d < 20 { 'a' } else { 'b' };
            let tokens = (0..50).map(|i| format!("{block}{}", (i * 7 + d) % 10)).collect();
            ProcessedDocument { id: format!("doc{d:02}"), tokens }
        })
        .collect()
}

fn block_mass(model: &TopicModel, topic: usize, prefix: char) -> f64 {
    model.terms().iter().enumerate().filter(|(_, t)| t.starts_with(prefix)).map(|(v, _)| model.phi()[[topic, v]]).sum()
}

#[test]
fn two_block_corpus_separates() {
    let (dtm, _) = build_dtm(&two_block_docs()).unwrap();
    for init in [Init::Spectral, Init::Random] {
        let mut h = Hyperparams::new(2);
        h.init = init;
        h.seed = 11;
        let m = fit(&dtm, &h).unwrap();
        // Indicator rows for the blocks: matched topics must concentrate on them.
        let truth = Array2::from_shape_fn((2, dtm.n_terms()), |(b, v)| {
            let prefix = if b == 0 { 'a' } else { 'b' };
            if dtm.vocab().term(v).starts_with(prefix) {
                0.1
            } else {
                0.0
            }
        });
        for (topic, block, _) in greedy_match(m.phi(), &truth) {
            let mass = block_mass(&m, topic, if block == 0 { 'a' } else { 'b' });
            assert!(mass >= 0.95, "{init:?}: topic {topic} has {mass} on its block");
        }

        let ll = m.log_likelihood();
        assert_eq!(ll.len(), h.max_iterations);
        assert!(ll.iter().all(|x| x.is_finite()));
        let first: f64 = ll[..100].iter().sum::<f64>() / 100.0;
        let last: f64 = ll[ll.len() - 100..].iter().sum::<f64>() / 100.0;
        assert!(last >= first, "{init:?}: {first} -> {last}");
    }
}

#[test]
fn fits_are_byte_identical_under_a_fixed_seed() {
    let (dtm, _) = build_dtm(&two_block_docs()).unwrap();
    let mut h = Hyperparams::new(3);
    h.max_iterations = 120;
    h.burn_in = 20;
    h.seed = 5;
    let bytes = |m: &TopicModel| {
        let mut b = Vec::new();
        m.write_json(&mut b).unwrap();
        b
    };
    let a = fit(&dtm, &h).unwrap();
    assert_eq!(bytes(&a), bytes(&fit(&dtm, &h).unwrap()));
    h.seed = 6;
    assert_ne!(bytes(&a), bytes(&fit(&dtm, &h).unwrap()));
}

#[test]
fn topic_relabelling_permutes_rankings() {
    let (dtm, _) = build_dtm(&two_block_docs()).unwrap();
    let mut h = Hyperparams::new(4);
    h.max_iterations = 100;
    h.burn_in = 50;
    let m = fit(&dtm, &h).unwrap();
    let perm = [2, 0, 3, 1];
    let p = m.permute_topics(&perm);
    for (new, &old) in perm.iter().enumerate() {
        assert_eq!(top_words(&p, new, 10).unwrap(), top_words(&m, old, 10).unwrap());
        assert_eq!(top_documents(&p, new, 10).unwrap(), top_documents(&m, old, 10).unwrap());
    }
}

#[test]
fn estimates_are_distributions() {
    let (dtm, _) = build_dtm(&two_block_docs()).unwrap();
    for k in [1, 2, 7] {
        let mut h = Hyperparams::new(k);
        h.max_iterations = 60;
        h.burn_in = 10;
        h.init = Init::Random;
        let m = fit(&dtm, &h).unwrap();
        for row in m.phi().rows().into_iter().chain(m.theta().rows()) {
            assert!((row.sum() - 1.0).abs() < 1e-9);
            assert!(row.iter().all(|&x| x >= 0.0));
        }
    }
}

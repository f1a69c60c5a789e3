//! Fixtures shared by the criterion benches in `benches/`.

use topiclab::synthetic::LdaSpec;
use topiclab::{DocTermMatrix, Hyperparams, TopicModel};

/// A mid-sized synthetic corpus: K = 10, V = 500, 300 documents of 80 tokens.
pub fn corpus() -> DocTermMatrix {
    LdaSpec { k: 10, v: 500, d: 300, tokens_per_doc: 80, alpha: 0.1, eta: 0.05, seed: 42 }.generate().dtm().0
}

/// Gibbs settings with a short chain, so one iteration of a bench stays cheap.
pub fn short_chain(k: usize, sweeps: usize) -> Hyperparams {
    let mut h = Hyperparams::new(k);
    h.max_iterations = sweeps;
    h.burn_in = sweeps / 5;
    h.seed = 7;
    h
}

pub fn fitted(dtm: &DocTermMatrix) -> TopicModel {
    topiclab::fit(dtm, &short_chain(10, 100)).expect("bench corpus fits")
}

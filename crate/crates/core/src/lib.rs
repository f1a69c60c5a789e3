//! Topic-model pipeline in three stages.
//!
//! * [`corpus`]: deduplicate, normalize and tokenize raw documents into a
//!   document-term matrix.
//! * [`inference`] and [`diagnostics`]: fit seeded LDA models (collapsed Gibbs
//!   with anchor-word initialization) and score them with held-out likelihood,
//!   residual dispersion, semantic coherence and exclusivity across a grid of K.
//! * [`evaluation`]: word/topic intrusion tasks for human coders, their scoring,
//!   and labelling packets.
//!
//! Every stochastic step draws from [`rng::SeededRng`], so a fixed seed gives
//! byte-identical artifacts.

pub mod corpus;
pub mod diagnostics;
pub mod digest;
pub mod evaluation;
pub mod inference;
pub mod rng;
pub mod synthetic;

pub use corpus::{
    build_dtm, corpus_stats, dedupe, preprocess, CorpusError, CorpusStats, DocTermMatrix,
    PreprocessConfig, Preprocessor, ProcessedDocument, RawDocument, SparseCounts, Vocabulary,
};
pub use diagnostics::{
    exclusivity, heldout_log_likelihood, residual_dispersion, search_k, semantic_coherence,
    DiagnosticsError, DiagnosticsRow, HeldoutSplit, TopicScores,
};
pub use evaluation::{
    gen_topic_intrusion, gen_word_intrusion, label_export, model_precision, topic_log_odds,
    Choice, CoderResponse, EvaluationError, SessionMetrics, TopicIntrusionTask,
    WordIntrusionTask,
};
pub use inference::{
    fit, infer_theta, mean_topic_proportions, spectral_init, top_documents, top_words,
    Hyperparams, InferenceError, Init, TopicModel,
};

use serde::{Deserialize, Serialize};

use super::{EvaluationError, TopicIntrusionTask, WordIntrusionTask};
use crate::corpus::RawDocument;
use crate::digest::sha256_hex;
use crate::inference::{rank_desc, top_words, TopicModel};
use crate::rng::SeededRng;

/// Top words shown per word-intrusion task (plus one intruder).
pub const WORD_TASK_TOP_WORDS: usize = 5;
/// An intruder must rank at or below this 0-based position in its target topic.
pub const INTRUDER_MIN_RANK: usize = 50;
/// ...and within this many top words of some other topic.
pub const DONOR_TOP_RANK: usize = 10;
/// Words used to render a topic option.
pub const TOPIC_OPTION_WORDS: usize = 8;
const TRUE_TOPICS_PER_CASE: usize = 3;
const MIN_VOCAB: usize = 20;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TopicOption {
    pub topic_id: usize,
    pub words: Vec<String>,
}

/// Short content address of a model, used to tag the tasks generated from it.
pub fn model_id(model: &TopicModel) -> String {
    let mut buf = Vec::new();
    model.write_json(&mut buf).expect("in-memory write");
    format!("m{}", &sha256_hex(&buf)[..12])
}

/// For each topic: reciprocal rank tables `rank[topic][term]`.
fn rank_tables(model: &TopicModel) -> Vec<Vec<usize>> {
    (0..model.k())
        .map(|t| {
            let order = rank_desc(model.phi().row(t).iter().copied());
            let mut rank = vec![0; order.len()];
            for (r, &v) in order.iter().enumerate() {
                rank[v] = r;
            }
            rank
        })
        .collect()
}

/// One task per topic. Options are the topic's five most probable words and
/// one intruder drawn uniformly from terms ranked at position ≥ 50 in the
/// topic and in the top 10 of another topic. Topic `k` draws from stream `k`
/// of `seed`.
pub fn gen_word_intrusion(model: &TopicModel, seed: u64) -> Result<Vec<WordIntrusionTask>, EvaluationError> {
    let (k, v) = (model.k(), model.n_terms());
    if k < 2 {
        return Err(EvaluationError::TooFewTopics { need: 2, have: k });
    }
    if v < MIN_VOCAB {
        return Err(EvaluationError::VocabularyTooSmall { need: MIN_VOCAB, have: v });
    }
    let ranks = rank_tables(model);
    let mid = model_id(model);
    (0..k)
        .map(|topic| {
            let candidates: Vec<usize> = (0..v)
                .filter(|&w| ranks[topic][w] >= INTRUDER_MIN_RANK)
                .filter(|&w| (0..k).any(|other| other != topic && ranks[other][w] < DONOR_TOP_RANK))
                .collect();
            if candidates.is_empty() {
                return Err(EvaluationError::NoValidIntruder(topic));
            }
            let mut rng = SeededRng::stream(seed, topic as u64);
            let intruder = model.terms()[candidates[rng.below(candidates.len())]].clone();
            let mut options = top_words(model, topic, WORD_TASK_TOP_WORDS)?;
            options.push(intruder.clone());
            rng.shuffle(&mut options);
            let intruder_position = options.iter().position(|o| *o == intruder).expect("intruder is an option");
            Ok(WordIntrusionTask {
                task_id: format!("{mid}-w{topic:03}"),
                model_id: mid.clone(),
                topic_id: topic,
                options,
                intruder_position,
                gen_seed: seed,
            })
        })
        .collect()
}

/// `n_cases` tasks over distinct documents sampled on stream 0 of `seed`.
/// Case `i` (stream `i + 1`) offers the document's three highest-θ topics and
/// one intruder drawn uniformly from the lower half of its θ ranking
/// (positions ≥ ⌈K/2⌉, never among the top three).
pub fn gen_topic_intrusion(
    model: &TopicModel,
    raw_docs: &[RawDocument],
    n_cases: usize,
    seed: u64,
) -> Result<Vec<TopicIntrusionTask>, EvaluationError> {
    if n_cases == 0 {
        return Ok(Vec::new());
    }
    let (k, d) = (model.k(), model.n_docs());
    if k < 4 {
        return Err(EvaluationError::TooFewTopics { need: 4, have: k });
    }
    if d < n_cases {
        return Err(EvaluationError::TooFewDocs { wanted: n_cases, have: d });
    }
    let mid = model_id(model);
    let rendered: Vec<Vec<String>> =
        (0..k).map(|t| top_words(model, t, TOPIC_OPTION_WORDS)).collect::<Result<_, _>>()?;

    let mut order: Vec<usize> = (0..d).collect();
    SeededRng::stream(seed, 0).shuffle(&mut order);

    order[..n_cases]
        .iter()
        .enumerate()
        .map(|(case, &doc)| {
            let doc_id = &model.doc_ids()[doc];
            let snippet = raw_docs
                .iter()
                .find(|r| &r.id == doc_id)
                .map(|r| r.text.clone())
                .ok_or_else(|| EvaluationError::UnknownDocument(doc_id.clone()))?;
            let ranking = rank_desc(model.theta().row(doc).iter().copied());
            let pool = &ranking[TRUE_TOPICS_PER_CASE.max(k.div_ceil(2))..];
            let mut rng = SeededRng::stream(seed, case as u64 + 1);
            let intruder = pool[rng.below(pool.len())];
            let mut topics: Vec<usize> = ranking[..TRUE_TOPICS_PER_CASE].to_vec();
            topics.push(intruder);
            rng.shuffle(&mut topics);
            let intruder_position = topics.iter().position(|&t| t == intruder).expect("intruder is an option");
            Ok(TopicIntrusionTask {
                task_id: format!("{mid}-t{case:03}"),
                model_id: mid.clone(),
                doc_id: doc_id.clone(),
                snippet,
                topic_options: topics.iter().map(|&t| TopicOption { topic_id: t, words: rendered[t].clone() }).collect(),
                intruder_position,
                gen_seed: seed,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Hyperparams;
    use ndarray::Array2;

    /// K topics over V terms; topic t puts decreasing mass on terms
    /// starting at offset 7t, so top words differ between topics.
    fn banded_model(k: usize, v: usize, d: usize) -> TopicModel {
        let mut rng = SeededRng::new(1);
        let phi = Array2::from_shape_fn((k, v), |(t, w)| {
            let pos = (w + v - 7 * t % v) % v;
            1.0 / (1.0 + pos as f64).powi(2)
        });
        let phi = &phi / &phi.sum_axis(ndarray::Axis(1)).insert_axis(ndarray::Axis(1));
        let theta_rows: Vec<f64> = (0..d).flat_map(|_| rng.dirichlet(&vec![0.3; k])).collect();
        let theta = Array2::from_shape_vec((d, k), theta_rows).unwrap();
        TopicModel::from_parts(
            phi,
            theta,
            (0..v).map(|i| format!("t{i:03}")).collect(),
            (0..d).map(|i| format!("doc{i}")).collect(),
            Hyperparams::new(k),
            vec![],
        )
        .unwrap()
    }

    fn raw(model: &TopicModel) -> Vec<RawDocument> {
        model.doc_ids().iter().map(|id| RawDocument::new(id.clone(), format!("text of {id}"))).collect()
    }

    #[test]
    fn one_word_task_per_topic() {
        let m = banded_model(8, 120, 5);
        let tasks = gen_word_intrusion(&m, 3).unwrap();
        assert_eq!(tasks.len(), 8);
        let ranks = rank_tables(&m);
        for (t, task) in tasks.iter().enumerate() {
            assert_eq!(task.topic_id, t);
            assert_eq!(task.options.len(), 6);
            let mut sorted = task.options.clone();
            sorted.sort();
            sorted.dedup();
            assert_eq!(sorted.len(), 6);
            let top = top_words(&m, t, 5).unwrap();
            for (i, o) in task.options.iter().enumerate() {
                assert_eq!(top.contains(o), i != task.intruder_position);
            }
            let w = m.terms().iter().position(|x| *x == task.options[task.intruder_position]).unwrap();
            assert!(ranks[t][w] >= INTRUDER_MIN_RANK);
        }
        assert_eq!(gen_word_intrusion(&m, 3).unwrap(), tasks);
    }

    #[test]
    fn word_task_preconditions() {
        assert!(matches!(gen_word_intrusion(&banded_model(1, 60, 2), 0), Err(EvaluationError::TooFewTopics { .. })));
        assert!(matches!(gen_word_intrusion(&banded_model(3, 10, 2), 0), Err(EvaluationError::VocabularyTooSmall { .. })));
        // 30 terms: nothing ranks at position 50 or below
        assert!(matches!(gen_word_intrusion(&banded_model(3, 30, 2), 0), Err(EvaluationError::NoValidIntruder(0))));
    }

    #[test]
    fn topic_tasks_cardinality_and_pool() {
        let m = banded_model(9, 60, 30);
        let tasks = gen_topic_intrusion(&m, &raw(&m), 10, 5).unwrap();
        assert_eq!(tasks.len(), 10);
        let mut docs: Vec<&String> = tasks.iter().map(|t| &t.doc_id).collect();
        docs.sort();
        docs.dedup();
        assert_eq!(docs.len(), 10);
        for task in &tasks {
            assert_eq!(task.topic_options.len(), 4);
            assert!(task.topic_options.iter().all(|o| o.words.len() == 8));
            let d = m.doc_index(&task.doc_id).unwrap();
            let ranking = rank_desc(m.theta().row(d).iter().copied());
            let rank_of = |t: usize| ranking.iter().position(|&x| x == t).unwrap();
            for (i, o) in task.topic_options.iter().enumerate() {
                if i == task.intruder_position {
                    assert!(rank_of(o.topic_id) as f64 > (9.0 - 1.0) / 2.0);
                } else {
                    assert!(rank_of(o.topic_id) < 3);
                }
            }
            assert_eq!(task.snippet, format!("text of {}", task.doc_id));
        }
    }

    #[test]
    fn topic_task_preconditions() {
        let m = banded_model(4, 30, 3);
        assert!(gen_topic_intrusion(&m, &raw(&m), 0, 1).unwrap().is_empty());
        assert!(matches!(gen_topic_intrusion(&m, &raw(&m), 4, 1), Err(EvaluationError::TooFewDocs { .. })));
        let small = banded_model(3, 30, 5);
        assert!(matches!(gen_topic_intrusion(&small, &raw(&small), 2, 1), Err(EvaluationError::TooFewTopics { .. })));
        // K = 4: the only admissible intruder is the lowest-ranked topic
        let tasks = gen_topic_intrusion(&m, &raw(&m), 3, 1).unwrap();
        for t in tasks {
            let d = m.doc_index(&t.doc_id).unwrap();
            let ranking = rank_desc(m.theta().row(d).iter().copied());
            assert_eq!(t.topic_options[t.intruder_position].topic_id, ranking[3]);
        }
    }

    #[test]
    fn missing_raw_document_reported() {
        let m = banded_model(4, 30, 3);
        assert!(matches!(gen_topic_intrusion(&m, &[], 1, 1), Err(EvaluationError::UnknownDocument(_))));
    }
}

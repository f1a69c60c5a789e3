use std::collections::HashMap;
use std::io::Write;

use serde::{Deserialize, Serialize};

use super::EvaluationError;
use crate::corpus::RawDocument;
use crate::inference::{mean_topic_proportions, rank_desc, top_document_indices, top_words, TopicModel};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelDocument {
    pub doc_id: String,
    pub theta: f64,
    pub snippet: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelTopic {
    /// 1-based position by mean proportion.
    pub rank: usize,
    pub topic_id: usize,
    pub proportion: f64,
    pub top_words: Vec<String>,
    pub documents: Vec<LabelDocument>,
    /// Filled in by a human.
    #[serde(default)]
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabelPacket {
    pub model_id: String,
    pub topics: Vec<LabelTopic>,
}

/// The `n_topics` largest topics by mean θ, each with its top words and the
/// full text of its highest-θ documents.
pub fn label_export(
    model: &TopicModel,
    raw_docs: &[RawDocument],
    n_topics: usize,
    n_words: usize,
    n_docs: usize,
) -> Result<LabelPacket, EvaluationError> {
    let texts: HashMap<&str, &str> = raw_docs.iter().map(|r| (r.id.as_str(), r.text.as_str())).collect();
    let props = mean_topic_proportions(model);
    let order = rank_desc(props.iter().copied());
    let topics = order
        .into_iter()
        .take(n_topics.min(model.k()))
        .enumerate()
        .map(|(i, t)| {
            let documents = top_document_indices(model, t, n_docs)?
                .into_iter()
                .map(|d| {
                    let id = &model.doc_ids()[d];
                    let snippet = texts.get(id.as_str()).ok_or_else(|| EvaluationError::UnknownDocument(id.clone()))?;
                    Ok(LabelDocument { doc_id: id.clone(), theta: model.theta()[[d, t]], snippet: snippet.to_string() })
                })
                .collect::<Result<Vec<_>, EvaluationError>>()?;
            Ok(LabelTopic {
                rank: i + 1,
                topic_id: t,
                proportion: props[t],
                top_words: top_words(model, t, n_words)?,
                documents,
                label: String::new(),
            })
        })
        .collect::<Result<Vec<_>, EvaluationError>>()?;
    Ok(LabelPacket { model_id: super::model_id(model), topics })
}

/// Plain-text rendering for coders who label offline.
pub fn write_label_table<W: Write>(packet: &LabelPacket, mut w: W) -> std::io::Result<()> {
    writeln!(w, "model {}", packet.model_id)?;
    for t in &packet.topics {
        writeln!(w)?;
        writeln!(w, "#{} topic {} ({:.4})", t.rank, t.topic_id, t.proportion)?;
        writeln!(w, "  words: {}", t.top_words.join(", "))?;
        for d in &t.documents {
            let text: String = d.snippet.split_whitespace().collect::<Vec<_>>().join(" ");
            writeln!(w, "  [{:.3}] {}: {}", d.theta, d.doc_id, text)?;
        }
        writeln!(w, "  label: {}", t.label)?;
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::inference::Hyperparams;
    use ndarray::array;

    fn fixture() -> (TopicModel, Vec<RawDocument>) {
        let model = TopicModel::from_parts(
            array![[0.7, 0.2, 0.1], [0.1, 0.1, 0.8]],
            array![[0.9, 0.1], [0.2, 0.8], [0.6, 0.4]],
            vec!["a".into(), "b".into(), "c".into()],
            vec!["d0".into(), "d1".into(), "d2".into()],
            Hyperparams::new(2),
            vec![],
        )
        .unwrap();
        let raw = ["alpha", "bravo\n charlie", "delta"].iter().enumerate().map(|(i, t)| RawDocument::new(format!("d{i}"), *t)).collect();
        (model, raw)
    }

    #[test]
    fn ordered_by_mean_proportion_and_clamped() {
        let (m, raw) = fixture();
        let p = label_export(&m, &raw, 10, 2, 2).unwrap();
        assert_eq!(p.topics.len(), 2);
        assert_eq!(p.topics[0].topic_id, 0);
        assert!((p.topics[0].proportion - 1.7 / 3.0).abs() < 1e-15);
        assert_eq!(p.topics[0].top_words, ["a", "b"]);
        let docs: Vec<&str> = p.topics[0].documents.iter().map(|d| d.doc_id.as_str()).collect();
        assert_eq!(docs, ["d0", "d2"]);
        assert_eq!(p.topics[1].documents[0].snippet, "bravo\n charlie");
        assert_eq!(p.topics[1].rank, 2);
    }

    #[test]
    fn table_rendering() {
        let (m, raw) = fixture();
        let p = label_export(&m, &raw, 1, 1, 1).unwrap();
        let mut out = Vec::new();
        write_label_table(&p, &mut out).unwrap();
        let s = String::from_utf8(out).unwrap();
        assert!(s.contains("#1 topic 0 (0.5667)"));
        assert!(s.contains("[0.900] d0: alpha"));
    }

    #[test]
    fn missing_text_is_an_error() {
        let (m, _) = fixture();
        assert!(matches!(label_export(&m, &[], 1, 1, 1), Err(EvaluationError::UnknownDocument(_))));
    }
}

use std::collections::HashMap;

use super::{Choice, CoderResponse, EvaluationError, SessionMetrics, TopicIntrusionTask, WordIntrusionTask};
use crate::inference::TopicModel;

/// θ values are floored here before taking logs.
pub const THETA_FLOOR: f64 = 1e-12;

fn lookup<'a, T>(index: &HashMap<&str, &'a T>, r: &CoderResponse) -> Result<&'a T, EvaluationError> {
    index.get(r.task_id.as_str()).copied().ok_or_else(|| EvaluationError::UnknownTask(r.task_id.clone()))
}

fn check_choice(task_id: &str, choice: usize, n: usize) -> Result<(), EvaluationError> {
    if choice >= n {
        return Err(EvaluationError::InvalidChoice { task_id: task_id.to_owned(), choice });
    }
    Ok(())
}

/// Share of non-skipped word-intrusion responses that picked the intruder.
pub fn model_precision(tasks: &[WordIntrusionTask], responses: &[CoderResponse]) -> Result<SessionMetrics, EvaluationError> {
    let index: HashMap<&str, &WordIntrusionTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let (mut correct, mut scored, mut skipped) = (0usize, 0usize, 0usize);
    for r in responses {
        let task = lookup(&index, r)?;
        match r.choice {
            Choice::Skip => skipped += 1,
            Choice::Option(c) => {
                check_choice(&task.task_id, c, task.options.len())?;
                scored += 1;
                if c == task.intruder_position {
                    correct += 1;
                }
            }
        }
    }
    if scored == 0 {
        return Err(EvaluationError::NoScoredResponses);
    }
    Ok(SessionMetrics {
        model_precision: Some(correct as f64 / scored as f64),
        topic_log_odds: None,
        n_scored: scored,
        n_skipped: skipped,
    })
}

/// Mean over non-skipped topic-intrusion responses of
/// `log θ̂_{d, intruder} − log θ̂_{d, chosen}`.
pub fn topic_log_odds(
    tasks: &[TopicIntrusionTask],
    responses: &[CoderResponse],
    model: &TopicModel,
) -> Result<SessionMetrics, EvaluationError> {
    let index: HashMap<&str, &TopicIntrusionTask> = tasks.iter().map(|t| (t.task_id.as_str(), t)).collect();
    let (mut sum, mut scored, mut skipped) = (0.0, 0usize, 0usize);
    for r in responses {
        let task = lookup(&index, r)?;
        let Choice::Option(c) = r.choice else {
            skipped += 1;
            continue;
        };
        check_choice(&task.task_id, c, task.topic_options.len())?;
        let d = model.doc_index(&task.doc_id).ok_or_else(|| EvaluationError::UnknownDocument(task.doc_id.clone()))?;
        let theta = model.theta().row(d);
        let intruder = task.topic_options[task.intruder_position].topic_id;
        let chosen = task.topic_options[c].topic_id;
        if intruder >= theta.len() || chosen >= theta.len() {
            return Err(EvaluationError::InvalidChoice { task_id: task.task_id.clone(), choice: c });
        }
        sum += theta[intruder].max(THETA_FLOOR).ln() - theta[chosen].max(THETA_FLOOR).ln();
        scored += 1;
    }
    if scored == 0 {
        return Err(EvaluationError::NoScoredResponses);
    }
    Ok(SessionMetrics { model_precision: None, topic_log_odds: Some(sum / scored as f64), n_scored: scored, n_skipped: skipped })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::evaluation::TopicOption;
    use crate::inference::Hyperparams;
    use ndarray::array;

    fn word_task(id: &str, intruder: usize) -> WordIntrusionTask {
        WordIntrusionTask {
            task_id: id.into(),
            model_id: "m".into(),
            topic_id: 0,
            options: (0..6).map(|i| format!("o{i}")).collect(),
            intruder_position: intruder,
            gen_seed: 0,
        }
    }

    fn response(task: &str, coder: &str, choice: Choice) -> CoderResponse {
        CoderResponse { task_id: task.into(), coder_id: coder.into(), choice, submitted_at: "2024-01-01T00:00:00Z".into() }
    }

    #[test]
    fn all_correct_is_one() {
        let tasks: Vec<_> = (0..4).map(|i| word_task(&format!("w{i}"), i)).collect();
        let rs: Vec<_> = (0..4).map(|i| response(&format!("w{i}"), "c", Choice::Option(i))).collect();
        assert_eq!(model_precision(&tasks, &rs).unwrap().model_precision, Some(1.0));
    }

    #[test]
    fn twenty_seven_of_forty() {
        let tasks: Vec<_> = (0..40).map(|i| word_task(&format!("w{i}"), i % 6)).collect();
        let mut rs: Vec<_> = (0..40)
            .map(|i| {
                let pick = if i < 27 { i % 6 } else { (i + 1) % 6 };
                response(&format!("w{i}"), "c", Choice::Option(pick))
            })
            .collect();
        rs.push(response("w0", "other", Choice::Skip));
        let m = model_precision(&tasks, &rs).unwrap();
        assert_eq!(m.model_precision, Some(0.675));
        assert_eq!((m.n_scored, m.n_skipped), (40, 1));
        rs.reverse();
        assert_eq!(model_precision(&tasks, &rs).unwrap().model_precision, Some(0.675));
    }

    #[test]
    fn precision_errors() {
        let tasks = vec![word_task("w0", 0)];
        assert!(matches!(model_precision(&tasks, &[response("nope", "c", Choice::Option(0))]), Err(EvaluationError::UnknownTask(_))));
        assert!(matches!(model_precision(&tasks, &[response("w0", "c", Choice::Skip)]), Err(EvaluationError::NoScoredResponses)));
        assert!(matches!(model_precision(&tasks, &[response("w0", "c", Choice::Option(6))]), Err(EvaluationError::InvalidChoice { .. })));
    }

    fn tlo_fixture() -> (TopicModel, TopicIntrusionTask) {
        let model = TopicModel::from_parts(
            ndarray::Array2::from_elem((4, 2), 0.5),
            array![[0.5, 0.3, 0.15, 0.05]],
            vec!["a".into(), "b".into()],
            vec!["doc".into()],
            Hyperparams::new(4),
            vec![],
        )
        .unwrap();
        let task = TopicIntrusionTask {
            task_id: "t0".into(),
            model_id: "m".into(),
            doc_id: "doc".into(),
            snippet: String::new(),
            // options: topics 2, 0, 3 (intruder), 1
            topic_options: [2, 0, 3, 1].iter().map(|&t| TopicOption { topic_id: t, words: vec![] }).collect(),
            intruder_position: 2,
            gen_seed: 0,
        };
        (model, task)
    }

    #[test]
    fn log_odds_hand_value() {
        let (model, task) = tlo_fixture();
        let m = topic_log_odds(std::slice::from_ref(&task), &[response("t0", "c", Choice::Option(0))], &model).unwrap();
        let tlo = m.topic_log_odds.unwrap();
        assert!((tlo - (0.05f64.ln() - 0.15f64.ln())).abs() < 1e-15);
        assert!((tlo + 1.0986).abs() < 1e-4);
    }

    #[test]
    fn log_odds_zero_when_all_correct() {
        let (model, task) = tlo_fixture();
        let rs = vec![response("t0", "a", Choice::Option(2)), response("t0", "b", Choice::Option(2)), response("t0", "c", Choice::Skip)];
        let m = topic_log_odds(std::slice::from_ref(&task), &rs, &model).unwrap();
        assert_eq!(m.topic_log_odds, Some(0.0));
        assert_eq!(m.n_skipped, 1);
    }
}

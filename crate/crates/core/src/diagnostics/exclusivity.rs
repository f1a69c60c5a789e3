use super::DiagnosticsError;
use crate::inference::{top_word_indices, TopicModel};

/// Share of `x` among `sorted` values that are `<= x`.
fn ecdf(sorted: &[f64], x: f64) -> f64 {
    sorted.partition_point(|&s| s <= x) as f64 / sorted.len() as f64
}

/// FREX score of every (topic, term): the weighted harmonic mean of the
/// term's within-topic ECDF of exclusivity `φ_kv / Σ_j φ_jv` (weight `w`)
/// and of its within-topic ECDF of frequency `φ_kv` (weight `1 − w`).
pub fn frex_scores(model: &TopicModel, w: f64) -> Vec<Vec<f64>> {
    let phi = model.phi();
    let (k, v) = (model.k(), model.n_terms());
    let col_sums: Vec<f64> = (0..v).map(|t| phi.column(t).sum()).collect();
    (0..k)
        .map(|topic| {
            let freq: Vec<f64> = phi.row(topic).to_vec();
            let excl: Vec<f64> =
                freq.iter().zip(&col_sums).map(|(&p, &s)| if s > 0.0 { p / s } else { 0.0 }).collect();
            let mut freq_sorted = freq.clone();
            freq_sorted.sort_by(f64::total_cmp);
            let mut excl_sorted = excl.clone();
            excl_sorted.sort_by(f64::total_cmp);
            (0..v)
                .map(|t| {
                    let e = ecdf(&excl_sorted, excl[t]);
                    let f = ecdf(&freq_sorted, freq[t]);
                    1.0 / (w / e + (1.0 - w) / f)
                })
                .collect()
        })
        .collect()
}

/// Per-topic mean FREX over the topic's top `m` words.
pub fn exclusivity(model: &TopicModel, m: usize, w: f64) -> Result<Vec<f64>, DiagnosticsError> {
    if model.k() < 2 {
        return Err(DiagnosticsError::SingleTopic);
    }
    if m < 1 || m > model.n_terms() {
        return Err(DiagnosticsError::InvalidParameter(format!("M = {m} must be in 1..={}", model.n_terms())));
    }
    if !(0.0..=1.0).contains(&w) {
        return Err(DiagnosticsError::InvalidParameter(format!("FREX weight {w} must be in [0, 1]")));
    }
    let frex = frex_scores(model, w);
    (0..model.k())
        .map(|topic| {
            let top = top_word_indices(model, topic, m)?;
            Ok(top.iter().map(|&t| frex[topic][t]).sum::<f64>() / m as f64)
        })
        .collect()
}

use ndarray::Array2;

use super::DiagnosticsError;
use crate::corpus::DocTermMatrix;
use crate::inference::TopicModel;

/// Dispersion of counts around the model's expectations:
/// `Σ_{d,v: q>0} (c_dv − N_d q_dv)² / (N_d q_dv)` divided by
/// `max(1, Σ_d (V_d − K))`, with `q_d = θ_d φ` and `V_d` the number of
/// distinct terms in document `d`. Rows are `(term, count)` pairs; counts may
/// be fractional.
pub fn dispersion_statistic(theta: &Array2<f64>, phi: &Array2<f64>, rows: &[Vec<(usize, f64)>]) -> f64 {
    let k = phi.nrows();
    let v = phi.ncols();
    let mut stat = 0.0;
    let mut df: i64 = 0;
    let mut counts = vec![0.0; v];
    for (d, row) in rows.iter().enumerate() {
        let n_d: f64 = row.iter().map(|&(_, c)| c).sum();
        counts.iter_mut().for_each(|c| *c = 0.0);
        for &(t, c) in row {
            counts[t] += c;
        }
        let q = theta.row(d).dot(phi);
        for t in 0..v {
            if q[t] > 0.0 {
                let expected = n_d * q[t];
                stat += (counts[t] - expected).powi(2) / expected;
            }
        }
        let distinct = row.iter().filter(|&&(_, c)| c > 0.0).count() as i64;
        df += distinct - k as i64;
    }
    stat / df.max(1) as f64
}

pub fn residual_dispersion(model: &TopicModel, dtm: &DocTermMatrix) -> Result<f64, DiagnosticsError> {
    if !model.matches(dtm) {
        return Err(DiagnosticsError::ModelCorpusMismatch);
    }
    let rows: Vec<Vec<(usize, f64)>> = dtm.rows().iter().map(|r| r.iter().map(|(t, c)| (t, c as f64)).collect()).collect();
    Ok(dispersion_statistic(model.theta(), model.phi(), &rows))
}

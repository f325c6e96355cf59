//! Sentence-level BLEU-2.

use super::ngram::{ngram_counts, ngram_total};
use super::MetricError;
use crate::model::Token;

pub const DEFAULT_EPSILON: f64 = 1e-9;

/// Geometric mean of clipped 1- and 2-gram precision times the brevity
/// penalty `exp(min(0, 1 - |ref|/|hyp|))`.
///
/// A zero precision is replaced by `epsilon`. An order for which neither
/// sentence has any n-gram (both are single tokens) is left out of the mean,
/// so identical sentences always score 1.
pub fn bleu2(reference: &[Token], hypothesis: &[Token], epsilon: f64) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let mut log_sum = 0.0;
    let mut orders = 0usize;
    for n in 1..=2 {
        let hyp_total = ngram_total(hypothesis.len(), n);
        let ref_total = ngram_total(reference.len(), n);
        if hyp_total == 0 && ref_total == 0 {
            continue;
        }
        let precision = if hyp_total == 0 {
            0.0
        } else {
            let ref_counts = ngram_counts(reference, n);
            let matched: usize = ngram_counts(hypothesis, n)
                .iter()
                .map(|(g, &c)| c.min(ref_counts.get(g).copied().unwrap_or(0)))
                .sum();
            matched as f64 / hyp_total as f64
        };
        log_sum += if precision > 0.0 { precision } else { epsilon }.ln();
        orders += 1;
    }
    let geo = (log_sum / orders as f64).exp();
    let ratio = reference.len() as f64 / hypothesis.len() as f64;
    let brevity = (1.0 - ratio).min(0.0).exp();
    Ok(brevity * geo)
}

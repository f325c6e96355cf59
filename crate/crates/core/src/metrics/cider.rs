//! Single-reference CIDEr-D.

use std::collections::BTreeMap;

use super::idf::IdfTable;
use super::ngram::ngram_counts;
use super::MetricError;
use crate::model::Token;

pub const DEFAULT_SIGMA: f64 = 6.0;
pub const MAX_ORDER: usize = 4;

fn tfidf_vector(tokens: &[Token], n: usize, idf: &IdfTable) -> (BTreeMap<String, f64>, f64) {
    let vec: BTreeMap<String, f64> = ngram_counts(tokens, n)
        .into_iter()
        .map(|(g, tf)| {
            let w = tf as f64 * idf.idf(&g);
            (g, w)
        })
        .collect();
    let norm = vec.values().map(|w| w * w).sum::<f64>().sqrt();
    (vec, norm)
}

/// `10 · mean_n [Σ_g min(h_g, r_g)·r_g / (‖h‖·‖r‖)] · exp(-(|hyp|-|ref|)² / 2σ²)`
/// over n = 1..=4, with `h`, `r` the tf-idf weighted n-gram vectors.
pub fn cider_d(
    reference: &[Token],
    hypothesis: &[Token],
    idf: &IdfTable,
    sigma: f64,
) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let delta = hypothesis.len() as f64 - reference.len() as f64;
    let penalty = (-(delta * delta) / (2.0 * sigma * sigma)).exp();
    let mut total = 0.0;
    for n in 1..=MAX_ORDER {
        let (h, h_norm) = tfidf_vector(hypothesis, n, idf);
        let (r, r_norm) = tfidf_vector(reference, n, idf);
        if h_norm == 0.0 || r_norm == 0.0 {
            continue;
        }
        let dot: f64 = h
            .iter()
            .filter_map(|(g, hw)| r.get(g).map(|rw| hw.min(*rw) * rw))
            .sum();
        total += dot / (h_norm * r_norm) * penalty;
    }
    Ok(10.0 * total / MAX_ORDER as f64)
}

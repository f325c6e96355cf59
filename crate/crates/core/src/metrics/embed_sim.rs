//! Greedy-matching contextual similarity with idf weighting.

use super::idf::IdfTable;
use super::MetricError;
use crate::embed::{EmbeddingBundle, EmbeddingStore, SentenceKey};
use crate::model::Token;

fn cosine(a: &[f32], b: &[f32]) -> f64 {
    let mut dot = 0.0;
    let mut na = 0.0;
    let mut nb = 0.0;
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (f64::from(x), f64::from(y));
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return 0.0;
    }
    dot / (na.sqrt() * nb.sqrt())
}

/// Unigram idf weights; uniform when every weight is zero.
fn weights(tokens: &[Token], idf: &IdfTable) -> Vec<f64> {
    let w: Vec<f64> = tokens.iter().map(|t| idf.idf(&t.surface)).collect();
    if w.iter().sum::<f64>() > 0.0 {
        w
    } else {
        vec![1.0; tokens.len()]
    }
}

/// Idf-weighted mean over `from` of the best cosine against `to`.
fn greedy_side(from: &[Vec<f32>], to: &[Vec<f32>], w: &[f64]) -> f64 {
    let mut num = 0.0;
    let mut den = 0.0;
    for (v, &wi) in from.iter().zip(w) {
        let best = to
            .iter()
            .map(|u| cosine(v, u))
            .fold(f64::NEG_INFINITY, f64::max);
        num += wi * best;
        den += wi;
    }
    num / den
}

/// Greedy-match F1 from two aligned bundles. Recall matches each reference
/// token to its most similar hypothesis token, precision the reverse.
pub fn similarity_from_bundles(
    reference: &[Token],
    ref_bundle: &EmbeddingBundle,
    hypothesis: &[Token],
    hyp_bundle: &EmbeddingBundle,
    idf: &IdfTable,
    baseline: f64,
) -> f64 {
    let recall = greedy_side(&ref_bundle.vectors, &hyp_bundle.vectors, &weights(reference, idf));
    let precision = greedy_side(&hyp_bundle.vectors, &ref_bundle.vectors, &weights(hypothesis, idf));
    let f = if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    };
    if baseline != 0.0 {
        (f - baseline) / (1.0 - baseline)
    } else {
        f
    }
}

fn lookup<'a>(store: &'a EmbeddingStore, tokens: &[Token]) -> Result<&'a EmbeddingBundle, MetricError> {
    let key = SentenceKey::of_tokens(tokens);
    let bundle = store.get(&key).ok_or(MetricError::MissingEmbedding {
        key,
        sentence: crate::model::join_surfaces(tokens),
    })?;
    if bundle.vectors.len() != tokens.len() {
        return Err(MetricError::MisalignedEmbedding {
            key,
            tokens: tokens.len(),
            vectors: bundle.vectors.len(),
        });
    }
    Ok(bundle)
}

pub fn embed_sim(
    reference: &[Token],
    hypothesis: &[Token],
    store: &EmbeddingStore,
    idf: &IdfTable,
    baseline: f64,
) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let rb = lookup(store, reference)?;
    let hb = lookup(store, hypothesis)?;
    Ok(similarity_from_bundles(reference, rb, hypothesis, hb, idf, baseline))
}

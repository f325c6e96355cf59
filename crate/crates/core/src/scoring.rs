//! Relative, contrastive and consistency scoring of predicted answers.
//!
//! A prediction is judged inside its query sentence: with
//! `Ref = Q(A_gt)`, `Hyp = Q(A_pred)` and `Base = Q("")` the relative score is
//! `(B(Ref, Hyp) - B(Ref, Base)) / (B(Ref, Ref) - B(Ref, Base))`, so copying the
//! gold answer scores exactly 1 and the empty answer exactly 0 for any base
//! metric `B`. The contrastive score then gates a query's relative score on
//! its partner query also being answered above a threshold.

use std::collections::{BTreeMap, HashMap, HashSet};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lexicon::Lexicon;
use crate::metrics::{MetricError, MetricId, MetricSuite};
use crate::model::{render, threshold_key, ContrastivePair, PredictionRecord, QueryRecord, ScoreRecord, Token};

/// Below this gap between `B(Ref, Ref)` and `B(Ref, Base)` a query cannot be
/// rescaled.
pub const DEGENERATE_GAP: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum ScoreError {
    #[error("query {query_id}: {metric} cannot separate reference from base (gap {gap:e})")]
    Degenerate {
        query_id: String,
        metric: MetricId,
        gap: f64,
    },
    #[error("query {0}: gold answer is empty")]
    EmptyAnswer(String),
    #[error("missing predictions for {} queries: {}", .0.len(), .0.join(", "))]
    MissingPredictions(Vec<String>),
    #[error("pair references unknown queries: {}", .0.join(", "))]
    UnknownQueries(Vec<String>),
    #[error("query {query_id}: {source}")]
    Metric {
        query_id: String,
        #[source]
        source: MetricError,
    },
    #[error("invalid thresholds: {0}")]
    Thresholds(String),
}

/// Which scores feed the consistency indicator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum ConsistencyInput {
    /// Raw relative scores, possibly negative.
    #[default]
    Relative,
    /// Relative scores clamped at 0.
    Clamped,
}

/// Scale of the partner gate `S_j > t · self_ref_j`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum PartnerSelfRef {
    /// `self_ref_j = 1`: the reference's own score on the relative scale.
    #[default]
    Relative,
    /// `self_ref_j = B(Ref_j, Ref_j)` in raw metric units.
    Raw,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScoringConfig {
    pub cs_thresholds: Vec<f64>,
    pub cons_threshold: f64,
    pub consistency_input: ConsistencyInput,
    pub partner_self_ref: PartnerSelfRef,
}

impl Default for ScoringConfig {
    fn default() -> Self {
        ScoringConfig {
            cs_thresholds: vec![0.0, 0.1, 0.2, 0.3],
            cons_threshold: 0.1,
            consistency_input: ConsistencyInput::default(),
            partner_self_ref: PartnerSelfRef::default(),
        }
    }
}

impl ScoringConfig {
    pub fn validate(&self) -> Result<(), ScoreError> {
        let bad: Vec<String> = self
            .cs_thresholds
            .iter()
            .chain(std::iter::once(&self.cons_threshold))
            .filter(|t| !(0.0..1.0).contains(*t))
            .map(|t| t.to_string())
            .collect();
        if !bad.is_empty() {
            return Err(ScoreError::Thresholds(format!(
                "values must lie in [0, 1): {}",
                bad.join(", ")
            )));
        }
        if self.cs_thresholds.is_empty() {
            return Err(ScoreError::Thresholds("no contrastive thresholds".into()));
        }
        Ok(())
    }
}

/// `B(Ref, Ref)` and `B(Ref, Base)` for one query under one metric.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QueryBasis {
    pub reference: f64,
    pub base: f64,
}

impl QueryBasis {
    pub fn compute(suite: &MetricSuite, metric: MetricId, query: &QueryRecord, gold: &[Token]) -> Result<Self, ScoreError> {
        if gold.is_empty() {
            return Err(ScoreError::EmptyAnswer(query.query_id.clone()));
        }
        let reference = render(query, gold);
        let base = render(query, &[]);
        let wrap = |source| ScoreError::Metric {
            query_id: query.query_id.clone(),
            source,
        };
        let basis = QueryBasis {
            reference: suite.score(metric, &reference, &reference).map_err(wrap)?,
            base: suite.score(metric, &reference, &base).map_err(wrap)?,
        };
        let gap = basis.reference - basis.base;
        if gap.abs() < DEGENERATE_GAP {
            return Err(ScoreError::Degenerate {
                query_id: query.query_id.clone(),
                metric,
                gap,
            });
        }
        Ok(basis)
    }

    pub fn rescale(&self, raw: f64) -> f64 {
        (raw - self.base) / (self.reference - self.base)
    }
}

/// Relative score of `predicted` against `gold` within `query`.
pub fn relative_score(
    suite: &MetricSuite,
    metric: MetricId,
    query: &QueryRecord,
    gold: &[Token],
    predicted: &[Token],
) -> Result<f64, ScoreError> {
    let basis = QueryBasis::compute(suite, metric, query, gold)?;
    let raw = suite
        .score(metric, &render(query, gold), &render(query, predicted))
        .map_err(|source| ScoreError::Metric {
            query_id: query.query_id.clone(),
            source,
        })?;
    Ok(basis.rescale(raw))
}

/// `max(s_i · 1[s_j > t · self_ref_j], 0)`.
pub fn contrastive_score(s_i: f64, s_j: f64, self_ref_j: f64, t: f64) -> f64 {
    let gated = if s_j > t * self_ref_j { s_i } else { 0.0 };
    gated.max(0.0)
}

/// 1 iff both scores fall strictly on the same side of `t`.
pub fn consistency(s_i: f64, s_j: f64, t: f64) -> u8 {
    u8::from((s_i - t) * (s_j - t) > 0.0)
}

/// A (query, metric) left out of the records, or scored without a partner.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ScoreAudit {
    pub query_id: String,
    pub metric: MetricId,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct SplitScores {
    pub records: Vec<ScoreRecord>,
    pub audit: Vec<ScoreAudit>,
}

/// Inputs to [`score_split`]. Partners of scored queries may live in
/// `partner_pool` (the other evaluation split); they are scored with their
/// own predictions but produce no records.
pub struct ScoreRequest<'a> {
    pub queries: &'a [QueryRecord],
    pub partner_pool: &'a [QueryRecord],
    pub pairs: &'a [ContrastivePair],
    pub predictions: &'a [PredictionRecord],
    pub metrics: &'a [MetricId],
    pub config: &'a ScoringConfig,
    pub lexicon: &'a Lexicon,
}

struct Relative {
    value: f64,
    self_ref: f64,
}

pub fn score_split(suite: &MetricSuite, req: &ScoreRequest<'_>) -> Result<SplitScores, ScoreError> {
    req.config.validate()?;
    let mut by_id: HashMap<&str, &QueryRecord> = HashMap::new();
    for q in req.partner_pool.iter().chain(req.queries) {
        by_id.insert(q.query_id.as_str(), q);
    }
    let scored: HashSet<&str> = req.queries.iter().map(|q| q.query_id.as_str()).collect();
    let partner_of: HashMap<&str, &str> = req
        .pairs
        .iter()
        .filter(|p| scored.contains(p.query_id_i.as_str()))
        .map(|p| (p.query_id_i.as_str(), p.query_id_j.as_str()))
        .collect();

    let mut unknown: Vec<String> = partner_of
        .values()
        .filter(|j| !by_id.contains_key(*j))
        .map(|j| j.to_string())
        .collect();
    unknown.sort();
    unknown.dedup();
    if !unknown.is_empty() {
        return Err(ScoreError::UnknownQueries(unknown));
    }

    // every scored query and every partner needs a prediction
    let mut needed: Vec<&str> = req.queries.iter().map(|q| q.query_id.as_str()).collect();
    needed.extend(partner_of.values().copied());
    needed.sort();
    needed.dedup();
    let predictions: HashMap<&str, &str> = req
        .predictions
        .iter()
        .map(|p| (p.query_id.as_str(), p.answer_text.as_str()))
        .collect();
    let missing: Vec<String> = needed
        .iter()
        .filter(|id| !predictions.contains_key(*id))
        .map(|id| id.to_string())
        .collect();
    if !missing.is_empty() {
        return Err(ScoreError::MissingPredictions(missing));
    }
    let predicted: HashMap<&str, Vec<Token>> = needed
        .iter()
        .map(|id| (*id, req.lexicon.tokenize(predictions[id])))
        .collect();

    // relative scores for everything needed, per metric
    let jobs: Vec<(&str, MetricId)> = needed
        .iter()
        .flat_map(|id| req.metrics.iter().map(move |m| (*id, *m)))
        .collect();
    let outcomes: Vec<Result<Relative, ScoreError>> = jobs
        .par_iter()
        .map(|(id, metric)| {
            let query = by_id[id];
            let basis = QueryBasis::compute(suite, *metric, query, &query.answer_tokens)?;
            let reference = render(query, &query.answer_tokens);
            let raw = suite
                .score(*metric, &reference, &render(query, &predicted[id]))
                .map_err(|source| ScoreError::Metric {
                    query_id: query.query_id.clone(),
                    source,
                })?;
            let self_ref = match req.config.partner_self_ref {
                PartnerSelfRef::Relative => 1.0,
                PartnerSelfRef::Raw => suite
                    .self_score(*metric, &reference)
                    .map_err(|source| ScoreError::Metric {
                        query_id: query.query_id.clone(),
                        source,
                    })?,
            };
            Ok(Relative {
                value: basis.rescale(raw),
                self_ref,
            })
        })
        .collect();
    let mut relative: HashMap<(&str, MetricId), Relative> = HashMap::new();
    let mut degenerate: HashMap<(&str, MetricId), String> = HashMap::new();
    for ((id, metric), outcome) in jobs.iter().zip(outcomes) {
        match outcome {
            Ok(r) => {
                relative.insert((*id, *metric), r);
            }
            Err(e @ ScoreError::Degenerate { .. }) => {
                degenerate.insert((*id, *metric), e.to_string());
            }
            Err(e) => return Err(e),
        }
    }

    let cfg = req.config;
    let direct: Vec<Result<Vec<f64>, ScoreError>> = req
        .queries
        .par_iter()
        .map(|q| {
            req.metrics
                .iter()
                .map(|m| {
                    suite
                        .score(*m, &q.answer_tokens, &predicted[q.query_id.as_str()])
                        .map_err(|source| ScoreError::Metric {
                            query_id: q.query_id.clone(),
                            source,
                        })
                })
                .collect()
        })
        .collect();

    let mut out = SplitScores::default();
    for (q, direct) in req.queries.iter().zip(direct) {
        let direct = direct?;
        let id = q.query_id.as_str();
        for (metric, direct) in req.metrics.iter().zip(direct) {
            let Some(s_i) = relative.get(&(id, *metric)) else {
                out.audit.push(ScoreAudit {
                    query_id: id.to_string(),
                    metric: *metric,
                    reason: degenerate[&(id, *metric)].clone(),
                });
                continue;
            };
            let mut record = ScoreRecord {
                query_id: id.to_string(),
                metric: *metric,
                direct,
                relative: s_i.value,
                contrastive: BTreeMap::new(),
                consistency: BTreeMap::new(),
            };
            match partner_of.get(id).map(|j| (j, relative.get(&(*j, *metric)))) {
                Some((_, Some(s_j))) => {
                    for &t in &cfg.cs_thresholds {
                        record.contrastive.insert(
                            threshold_key(t),
                            contrastive_score(s_i.value, s_j.value, s_j.self_ref, t),
                        );
                    }
                    let (a, b) = match cfg.consistency_input {
                        ConsistencyInput::Relative => (s_i.value, s_j.value),
                        ConsistencyInput::Clamped => (s_i.value.max(0.0), s_j.value.max(0.0)),
                    };
                    record.consistency.insert(
                        threshold_key(cfg.cons_threshold),
                        consistency(a, b, cfg.cons_threshold),
                    );
                }
                Some((j, None)) => out.audit.push(ScoreAudit {
                    query_id: id.to_string(),
                    metric: *metric,
                    reason: format!("partner {j} is degenerate; contrastive scores omitted"),
                }),
                None => {}
            }
            out.records.push(record);
        }
    }
    Ok(out)
}

/// Every token sequence the embedding metric looks up when scoring
/// `queries` against `predictions`: bare answers, bare predictions and the
/// rendered Ref / Hyp / Base sentences. Empty sequences are skipped.
pub fn embedding_sentences(
    queries: &[QueryRecord],
    predictions: &[PredictionRecord],
    lexicon: &Lexicon,
) -> Vec<Vec<Token>> {
    let predicted: HashMap<&str, &str> = predictions
        .iter()
        .map(|p| (p.query_id.as_str(), p.answer_text.as_str()))
        .collect();
    let mut out = Vec::new();
    for q in queries {
        out.push(q.answer_tokens.clone());
        out.push(q.reference());
        out.push(q.base());
        if let Some(text) = predicted.get(q.query_id.as_str()) {
            let hyp = lexicon.tokenize(text);
            out.push(render(q, &hyp));
            out.push(hyp);
        }
    }
    out.retain(|s| !s.is_empty());
    out
}

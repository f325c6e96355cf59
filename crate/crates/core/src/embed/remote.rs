//! HTTP client for an embedding service.
//!
//! Contract: `POST <endpoint>` with a JSON body
//! `{"model_tag": "...", "tokens": ["a", "person", ...]}`; the service answers
//! `{"model_tag": "...", "vectors": [[...], ...]}` with exactly one vector per
//! input token. Vectors off unit norm by more than 1e-6 but at most 1e-3 are
//! re-normalized, anything further off is rejected.

use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Mutex;
use std::time::Duration;

use serde::{Deserialize, Serialize};

use super::{EmbedError, EmbeddingBundle, EmbeddingStore, SentenceKey, REMOTE_NORM_TOLERANCE, UNIT_NORM_TOLERANCE};
use crate::model::Token;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RemoteConfig {
    pub timeout_ms: u64,
    /// Extra attempts after the first failure.
    pub retries: usize,
    pub max_in_flight: usize,
}

impl Default for RemoteConfig {
    fn default() -> Self {
        RemoteConfig {
            timeout_ms: 30_000,
            retries: 2,
            max_in_flight: 4,
        }
    }
}

#[derive(Serialize)]
struct EmbedRequest<'a> {
    model_tag: &'a str,
    tokens: Vec<&'a str>,
}

#[derive(Deserialize)]
struct EmbedResponse {
    #[serde(default)]
    model_tag: Option<String>,
    vectors: Vec<Vec<f64>>,
}

pub struct RemoteClient {
    endpoint: String,
    model_tag: String,
    config: RemoteConfig,
    agent: ureq::Agent,
}

impl RemoteClient {
    pub fn new(endpoint: impl Into<String>, model_tag: impl Into<String>, config: RemoteConfig) -> Self {
        let agent: ureq::Agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .build()
            .into();
        RemoteClient {
            endpoint: endpoint.into(),
            model_tag: model_tag.into(),
            config,
            agent,
        }
    }

    pub fn endpoint(&self) -> &str {
        &self.endpoint
    }

    fn protocol(&self, message: impl Into<String>) -> EmbedError {
        EmbedError::Protocol {
            endpoint: self.endpoint.clone(),
            message: message.into(),
        }
    }

    /// Fetches and validates vectors for one sentence.
    pub fn fetch(&self, tokens: &[Token]) -> Result<EmbeddingBundle, EmbedError> {
        let request = EmbedRequest {
            model_tag: &self.model_tag,
            tokens: tokens.iter().map(|t| t.surface.as_str()).collect(),
        };
        let attempts = self.config.retries + 1;
        let mut last_error = String::new();
        for attempt in 1..=attempts {
            match self.agent.post(&self.endpoint).send_json(&request) {
                Ok(mut response) => {
                    let body: EmbedResponse = response
                        .body_mut()
                        .read_json()
                        .map_err(|e| self.protocol(format!("malformed response body: {e}")))?;
                    return self.validate(tokens, body);
                }
                Err(ureq::Error::StatusCode(code)) if code < 500 => {
                    return Err(self.protocol(format!("HTTP status {code}")));
                }
                Err(e) => {
                    log::warn!("embedding request to {} failed (attempt {attempt}/{attempts}): {e}", self.endpoint);
                    last_error = e.to_string();
                }
            }
        }
        Err(EmbedError::Transport {
            endpoint: self.endpoint.clone(),
            attempts,
            message: last_error,
        })
    }

    fn validate(&self, tokens: &[Token], body: EmbedResponse) -> Result<EmbeddingBundle, EmbedError> {
        if let Some(tag) = &body.model_tag {
            if tag != &self.model_tag {
                return Err(EmbedError::MixedModelTags {
                    expected: self.model_tag.clone(),
                    found: tag.clone(),
                });
            }
        }
        if body.vectors.len() != tokens.len() {
            return Err(self.protocol(format!(
                "{} vectors for {} tokens",
                body.vectors.len(),
                tokens.len()
            )));
        }
        let dim = body.vectors.first().map_or(0, Vec::len);
        let mut vectors = Vec::with_capacity(body.vectors.len());
        for (i, v) in body.vectors.into_iter().enumerate() {
            if v.len() != dim || dim == 0 {
                return Err(self.protocol(format!("vector {i} has dimension {}, expected {dim}", v.len())));
            }
            let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
            if !norm.is_finite() || (norm - 1.0).abs() > REMOTE_NORM_TOLERANCE {
                return Err(self.protocol(format!("vector {i} has norm {norm}")));
            }
            // Already unit vectors are kept as sent, so a file store and a
            // service serving the same f32 values score bit-identically.
            let scale = if (norm - 1.0).abs() <= UNIT_NORM_TOLERANCE { 1.0 } else { norm };
            vectors.push(v.iter().map(|x| (x / scale) as f32).collect());
        }
        Ok(EmbeddingBundle {
            sentence_key: SentenceKey::of_tokens(tokens),
            vectors,
            model_tag: self.model_tag.clone(),
        })
    }

    /// Fetches every distinct non-empty sentence with at most `max_in_flight`
    /// concurrent requests. On failure the error of the earliest failing
    /// sentence is returned.
    pub fn fetch_all(&self, sentences: &[Vec<Token>]) -> Result<EmbeddingStore, EmbedError> {
        let mut seen = std::collections::HashSet::new();
        let unique: Vec<&Vec<Token>> = sentences
            .iter()
            .filter(|s| !s.is_empty() && seen.insert(SentenceKey::of_tokens(s)))
            .collect();
        let results: Mutex<Vec<(usize, Result<EmbeddingBundle, EmbedError>)>> = Mutex::new(Vec::new());
        let cursor = AtomicUsize::new(0);
        let workers = self.config.max_in_flight.max(1).min(unique.len().max(1));
        std::thread::scope(|scope| {
            for _ in 0..workers {
                scope.spawn(|| loop {
                    let i = cursor.fetch_add(1, Ordering::Relaxed);
                    let Some(tokens) = unique.get(i) else { break };
                    let outcome = self.fetch(tokens);
                    results.lock().expect("result lock").push((i, outcome));
                });
            }
        });
        let mut results = results.into_inner().expect("result lock");
        results.sort_by_key(|(i, _)| *i);
        let mut bundles = Vec::with_capacity(results.len());
        for (_, outcome) in results {
            bundles.push(outcome?);
        }
        let dim = bundles.iter().find_map(EmbeddingBundle::dim).unwrap_or(0);
        let mut store = EmbeddingStore::new(self.model_tag.clone(), dim);
        for bundle in bundles {
            store.insert(bundle)?;
        }
        Ok(store)
    }
}

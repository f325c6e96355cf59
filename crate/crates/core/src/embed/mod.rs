//! Per-token contextual vectors for rendered sentences.
//!
//! Bundles are keyed by a hash of the token surfaces, so the same sentence
//! resolves to the same key whether it came from a store file or a remote
//! service. Vectors are held at 32-bit precision; scoring widens to 64-bit.

mod remote;
mod store;

use std::fmt;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};
use thiserror::Error;

use crate::model::Token;

pub use remote::{RemoteClient, RemoteConfig};
pub use store::{load_store, EmbeddingStore};

/// Maximum deviation from unit L2 norm accepted for stored vectors.
pub const UNIT_NORM_TOLERANCE: f64 = 1e-6;

/// Maximum deviation accepted (and then corrected) for remote vectors.
pub const REMOTE_NORM_TOLERANCE: f64 = 1e-3;

#[derive(Debug, Error)]
pub enum EmbedError {
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("truncated embedding store at byte offset {offset}: {what}")]
    Truncated { offset: u64, what: String },
    #[error("model tag mismatch: store has `{expected}`, got `{found}`")]
    MixedModelTags { expected: String, found: String },
    #[error("dimension mismatch: expected {expected}, got {found}")]
    DimensionMismatch { expected: usize, found: usize },
    #[error("vector {index} of sentence {key} has norm {norm}, not unit")]
    NotUnitNorm { key: SentenceKey, index: usize, norm: f64 },
    #[error("protocol error from {endpoint}: {message}")]
    Protocol { endpoint: String, message: String },
    #[error("request to {endpoint} failed after {attempts} attempts: {message}")]
    Transport {
        endpoint: String,
        attempts: usize,
        message: String,
    },
    #[error("invalid store: {0}")]
    Invalid(String),
}

/// First 16 bytes of SHA-256 over the space-joined token surfaces.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct SentenceKey(pub [u8; 16]);

impl SentenceKey {
    pub fn of_tokens(tokens: &[Token]) -> Self {
        let mut hasher = Sha256::new();
        for (i, token) in tokens.iter().enumerate() {
            if i > 0 {
                hasher.update(b" ");
            }
            hasher.update(token.surface.as_bytes());
        }
        let digest = hasher.finalize();
        let mut key = [0u8; 16];
        key.copy_from_slice(&digest[..16]);
        SentenceKey(key)
    }
}

impl fmt::Display for SentenceKey {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&hex::encode(self.0))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingBundle {
    pub sentence_key: SentenceKey,
    pub vectors: Vec<Vec<f32>>,
    pub model_tag: String,
}

impl EmbeddingBundle {
    pub fn dim(&self) -> Option<usize> {
        self.vectors.first().map(Vec::len)
    }
}

pub fn l2_norm(v: &[f32]) -> f64 {
    v.iter().map(|&x| f64::from(x) * f64::from(x)).sum::<f64>().sqrt()
}

/// Scales to unit norm in 64-bit, then rounds to 32-bit.
pub fn normalize(v: &[f64]) -> Vec<f32> {
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| (x / norm) as f32).collect()
}

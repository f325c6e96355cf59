//! Base metrics over token sequences.
//!
//! Every scorer takes `(reference, hypothesis)`, fails on an empty reference
//! and returns 0 for an empty hypothesis. [`MetricSuite`] bundles the
//! corpus statistics and parameters the individual scorers need.

mod bleu;
mod cider;
mod embed_sim;
mod idf;
mod meteor;
pub mod ngram;
mod rouge;

use std::fmt;
use std::str::FromStr;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::{EmbeddingStore, SentenceKey};
use crate::model::Token;

pub use bleu::bleu2;
pub use cider::cider_d;
pub use embed_sim::{embed_sim, similarity_from_bundles};
pub use idf::{build_idf, IdfTable, MAX_IDF_ORDER};
pub use meteor::{align as meteor_align, meteor_lite, Alignment, MeteorParams};
pub use rouge::{lcs_len, rouge_l};

#[derive(Debug, Error)]
pub enum MetricError {
    #[error("reference is empty")]
    EmptyReference,
    #[error("idf corpus is empty")]
    EmptyCorpus,
    #[error("no embedding for sentence {key} (`{sentence}`)")]
    MissingEmbedding { key: SentenceKey, sentence: String },
    #[error("embedding for sentence {key} has {vectors} vectors for {tokens} tokens")]
    MisalignedEmbedding {
        key: SentenceKey,
        tokens: usize,
        vectors: usize,
    },
    #[error("metric {0} needs an embedding store")]
    NoEmbeddings(MetricId),
    #[error("unknown metric `{0}`")]
    Unknown(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum MetricId {
    #[serde(rename = "BLEU2")]
    Bleu2,
    #[serde(rename = "ROUGE_L")]
    RougeL,
    #[serde(rename = "METEOR_LITE")]
    MeteorLite,
    #[serde(rename = "CIDER_D")]
    CiderD,
    #[serde(rename = "EMBED_SIM")]
    EmbedSim,
}

impl MetricId {
    pub const ALL: [MetricId; 5] = [
        MetricId::EmbedSim,
        MetricId::Bleu2,
        MetricId::RougeL,
        MetricId::MeteorLite,
        MetricId::CiderD,
    ];

    pub const LEXICAL: [MetricId; 4] = [
        MetricId::Bleu2,
        MetricId::RougeL,
        MetricId::MeteorLite,
        MetricId::CiderD,
    ];

    pub fn name(self) -> &'static str {
        match self {
            MetricId::Bleu2 => "BLEU2",
            MetricId::RougeL => "ROUGE_L",
            MetricId::MeteorLite => "METEOR_LITE",
            MetricId::CiderD => "CIDER_D",
            MetricId::EmbedSim => "EMBED_SIM",
        }
    }

    /// Column label used in reports: `R-` + this.
    pub fn short(self) -> &'static str {
        match self {
            MetricId::Bleu2 => "B@2",
            MetricId::RougeL => "R",
            MetricId::MeteorLite => "M",
            MetricId::CiderD => "C",
            MetricId::EmbedSim => "BS",
        }
    }

    /// Whether `B(Ref, Ref)` is identically 1.
    pub fn has_unit_self_score(self) -> bool {
        self != MetricId::CiderD
    }
}

impl fmt::Display for MetricId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for MetricId {
    type Err = MetricError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.trim().to_ascii_uppercase().replace('-', "_").as_str() {
            "BLEU2" | "BLEU_2" | "BLEU" | "B@2" => Ok(MetricId::Bleu2),
            "ROUGE_L" | "ROUGE" | "ROUGEL" => Ok(MetricId::RougeL),
            "METEOR_LITE" | "METEOR" => Ok(MetricId::MeteorLite),
            "CIDER_D" | "CIDER" | "CIDERD" => Ok(MetricId::CiderD),
            "EMBED_SIM" | "BERTSCORE" | "BS" => Ok(MetricId::EmbedSim),
            _ => Err(MetricError::Unknown(s.to_string())),
        }
    }
}

/// Tunable constants; every field is a config key under `[metrics]`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MetricParams {
    pub bleu_epsilon: f64,
    pub rouge_beta: f64,
    pub meteor_alpha: f64,
    pub meteor_gamma: f64,
    pub meteor_beta: f64,
    pub cider_sigma: f64,
    /// Rescaling baseline for EMBED_SIM; 0 disables rescaling.
    pub embed_baseline: f64,
}

impl Default for MetricParams {
    fn default() -> Self {
        let meteor = MeteorParams::default();
        MetricParams {
            bleu_epsilon: bleu::DEFAULT_EPSILON,
            rouge_beta: rouge::DEFAULT_BETA,
            meteor_alpha: meteor.alpha,
            meteor_gamma: meteor.gamma,
            meteor_beta: meteor.beta,
            cider_sigma: cider::DEFAULT_SIGMA,
            embed_baseline: 0.0,
        }
    }
}

impl MetricParams {
    pub fn meteor(&self) -> MeteorParams {
        MeteorParams {
            alpha: self.meteor_alpha,
            gamma: self.meteor_gamma,
            beta: self.meteor_beta,
        }
    }
}

/// Scorers plus the shared idf table and optional embedding store.
#[derive(Debug, Clone)]
pub struct MetricSuite {
    params: MetricParams,
    idf: Arc<IdfTable>,
    embeddings: Option<Arc<EmbeddingStore>>,
}

impl MetricSuite {
    pub fn new(params: MetricParams, idf: IdfTable, embeddings: Option<Arc<EmbeddingStore>>) -> Self {
        MetricSuite {
            params,
            idf: Arc::new(idf),
            embeddings,
        }
    }

    pub fn params(&self) -> &MetricParams {
        &self.params
    }

    pub fn idf(&self) -> &IdfTable {
        &self.idf
    }

    pub fn embeddings(&self) -> Option<&EmbeddingStore> {
        self.embeddings.as_deref()
    }

    pub fn score(&self, metric: MetricId, reference: &[Token], hypothesis: &[Token]) -> Result<f64, MetricError> {
        let p = &self.params;
        match metric {
            MetricId::Bleu2 => bleu2(reference, hypothesis, p.bleu_epsilon),
            MetricId::RougeL => rouge_l(reference, hypothesis, p.rouge_beta),
            MetricId::MeteorLite => meteor_lite(reference, hypothesis, &p.meteor()),
            MetricId::CiderD => cider_d(reference, hypothesis, &self.idf, p.cider_sigma),
            MetricId::EmbedSim => {
                let store = self
                    .embeddings
                    .as_deref()
                    .ok_or(MetricError::NoEmbeddings(metric))?;
                embed_sim(reference, hypothesis, store, &self.idf, p.embed_baseline)
            }
        }
    }

    /// `B(Ref, Ref)`: the constant 1 for every metric except CIDEr-D.
    pub fn self_score(&self, metric: MetricId, reference: &[Token]) -> Result<f64, MetricError> {
        if metric.has_unit_self_score() {
            Ok(1.0)
        } else {
            self.score(metric, reference, reference)
        }
    }
}

//! TOML run configuration. Every section and key is optional:
//!
//! ```toml
//! [querygen]
//! roles = ["ARG1", "V", "ARG2", "LOC"]
//! min_roles = 3
//! stopword_verbs = ["be", "start", "end", "begin", "stop", "lead", "demonstrate", "do"]
//!
//! [metrics]
//! bleu_epsilon = 1e-9
//! cider_sigma = 6.0
//! embed_baseline = 0.0
//!
//! [scoring]
//! cs_thresholds = [0.0, 0.1, 0.2, 0.3]
//! cons_threshold = 0.1
//! consistency_input = "relative"   # or "clamped"
//! partner_self_ref = "relative"    # or "raw"
//!
//! [embeddings]
//! model_tag = "roberta-large-l17"
//! timeout_ms = 30000
//! retries = 2
//! max_in_flight = 4
//! ```

use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::embed::RemoteConfig;
use crate::metrics::MetricParams;
use crate::querygen::QueryGenConfig;
use crate::scoring::ScoringConfig;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Parse(#[from] toml::de::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbeddingConfig {
    /// Tag sent to remote services and expected in stores.
    pub model_tag: String,
    pub timeout_ms: u64,
    pub retries: usize,
    pub max_in_flight: usize,
}

impl EmbeddingConfig {
    pub fn remote(&self) -> RemoteConfig {
        RemoteConfig {
            timeout_ms: self.timeout_ms,
            retries: self.retries,
            max_in_flight: self.max_in_flight,
        }
    }
}

impl Default for EmbeddingConfig {
    fn default() -> Self {
        let remote = RemoteConfig::default();
        EmbeddingConfig {
            model_tag: "default".into(),
            timeout_ms: remote.timeout_ms,
            retries: remote.retries,
            max_in_flight: remote.max_in_flight,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Config {
    pub querygen: QueryGenConfig,
    pub metrics: MetricParams,
    pub scoring: ScoringConfig,
    pub embeddings: EmbeddingConfig,
}

impl Config {
    pub fn from_toml(text: &str) -> Result<Self, ConfigError> {
        Ok(toml::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::from_toml(&text)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::SrlRole;
    use crate::scoring::PartnerSelfRef;

    #[test]
    fn empty_config_is_default() {
        assert_eq!(Config::from_toml("").unwrap(), Config::default());
    }

    #[test]
    fn sections_override_defaults() {
        let cfg = Config::from_toml(
            r#"
[querygen]
roles = ["ARG1", "V", "ARG2", "LOC"]

[scoring]
cs_thresholds = [0.0, 0.5]
partner_self_ref = "raw"

[embeddings]
model_tag = "toy"
retries = 0
"#,
        )
        .unwrap();
        assert!(!cfg.querygen.is_considered(&SrlRole::Arg0));
        assert_eq!(cfg.scoring.cs_thresholds, [0.0, 0.5]);
        assert_eq!(cfg.scoring.cons_threshold, 0.1);
        assert_eq!(cfg.scoring.partner_self_ref, PartnerSelfRef::Raw);
        assert_eq!(cfg.embeddings.model_tag, "toy");
        assert_eq!(cfg.embeddings.remote().retries, 0);
        assert_eq!(cfg.embeddings.timeout_ms, 30_000);
    }

    #[test]
    fn unknown_keys_rejected() {
        assert!(Config::from_toml("[metrics]\nbleu_order = 4\n").is_err());
        assert!(Config::from_toml("[querygen]\nmin_roles = 1\n").is_err());
    }
}

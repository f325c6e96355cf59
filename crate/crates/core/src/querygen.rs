//! Query generation from SRL frames.
//!
//! Each verb frame is restricted to the considered role set, filtered for
//! stopword verbs and a minimum role count, and then each remaining role is
//! masked in turn to produce one query.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::model::{AnnotatedDescription, QueryRecord, QueryToken, SrlRole, Token, VerbFrame};

pub const DEFAULT_MIN_ROLES: usize = 3;

pub const DEFAULT_STOPWORD_VERBS: [&str; 8] =
    ["be", "start", "end", "begin", "stop", "lead", "demonstrate", "do"];

#[derive(Debug, Error, PartialEq, Eq)]
pub enum QueryGenConfigError {
    #[error("min_roles must be at least 2, got {0}")]
    MinRolesTooSmall(usize),
    #[error("considered roles must include V")]
    MissingVerb,
    #[error("role {0} cannot be considered")]
    UnsupportedRole(String),
}

/// Role set, ambiguity filter and stopword verbs.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawQueryGenConfig", into = "RawQueryGenConfig")]
pub struct QueryGenConfig {
    considered_roles: BTreeSet<SrlRole>,
    min_roles: usize,
    stopword_verb_lemmas: BTreeSet<String>,
}

impl QueryGenConfig {
    pub fn new(
        considered_roles: impl IntoIterator<Item = SrlRole>,
        min_roles: usize,
        stopword_verb_lemmas: impl IntoIterator<Item = String>,
    ) -> Result<Self, QueryGenConfigError> {
        let considered_roles: BTreeSet<SrlRole> = considered_roles.into_iter().collect();
        if min_roles < 2 {
            return Err(QueryGenConfigError::MinRolesTooSmall(min_roles));
        }
        if !considered_roles.contains(&SrlRole::V) {
            return Err(QueryGenConfigError::MissingVerb);
        }
        if let Some(other) = considered_roles.iter().find(|r| r.is_other()) {
            return Err(QueryGenConfigError::UnsupportedRole(other.to_string()));
        }
        Ok(QueryGenConfig {
            considered_roles,
            min_roles,
            stopword_verb_lemmas: stopword_verb_lemmas
                .into_iter()
                .map(|s| s.to_lowercase())
                .collect(),
        })
    }

    /// ARG0, ARG1, V, ARG2, LOC with the default filters.
    pub fn activitynet() -> Self {
        Self::with_roles(SrlRole::considered())
    }

    /// Same as [`QueryGenConfig::activitynet`] without ARG0; single-actor
    /// videos make agent questions trivial.
    pub fn charades() -> Self {
        Self::with_roles([SrlRole::Arg1, SrlRole::V, SrlRole::Arg2, SrlRole::Loc])
    }

    fn with_roles(roles: impl IntoIterator<Item = SrlRole>) -> Self {
        Self::new(
            roles,
            DEFAULT_MIN_ROLES,
            DEFAULT_STOPWORD_VERBS.iter().map(|s| s.to_string()),
        )
        .expect("built-in presets are valid")
    }

    pub fn considered_roles(&self) -> &BTreeSet<SrlRole> {
        &self.considered_roles
    }

    pub fn min_roles(&self) -> usize {
        self.min_roles
    }

    pub fn stopword_verb_lemmas(&self) -> &BTreeSet<String> {
        &self.stopword_verb_lemmas
    }

    pub fn is_considered(&self, role: &SrlRole) -> bool {
        role == &SrlRole::V || self.considered_roles.contains(role)
    }
}

impl Default for QueryGenConfig {
    fn default() -> Self {
        Self::activitynet()
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RawQueryGenConfig {
    #[serde(default = "default_roles")]
    roles: Vec<SrlRole>,
    #[serde(default = "default_min_roles")]
    min_roles: usize,
    #[serde(default = "default_stopwords")]
    stopword_verbs: Vec<String>,
}

fn default_roles() -> Vec<SrlRole> {
    SrlRole::considered().to_vec()
}

fn default_min_roles() -> usize {
    DEFAULT_MIN_ROLES
}

fn default_stopwords() -> Vec<String> {
    DEFAULT_STOPWORD_VERBS.iter().map(|s| s.to_string()).collect()
}

impl TryFrom<RawQueryGenConfig> for QueryGenConfig {
    type Error = QueryGenConfigError;

    fn try_from(raw: RawQueryGenConfig) -> Result<Self, Self::Error> {
        QueryGenConfig::new(raw.roles, raw.min_roles, raw.stopword_verbs)
    }
}

impl From<QueryGenConfig> for RawQueryGenConfig {
    fn from(cfg: QueryGenConfig) -> Self {
        RawQueryGenConfig {
            roles: cfg.considered_roles.into_iter().collect(),
            min_roles: cfg.min_roles,
            stopword_verbs: cfg.stopword_verb_lemmas.into_iter().collect(),
        }
    }
}

/// Drops roles outside the considered set, preserving order. V is kept.
pub fn restrict_frame(frame: &VerbFrame, cfg: &QueryGenConfig) -> VerbFrame {
    VerbFrame {
        verb_index: frame.verb_index,
        roles: frame
            .roles
            .iter()
            .filter(|span| cfg.is_considered(&span.role))
            .cloned()
            .collect(),
    }
}

/// True iff the verb is not a stopword and the restricted frame has at
/// least `min_roles` roles (V included).
pub fn frame_eligible(frame: &VerbFrame, tokens: &[Token], cfg: &QueryGenConfig) -> bool {
    let Some(verb) = tokens.get(frame.verb_index) else {
        return false;
    };
    !cfg.stopword_verb_lemmas.contains(&verb.lemma) && frame.roles.len() >= cfg.min_roles
}

/// Token indices forming the frame's sentence: everything from the first to
/// the last considered span, minus tokens covered by dropped roles.
pub fn frame_context(original: &VerbFrame, restricted: &VerbFrame) -> Vec<usize> {
    let (Some(lo), Some(hi)) = (
        restricted.roles.iter().map(|s| s.start).min(),
        restricted.roles.iter().map(|s| s.end).max(),
    ) else {
        return Vec::new();
    };
    let dropped: Vec<_> = original
        .roles
        .iter()
        .filter(|s| !restricted.roles.contains(s))
        .collect();
    (lo..hi)
        .filter(|&i| !dropped.iter().any(|s| s.contains(i)))
        .collect()
}

/// One query per role of every eligible restricted frame.
pub fn generate_queries(desc: &AnnotatedDescription, cfg: &QueryGenConfig) -> Vec<QueryRecord> {
    let mut out = Vec::new();
    for (frame_index, frame) in desc.frames.iter().enumerate() {
        let restricted = restrict_frame(frame, cfg);
        if !frame_eligible(&restricted, &desc.tokens, cfg) {
            continue;
        }
        let context = frame_context(frame, &restricted);
        for masked in &restricted.roles {
            let mut query_tokens = Vec::with_capacity(context.len());
            let mut placed = false;
            for &i in &context {
                if masked.contains(i) {
                    if !placed {
                        query_tokens.push(QueryToken::Placeholder {
                            placeholder: masked.role.clone(),
                        });
                        placed = true;
                    }
                } else {
                    query_tokens.push(QueryToken::Word(desc.tokens[i].clone()));
                }
            }
            out.push(QueryRecord {
                query_id: QueryRecord::make_id(&desc.segment_id, frame_index, &masked.role),
                video_id: desc.video_id.clone(),
                segment_id: desc.segment_id.clone(),
                frame_index,
                masked_role: masked.role.clone(),
                query_tokens,
                answer_tokens: desc.tokens[masked.start..masked.end].to_vec(),
            });
        }
    }
    out
}

//! Domain types shared by every stage of the pipeline.
//!
//! Everything here is plain data: immutable after construction, `Send + Sync`,
//! and serializable to the line-record interchange format in [`crate::records`].

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Coarse part of speech. Only nouns and verbs feed contrastive signatures.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum CoarsePos {
    Noun,
    Verb,
    Other,
}

impl fmt::Display for CoarsePos {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CoarsePos::Noun => "NOUN",
            CoarsePos::Verb => "VERB",
            CoarsePos::Other => "OTHER",
        })
    }
}

/// A single pre-tokenized word.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct Token {
    pub surface: String,
    pub lemma: String,
    pub pos: CoarsePos,
}

impl Token {
    /// Builds a token, lowercasing surface and lemma.
    pub fn new(surface: &str, lemma: &str, pos: CoarsePos) -> Self {
        Token {
            surface: surface.to_lowercase(),
            lemma: lemma.to_lowercase(),
            pos,
        }
    }

    /// A token whose lemma is its own surface form.
    pub fn plain(surface: &str) -> Self {
        Token::new(surface, surface, CoarsePos::Other)
    }
}

/// Semantic role label. `Other` keeps the raw label of roles outside the
/// considered set so they survive a parse/serialize round trip.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum SrlRole {
    Arg0,
    Arg1,
    V,
    Arg2,
    Loc,
    Other(String),
}

impl SrlRole {
    /// Canonicalizes a raw labeler tag. `ARGM-LOC` and `LOC` both map to
    /// [`SrlRole::Loc`]; BIO prefixes are not accepted here.
    pub fn from_label(raw: &str) -> Self {
        match raw.trim().to_ascii_uppercase().as_str() {
            "ARG0" => SrlRole::Arg0,
            "ARG1" => SrlRole::Arg1,
            "V" => SrlRole::V,
            "ARG2" => SrlRole::Arg2,
            "ARGM-LOC" | "LOC" => SrlRole::Loc,
            other => SrlRole::Other(other.to_string()),
        }
    }

    pub fn label(&self) -> &str {
        match self {
            SrlRole::Arg0 => "ARG0",
            SrlRole::Arg1 => "ARG1",
            SrlRole::V => "V",
            SrlRole::Arg2 => "ARG2",
            SrlRole::Loc => "LOC",
            SrlRole::Other(raw) => raw,
        }
    }

    pub fn is_other(&self) -> bool {
        matches!(self, SrlRole::Other(_))
    }

    /// The five roles that may appear in a query.
    pub fn considered() -> [SrlRole; 5] {
        [
            SrlRole::Arg0,
            SrlRole::Arg1,
            SrlRole::V,
            SrlRole::Arg2,
            SrlRole::Loc,
        ]
    }

    /// Surface form of the query token for this role, e.g. `<Q-ARG1>`.
    pub fn placeholder(&self) -> String {
        format!("<Q-{}>", self.label())
    }
}

impl fmt::Display for SrlRole {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.label())
    }
}

impl FromStr for SrlRole {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(SrlRole::from_label(s))
    }
}

impl Serialize for SrlRole {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.label())
    }
}

impl<'de> Deserialize<'de> for SrlRole {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let raw = String::deserialize(deserializer)?;
        Ok(SrlRole::from_label(&raw))
    }
}

/// Half-open token span `[start, end)` carrying one role.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct RoleSpan {
    pub role: SrlRole,
    pub start: usize,
    pub end: usize,
}

impl RoleSpan {
    pub fn new(role: SrlRole, start: usize, end: usize) -> Self {
        RoleSpan { role, start, end }
    }

    pub fn len(&self) -> usize {
        self.end - self.start
    }

    pub fn is_empty(&self) -> bool {
        self.end <= self.start
    }

    pub fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }

    pub fn overlaps(&self, other: &RoleSpan) -> bool {
        self.start < other.end && other.start < self.end
    }
}

/// One predicate and its arguments, in document order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct VerbFrame {
    pub verb_index: usize,
    pub roles: Vec<RoleSpan>,
}

impl VerbFrame {
    pub fn role_labels(&self) -> Vec<SrlRole> {
        self.roles.iter().map(|span| span.role.clone()).collect()
    }

    pub fn span_of(&self, role: &SrlRole) -> Option<&RoleSpan> {
        self.roles.iter().find(|span| &span.role == role)
    }
}

/// A video segment description with its SRL frames.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotatedDescription {
    pub video_id: String,
    pub segment_id: String,
    pub tokens: Vec<Token>,
    pub frames: Vec<VerbFrame>,
    #[serde(default)]
    pub coref_applied: bool,
}

/// Element of a query expression: a word or the single masked slot.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum QueryToken {
    Placeholder { placeholder: SrlRole },
    Word(Token),
}

impl QueryToken {
    pub fn is_placeholder(&self) -> bool {
        matches!(self, QueryToken::Placeholder { .. })
    }

    pub fn surface(&self) -> String {
        match self {
            QueryToken::Placeholder { placeholder } => placeholder.placeholder(),
            QueryToken::Word(token) => token.surface.clone(),
        }
    }
}

/// A fill-in-the-phrase query with its gold answer.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryRecord {
    pub query_id: String,
    pub video_id: String,
    pub segment_id: String,
    pub frame_index: usize,
    pub masked_role: SrlRole,
    pub query_tokens: Vec<QueryToken>,
    pub answer_tokens: Vec<Token>,
}

impl QueryRecord {
    /// Canonical id `{segment_id}:{frame_index}:{role}`.
    pub fn make_id(segment_id: &str, frame_index: usize, role: &SrlRole) -> String {
        format!("{segment_id}:{frame_index}:{role}")
    }

    /// Query text with the placeholder rendered as `<Q-ROLE>`.
    pub fn display_query(&self) -> String {
        self.query_tokens
            .iter()
            .map(QueryToken::surface)
            .collect::<Vec<_>>()
            .join(" ")
    }

    pub fn answer_text(&self) -> String {
        join_surfaces(&self.answer_tokens)
    }

    /// Q(A_gt): the full reference sentence.
    pub fn reference(&self) -> Vec<Token> {
        render(self, &self.answer_tokens)
    }

    /// Q(""): the query with the placeholder deleted.
    pub fn base(&self) -> Vec<Token> {
        render(self, &[])
    }
}

/// Replaces the placeholder of `query` with `filler`. An empty filler deletes
/// the placeholder without leaving a gap token.
pub fn render(query: &QueryRecord, filler: &[Token]) -> Vec<Token> {
    let mut out = Vec::with_capacity(query.query_tokens.len() + filler.len());
    for item in &query.query_tokens {
        match item {
            QueryToken::Placeholder { .. } => out.extend_from_slice(filler),
            QueryToken::Word(token) => out.push(token.clone()),
        }
    }
    out
}

pub fn join_surfaces(tokens: &[Token]) -> String {
    tokens
        .iter()
        .map(|t| t.surface.as_str())
        .collect::<Vec<_>>()
        .join(" ")
}

/// Contrastive partner linkage: `query_id_j` is the partner used when
/// scoring `query_id_i`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ContrastivePair {
    pub query_id_i: String,
    pub query_id_j: String,
}

/// A predicted answer phrase. Empty text is the empty-string baseline.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub query_id: String,
    pub answer_text: String,
}

/// Per (query, metric) scores.
///
/// `contrastive` and `consistency` are keyed by the threshold rendered with
/// [`threshold_key`]; both are empty when the query has no usable partner.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreRecord {
    pub query_id: String,
    pub metric: crate::metrics::MetricId,
    pub direct: f64,
    pub relative: f64,
    #[serde(default)]
    pub contrastive: BTreeMap<String, f64>,
    #[serde(default)]
    pub consistency: BTreeMap<String, u8>,
}

/// Stable map key for a threshold value (`0`, `0.1`, ...).
pub fn threshold_key(t: f64) -> String {
    format!("{t}")
}

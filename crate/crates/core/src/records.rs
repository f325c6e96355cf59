//! Line-record interchange: one JSON object per line, keys sorted on output.
//!
//! Readers skip blank lines and report the 1-based line number of the first
//! offending record. Corpus parsing additionally validates span invariants;
//! frames with overlapping spans or duplicated role labels are dropped with
//! a [`ParseWarning`] rather than failing the whole file.

use std::collections::HashSet;
use std::io::{BufRead, Write};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::{Map, Value};
use thiserror::Error;

use crate::model::{AnnotatedDescription, QueryRecord, QueryToken, RoleSpan, SrlRole, Token, VerbFrame};

#[derive(Debug, Error)]
pub enum RecordError {
    #[error("line {line}: field `{field}`: {message}")]
    Schema {
        line: usize,
        field: String,
        message: String,
    },
    #[error("line {line}: duplicate segment_id `{segment_id}`")]
    DuplicateSegment { line: usize, segment_id: String },
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
}

impl RecordError {
    fn schema(line: usize, field: impl Into<String>, message: impl Into<String>) -> Self {
        RecordError::Schema {
            line,
            field: field.into(),
            message: message.into(),
        }
    }
}

/// A frame dropped during parsing.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParseWarning {
    pub line: usize,
    pub segment_id: String,
    pub frame_index: usize,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct ParsedCorpus {
    pub descriptions: Vec<AnnotatedDescription>,
    pub warnings: Vec<ParseWarning>,
}

/// Rebuilds every object with keys in sorted order, independent of how the
/// `serde_json` map type is configured.
fn canonicalize(value: Value) -> Value {
    match value {
        Value::Object(map) => {
            let mut entries: Vec<(String, Value)> = map.into_iter().collect();
            entries.sort_by(|a, b| a.0.cmp(&b.0));
            let mut sorted = Map::new();
            for (k, v) in entries {
                sorted.insert(k, canonicalize(v));
            }
            Value::Object(sorted)
        }
        Value::Array(items) => Value::Array(items.into_iter().map(canonicalize).collect()),
        other => other,
    }
}

/// Serializes one record as a single canonical line (no trailing newline).
pub fn to_canonical_line<T: Serialize>(record: &T) -> String {
    let value = serde_json::to_value(record).expect("record types serialize to JSON");
    serde_json::to_string(&canonicalize(value)).expect("JSON values serialize")
}

pub fn write_records<T: Serialize, W: Write>(mut out: W, records: &[T]) -> std::io::Result<()> {
    for record in records {
        out.write_all(to_canonical_line(record).as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_canonical_string<T: Serialize>(records: &[T]) -> String {
    let mut buf = Vec::new();
    write_records(&mut buf, records).expect("writing to a Vec cannot fail");
    String::from_utf8(buf).expect("JSON output is UTF-8")
}

/// Generic reader for pairs, predictions and score records.
pub fn read_records<T: DeserializeOwned, R: BufRead>(reader: R) -> Result<Vec<T>, RecordError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let record = serde_json::from_str(&line)
            .map_err(|e| RecordError::schema(idx + 1, "<record>", e.to_string()))?;
        out.push(record);
    }
    Ok(out)
}

/// Reads query records and checks the single-placeholder invariant.
pub fn read_queries<R: BufRead>(reader: R) -> Result<Vec<QueryRecord>, RecordError> {
    let mut out = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let mut query: QueryRecord = serde_json::from_str(&line)
            .map_err(|e| RecordError::schema(lineno, "<record>", e.to_string()))?;
        for token in query.answer_tokens.iter_mut() {
            normalize_token(token);
        }
        for item in query.query_tokens.iter_mut() {
            if let QueryToken::Word(token) = item {
                normalize_token(token);
            }
        }
        validate_query(&query).map_err(|(field, msg)| RecordError::schema(lineno, field, msg))?;
        out.push(query);
    }
    Ok(out)
}

pub fn validate_query(query: &QueryRecord) -> Result<(), (String, String)> {
    let placeholders: Vec<&SrlRole> = query
        .query_tokens
        .iter()
        .filter_map(|t| match t {
            QueryToken::Placeholder { placeholder } => Some(placeholder),
            QueryToken::Word(_) => None,
        })
        .collect();
    if placeholders.len() != 1 {
        return Err((
            "query_tokens".into(),
            format!("expected exactly one placeholder, found {}", placeholders.len()),
        ));
    }
    if placeholders[0] != &query.masked_role {
        return Err((
            "masked_role".into(),
            format!(
                "placeholder role {} differs from masked_role {}",
                placeholders[0], query.masked_role
            ),
        ));
    }
    if query.masked_role.is_other() {
        return Err((
            "masked_role".into(),
            format!("role {} is outside the considered set", query.masked_role),
        ));
    }
    if query.answer_tokens.is_empty() {
        return Err(("answer_tokens".into(), "answer phrase is empty".into()));
    }
    Ok(())
}

fn normalize_token(token: &mut Token) {
    token.surface = token.surface.to_lowercase();
    token.lemma = token.lemma.to_lowercase();
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct RawFrame {
    verb_index: usize,
    roles: Vec<RoleSpan>,
}

fn take_field<T: DeserializeOwned>(
    map: &mut Map<String, Value>,
    key: &str,
    line: usize,
) -> Result<T, RecordError> {
    let value = map
        .remove(key)
        .ok_or_else(|| RecordError::schema(line, key, "missing"))?;
    serde_json::from_value(value).map_err(|e| RecordError::schema(line, key, e.to_string()))
}

/// Parses a description corpus. An empty input yields an empty corpus.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<ParsedCorpus, RecordError> {
    let mut parsed = ParsedCorpus::default();
    let mut seen_segments = HashSet::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let lineno = idx + 1;
        let desc = parse_description_line(&line, lineno, &mut parsed.warnings)?;
        if !seen_segments.insert(desc.segment_id.clone()) {
            return Err(RecordError::DuplicateSegment {
                line: lineno,
                segment_id: desc.segment_id,
            });
        }
        parsed.descriptions.push(desc);
    }
    Ok(parsed)
}

pub fn parse_corpus_str(text: &str) -> Result<ParsedCorpus, RecordError> {
    parse_corpus(text.as_bytes())
}

fn parse_description_line(
    line: &str,
    lineno: usize,
    warnings: &mut Vec<ParseWarning>,
) -> Result<AnnotatedDescription, RecordError> {
    let value: Value = serde_json::from_str(line)
        .map_err(|e| RecordError::schema(lineno, "<record>", e.to_string()))?;
    let Value::Object(mut map) = value else {
        return Err(RecordError::schema(lineno, "<record>", "expected a JSON object"));
    };
    let video_id: String = take_field(&mut map, "video_id", lineno)?;
    let segment_id: String = take_field(&mut map, "segment_id", lineno)?;
    let mut tokens: Vec<Token> = take_field(&mut map, "tokens", lineno)?;
    let raw_frames: Vec<RawFrame> = take_field(&mut map, "frames", lineno)?;
    let coref_applied = match map.remove("coref_applied") {
        None => false,
        Some(v) => serde_json::from_value(v)
            .map_err(|e| RecordError::schema(lineno, "coref_applied", e.to_string()))?,
    };
    if let Some(extra) = map.keys().next() {
        return Err(RecordError::schema(lineno, extra.as_str(), "unknown field"));
    }
    if video_id.is_empty() {
        return Err(RecordError::schema(lineno, "video_id", "empty"));
    }
    if segment_id.is_empty() {
        return Err(RecordError::schema(lineno, "segment_id", "empty"));
    }

    for (k, token) in tokens.iter_mut().enumerate() {
        normalize_token(token);
        if token.surface.is_empty() {
            return Err(RecordError::schema(lineno, format!("tokens[{k}].surface"), "empty"));
        }
        if token.surface.chars().any(char::is_whitespace) {
            return Err(RecordError::schema(
                lineno,
                format!("tokens[{k}].surface"),
                "contains whitespace",
            ));
        }
        if token.lemma.is_empty() {
            return Err(RecordError::schema(lineno, format!("tokens[{k}].lemma"), "empty"));
        }
    }

    let mut frames = Vec::with_capacity(raw_frames.len());
    for (i, raw) in raw_frames.into_iter().enumerate() {
        let n = tokens.len();
        if raw.verb_index >= n {
            return Err(RecordError::schema(
                lineno,
                format!("frames[{i}].verb_index"),
                format!("index {} outside {n} tokens", raw.verb_index),
            ));
        }
        for (k, span) in raw.roles.iter().enumerate() {
            if span.start >= span.end || span.end > n {
                return Err(RecordError::schema(
                    lineno,
                    format!("frames[{i}].roles[{k}]"),
                    format!(
                        "span [{}, {}) invalid for {n} tokens",
                        span.start, span.end
                    ),
                ));
            }
        }
        let verbs: Vec<&RoleSpan> = raw.roles.iter().filter(|s| s.role == SrlRole::V).collect();
        if verbs.len() != 1 {
            return Err(RecordError::schema(
                lineno,
                format!("frames[{i}].roles"),
                format!("expected exactly one V span, found {}", verbs.len()),
            ));
        }
        let v = verbs[0];
        if v.len() != 1 || v.start != raw.verb_index {
            return Err(RecordError::schema(
                lineno,
                format!("frames[{i}].roles"),
                format!(
                    "V span [{}, {}) must cover exactly verb_index {}",
                    v.start, v.end, raw.verb_index
                ),
            ));
        }

        let mut roles = raw.roles;
        roles.sort_by_key(|s| (s.start, s.end));
        if let Some(reason) = frame_rejection(&roles) {
            log::warn!("line {lineno}: dropping frame {i} of {segment_id}: {reason}");
            warnings.push(ParseWarning {
                line: lineno,
                segment_id: segment_id.clone(),
                frame_index: i,
                reason,
            });
            continue;
        }
        frames.push(VerbFrame {
            verb_index: raw.verb_index,
            roles,
        });
    }

    Ok(AnnotatedDescription {
        video_id,
        segment_id,
        tokens,
        frames,
        coref_applied,
    })
}

/// Overlap and duplicate-label checks on spans sorted by start.
fn frame_rejection(roles: &[RoleSpan]) -> Option<String> {
    for pair in roles.windows(2) {
        if pair[0].overlaps(&pair[1]) {
            return Some(format!(
                "overlapping spans {} [{}, {}) and {} [{}, {})",
                pair[0].role, pair[0].start, pair[0].end, pair[1].role, pair[1].start, pair[1].end
            ));
        }
    }
    let mut labels = HashSet::new();
    for span in roles {
        if !labels.insert(&span.role) {
            return Some(format!("duplicate role label {}", span.role));
        }
    }
    None
}

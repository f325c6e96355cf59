//! Lemma-keyed index for contrastive partner retrieval.
//!
//! Two queries are interchangeable questions when they share the restricted
//! role structure, the masked role and the multiset of noun/verb lemmas of
//! the unmasked roles. A partner must additionally come from another video
//! and have an answer whose key lemmas are disjoint from the query's.

use std::collections::{BTreeMap, BTreeSet, HashMap};

use serde::{Deserialize, Serialize};

use crate::model::{AnnotatedDescription, CoarsePos, ContrastivePair, QueryRecord, SrlRole};
use crate::querygen::{restrict_frame, QueryGenConfig};

#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct QuerySignature {
    pub structure: Vec<SrlRole>,
    pub masked_role: SrlRole,
    /// Sorted multiset of (lemma, pos) over NOUN/VERB tokens of unmasked roles.
    pub question_lemmas: Vec<(String, CoarsePos)>,
    pub answer_key_lemmas: BTreeSet<String>,
}

/// Everything except the answer lemmas; postings are grouped by this.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct IndexKey {
    pub structure: Vec<SrlRole>,
    pub masked_role: SrlRole,
    pub question_lemmas: Vec<(String, CoarsePos)>,
}

impl QuerySignature {
    pub fn key(&self) -> IndexKey {
        IndexKey {
            structure: self.structure.clone(),
            masked_role: self.masked_role.clone(),
            question_lemmas: self.question_lemmas.clone(),
        }
    }
}

/// Why a query could not be placed in the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Unindexable {
    NoAnswerKey { query_id: String, wanted: CoarsePos },
    MissingSource { query_id: String },
}

impl std::fmt::Display for Unindexable {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Unindexable::NoAnswerKey { query_id, wanted } => {
                write!(f, "{query_id}: answer has no {wanted} lemma")
            }
            Unindexable::MissingSource { query_id } => {
                write!(f, "{query_id}: source frame not found")
            }
        }
    }
}

pub fn signature(
    query: &QueryRecord,
    source: &AnnotatedDescription,
    cfg: &QueryGenConfig,
) -> Result<QuerySignature, Unindexable> {
    let Some(frame) = source.frames.get(query.frame_index) else {
        return Err(Unindexable::MissingSource {
            query_id: query.query_id.clone(),
        });
    };
    let restricted = restrict_frame(frame, cfg);
    let mut question_lemmas = Vec::new();
    for span in restricted.roles.iter().filter(|s| s.role != query.masked_role) {
        for token in &source.tokens[span.start..span.end] {
            if matches!(token.pos, CoarsePos::Noun | CoarsePos::Verb) {
                question_lemmas.push((token.lemma.clone(), token.pos));
            }
        }
    }
    question_lemmas.sort();

    let wanted = if query.masked_role == SrlRole::V {
        CoarsePos::Verb
    } else {
        CoarsePos::Noun
    };
    let answer_key_lemmas: BTreeSet<String> = query
        .answer_tokens
        .iter()
        .filter(|t| t.pos == wanted)
        .map(|t| t.lemma.clone())
        .collect();
    if answer_key_lemmas.is_empty() {
        return Err(Unindexable::NoAnswerKey {
            query_id: query.query_id.clone(),
            wanted,
        });
    }
    Ok(QuerySignature {
        structure: restricted.role_labels(),
        masked_role: query.masked_role.clone(),
        question_lemmas,
        answer_key_lemmas,
    })
}

/// A query as seen by the index.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct IndexedQuery {
    pub query_id: String,
    pub video_id: String,
    pub signature: QuerySignature,
}

impl IndexedQuery {
    pub fn new(query: &QueryRecord, signature: QuerySignature) -> Self {
        IndexedQuery {
            query_id: query.query_id.clone(),
            video_id: query.video_id.clone(),
            signature,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct Posting {
    query_id: String,
    video_id: String,
    answer_key_lemmas: BTreeSet<String>,
}

/// Immutable once built; lookups are read-only.
#[derive(Debug, Default, Clone)]
pub struct ContrastiveIndex {
    postings: HashMap<IndexKey, Vec<Posting>>,
}

pub fn build_index<'a>(entries: impl IntoIterator<Item = &'a IndexedQuery>) -> ContrastiveIndex {
    let mut postings: HashMap<IndexKey, Vec<Posting>> = HashMap::new();
    for entry in entries {
        postings.entry(entry.signature.key()).or_default().push(Posting {
            query_id: entry.query_id.clone(),
            video_id: entry.video_id.clone(),
            answer_key_lemmas: entry.signature.answer_key_lemmas.clone(),
        });
    }
    for list in postings.values_mut() {
        list.sort_by(|a, b| a.query_id.cmp(&b.query_id));
        list.dedup_by(|a, b| a.query_id == b.query_id);
    }
    ContrastiveIndex { postings }
}

impl ContrastiveIndex {
    pub fn is_empty(&self) -> bool {
        self.postings.is_empty()
    }

    /// Number of distinct keys.
    pub fn len(&self) -> usize {
        self.postings.len()
    }

    /// Query ids sharing `key`, sorted.
    pub fn posting_ids(&self, key: &IndexKey) -> Vec<&str> {
        self.postings
            .get(key)
            .map(|list| list.iter().map(|p| p.query_id.as_str()).collect())
            .unwrap_or_default()
    }

    /// All groups as sorted id lists, ordered by their first id.
    pub fn groups(&self) -> Vec<Vec<String>> {
        let mut groups: Vec<Vec<String>> = self
            .postings
            .values()
            .map(|list| list.iter().map(|p| p.query_id.clone()).collect())
            .collect();
        groups.sort();
        groups
    }

    /// Smallest query id in the same posting list from another video whose
    /// answer key lemmas are disjoint from `query`'s.
    pub fn find_partner(&self, query: &IndexedQuery) -> Option<&str> {
        let list = self.postings.get(&query.signature.key())?;
        list.iter()
            .find(|p| {
                p.query_id != query.query_id
                    && p.video_id != query.video_id
                    && p.answer_key_lemmas.is_disjoint(&query.signature.answer_key_lemmas)
            })
            .map(|p| p.query_id.as_str())
    }
}

/// Result of pairing the evaluation pool.
#[derive(Debug, Clone, Default)]
pub struct PoolPairing {
    pub pairs: Vec<ContrastivePair>,
    pub val_kept: Vec<String>,
    pub test_kept: Vec<String>,
    /// (query_id, reason) for every query removed from val or test.
    pub dropped: Vec<(String, String)>,
}

/// Pairs every indexable query against the union of both splits and drops
/// the ones left without a partner. Inputs are `(query, signature result)`.
pub fn pair_eval_pool(
    val: &[(QueryRecord, Result<QuerySignature, Unindexable>)],
    test: &[(QueryRecord, Result<QuerySignature, Unindexable>)],
) -> PoolPairing {
    let mut pairing = PoolPairing::default();
    let indexed: Vec<(bool, IndexedQuery)> = val
        .iter()
        .map(|e| (true, e))
        .chain(test.iter().map(|e| (false, e)))
        .filter_map(|(is_val, (query, sig))| match sig {
            Ok(sig) => Some((is_val, IndexedQuery::new(query, sig.clone()))),
            Err(reason) => {
                pairing
                    .dropped
                    .push((query.query_id.clone(), format!("unindexable: {reason}")));
                None
            }
        })
        .collect();
    let index = build_index(indexed.iter().map(|(_, q)| q));
    for (is_val, query) in &indexed {
        match index.find_partner(query) {
            Some(partner) => {
                pairing.pairs.push(ContrastivePair {
                    query_id_i: query.query_id.clone(),
                    query_id_j: partner.to_string(),
                });
                if *is_val {
                    pairing.val_kept.push(query.query_id.clone());
                } else {
                    pairing.test_kept.push(query.query_id.clone());
                }
            }
            None => pairing
                .dropped
                .push((query.query_id.clone(), "no contrastive sample".to_string())),
        }
    }
    pairing.pairs.sort();
    pairing.dropped.sort();
    pairing
}

/// Pairs queries within a single pool without filtering (used for train).
pub fn pair_within(entries: &[IndexedQuery]) -> Vec<ContrastivePair> {
    let index = build_index(entries);
    let mut pairs: Vec<ContrastivePair> = entries
        .iter()
        .filter_map(|q| {
            index.find_partner(q).map(|p| ContrastivePair {
                query_id_i: q.query_id.clone(),
                query_id_j: p.to_string(),
            })
        })
        .collect();
    pairs.sort();
    pairs
}

/// Independent re-check of the five pair constraints.
pub fn pair_violations(a: &IndexedQuery, b: &IndexedQuery) -> Vec<&'static str> {
    let mut out = Vec::new();
    if a.signature.structure != b.signature.structure {
        out.push("structure differs");
    }
    if a.signature.masked_role != b.signature.masked_role {
        out.push("masked role differs");
    }
    if a.signature.question_lemmas != b.signature.question_lemmas {
        out.push("question lemmas differ");
    }
    if !a
        .signature
        .answer_key_lemmas
        .is_disjoint(&b.signature.answer_key_lemmas)
    {
        out.push("answer lemmas overlap");
    }
    if a.video_id == b.video_id {
        out.push("same video");
    }
    out
}

/// Group sizes keyed by masked role, for audit statistics.
pub fn role_histogram(entries: &[IndexedQuery]) -> BTreeMap<SrlRole, usize> {
    let mut out = BTreeMap::new();
    for e in entries {
        *out.entry(e.signature.masked_role.clone()).or_insert(0) += 1;
    }
    out
}

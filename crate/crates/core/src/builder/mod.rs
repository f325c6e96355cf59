//! Dataset construction: coref substitution, one description per video,
//! query generation per split and contrastive filtering of val/test.

mod coref;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::io::BufRead;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::contrastive::{pair_eval_pool, pair_within, signature, IndexedQuery};
use crate::model::{AnnotatedDescription, ContrastivePair, QueryRecord};
use crate::querygen::{generate_queries, QueryGenConfig};
use crate::records::{read_records, RecordError};

pub use coref::{apply_coref, is_pronoun, representative, CorefCluster, CorefNote, Mention, PRONOUNS, POSSESSIVE_MARKER};

#[derive(Debug, Error)]
pub enum BuildError {
    #[error("{} videos are not assigned to a split: {}", .0.len(), .0.join(", "))]
    UnassignedVideos(Vec<String>),
    #[error("video `{video_id}` is listed in both {first} and {second}")]
    OverlappingSplits {
        video_id: String,
        first: String,
        second: String,
    },
    #[error("manifest line {line}: unknown split `{name}` (expected train, val, test or eval)")]
    UnknownSplit { line: usize, name: String },
    #[error(transparent)]
    Record(#[from] RecordError),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Val,
    Test,
}

impl Split {
    pub fn name(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Val => "val",
            Split::Test => "test",
        }
    }
}

#[derive(Debug, Clone, Deserialize)]
struct ManifestLine {
    split: String,
    video_ids: Vec<String>,
}

/// Video → split assignment.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct SplitManifest {
    assignment: BTreeMap<String, Split>,
}

impl SplitManifest {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, video_id: impl Into<String>, split: Split) -> Result<(), BuildError> {
        let video_id = video_id.into();
        match self.assignment.get(&video_id) {
            Some(prev) if *prev != split => Err(BuildError::OverlappingSplits {
                video_id,
                first: prev.name().into(),
                second: split.name().into(),
            }),
            _ => {
                self.assignment.insert(video_id, split);
                Ok(())
            }
        }
    }

    pub fn split_of(&self, video_id: &str) -> Option<Split> {
        self.assignment.get(video_id).copied()
    }

    pub fn videos(&self, split: Split) -> Vec<&str> {
        self.assignment
            .iter()
            .filter(|(_, s)| **s == split)
            .map(|(v, _)| v.as_str())
            .collect()
    }

    /// Reads lines `{"split": "...", "video_ids": [...]}`. An `eval` split
    /// is halved by video name: sorted lexicographically, even positions go
    /// to val and odd positions to test.
    pub fn read<R: BufRead>(reader: R) -> Result<Self, BuildError> {
        let lines: Vec<ManifestLine> = read_records(reader)?;
        let mut manifest = SplitManifest::new();
        for (i, line) in lines.into_iter().enumerate() {
            match line.split.as_str() {
                "train" | "val" | "test" => {
                    let split = match line.split.as_str() {
                        "train" => Split::Train,
                        "val" => Split::Val,
                        _ => Split::Test,
                    };
                    for v in line.video_ids {
                        manifest.assign(v, split)?;
                    }
                }
                "eval" => {
                    let ids: BTreeSet<String> = line.video_ids.into_iter().collect();
                    for (k, v) in ids.into_iter().enumerate() {
                        manifest.assign(v, if k % 2 == 0 { Split::Val } else { Split::Test })?;
                    }
                }
                other => {
                    return Err(BuildError::UnknownSplit {
                        line: i + 1,
                        name: other.into(),
                    })
                }
            }
        }
        Ok(manifest)
    }
}

/// Keeps the description with the smallest segment_id of every video; output
/// sorted by segment_id.
pub fn select_descriptions(corpus: &[AnnotatedDescription]) -> Vec<AnnotatedDescription> {
    let mut best: BTreeMap<&str, &AnnotatedDescription> = BTreeMap::new();
    for d in corpus {
        best.entry(d.video_id.as_str())
            .and_modify(|cur| {
                if d.segment_id < cur.segment_id {
                    *cur = d;
                }
            })
            .or_insert(d);
    }
    let mut out: Vec<AnnotatedDescription> = best.into_values().cloned().collect();
    out.sort_by(|a, b| a.segment_id.cmp(&b.segment_id));
    out
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AuditEntry {
    pub stage: String,
    pub id: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitStats {
    pub videos: usize,
    pub descriptions: usize,
    pub generated: usize,
    pub kept: usize,
    pub per_role: BTreeMap<String, usize>,
}

#[derive(Debug, Clone, Default)]
pub struct BuildOptions {
    /// Also pair train queries within train (reported only; train is never
    /// filtered).
    pub pair_train: bool,
}

#[derive(Debug, Clone, Default)]
pub struct Dataset {
    pub train: Vec<QueryRecord>,
    pub val: Vec<QueryRecord>,
    pub test: Vec<QueryRecord>,
    pub pairs: Vec<ContrastivePair>,
    pub train_pairs: Option<Vec<ContrastivePair>>,
    /// The selected, coref-substituted descriptions queries come from.
    pub descriptions: Vec<AnnotatedDescription>,
    pub audit: Vec<AuditEntry>,
    pub stats: BTreeMap<String, SplitStats>,
}

impl Dataset {
    pub fn split(&self, split: Split) -> &[QueryRecord] {
        match split {
            Split::Train => &self.train,
            Split::Val => &self.val,
            Split::Test => &self.test,
        }
    }
}

pub fn build_dataset(
    corpus: &[AnnotatedDescription],
    clusters: &[CorefCluster],
    cfg: &QueryGenConfig,
    manifest: &SplitManifest,
    options: &BuildOptions,
) -> Result<Dataset, BuildError> {
    let unassigned: BTreeSet<&str> = corpus
        .iter()
        .filter(|d| manifest.split_of(&d.video_id).is_none())
        .map(|d| d.video_id.as_str())
        .collect();
    if !unassigned.is_empty() {
        return Err(BuildError::UnassignedVideos(
            unassigned.into_iter().map(String::from).collect(),
        ));
    }

    let mut data = Dataset::default();
    let (resolved, notes) = apply_coref(corpus, clusters);
    for n in notes {
        data.audit.push(AuditEntry {
            stage: "coref".into(),
            id: match n.index {
                Some(i) => format!("{}@{i}", n.segment_id),
                None => n.segment_id,
            },
            reason: n.reason,
        });
    }
    let selected = select_descriptions(&resolved);
    let selected_ids: BTreeSet<&str> = selected.iter().map(|d| d.segment_id.as_str()).collect();
    for d in &resolved {
        if !selected_ids.contains(d.segment_id.as_str()) {
            data.audit.push(AuditEntry {
                stage: "select".into(),
                id: d.segment_id.clone(),
                reason: format!("video {} already has a description", d.video_id),
            });
        }
    }

    let generated: Vec<Vec<QueryRecord>> = selected.par_iter().map(|d| generate_queries(d, cfg)).collect();
    let mut per_split: BTreeMap<Split, Vec<QueryRecord>> = BTreeMap::new();
    for (d, queries) in selected.iter().zip(generated) {
        let split = manifest.split_of(&d.video_id).expect("checked above");
        let stats = data.stats.entry(split.name().to_string()).or_default();
        stats.videos += 1;
        stats.descriptions += 1;
        stats.generated += queries.len();
        if queries.is_empty() {
            data.audit.push(AuditEntry {
                stage: "querygen".into(),
                id: d.segment_id.clone(),
                reason: "no eligible frame".into(),
            });
        }
        per_split.entry(split).or_default().extend(queries);
    }
    for split in [Split::Train, Split::Val, Split::Test] {
        data.stats.entry(split.name().to_string()).or_default();
    }

    let source: HashMap<&str, &AnnotatedDescription> =
        selected.iter().map(|d| (d.segment_id.as_str(), d)).collect();
    let signed = |queries: Vec<QueryRecord>| {
        queries
            .into_iter()
            .map(|q| {
                let sig = signature(&q, source[q.segment_id.as_str()], cfg);
                (q, sig)
            })
            .collect::<Vec<_>>()
    };
    let train = per_split.remove(&Split::Train).unwrap_or_default();
    let val = signed(per_split.remove(&Split::Val).unwrap_or_default());
    let test = signed(per_split.remove(&Split::Test).unwrap_or_default());

    let pairing = pair_eval_pool(&val, &test);
    for (id, reason) in &pairing.dropped {
        data.audit.push(AuditEntry {
            stage: "pairing".into(),
            id: id.clone(),
            reason: reason.clone(),
        });
    }
    let keep = |entries: Vec<(QueryRecord, _)>, kept: &[String]| {
        let kept: BTreeSet<&str> = kept.iter().map(String::as_str).collect();
        entries
            .into_iter()
            .map(|(q, _)| q)
            .filter(|q| kept.contains(q.query_id.as_str()))
            .collect::<Vec<_>>()
    };
    data.val = keep(val, &pairing.val_kept);
    data.test = keep(test, &pairing.test_kept);
    data.pairs = pairing.pairs;

    if options.pair_train {
        let entries: Vec<IndexedQuery> = train
            .iter()
            .filter_map(|q| {
                signature(q, source[q.segment_id.as_str()], cfg)
                    .ok()
                    .map(|s| IndexedQuery::new(q, s))
            })
            .collect();
        data.train_pairs = Some(pair_within(&entries));
    }
    data.train = train;

    for split in [Split::Train, Split::Val, Split::Test] {
        let queries = match split {
            Split::Train => &data.train,
            Split::Val => &data.val,
            Split::Test => &data.test,
        };
        let stats = data.stats.get_mut(split.name()).expect("inserted above");
        stats.kept = queries.len();
        for q in queries {
            *stats.per_role.entry(q.masked_role.label().to_string()).or_insert(0) += 1;
        }
    }
    data.descriptions = selected;
    Ok(data)
}

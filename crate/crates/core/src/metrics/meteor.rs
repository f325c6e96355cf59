//! METEOR-lite: unigram alignment on exact surface or exact lemma, with the
//! standard METEOR parameterized F-mean and fragmentation penalty.
//!
//! The alignment maximizes the number of matched tokens and, among maximal
//! alignments, minimizes the number of chunks (runs contiguous in both
//! sentences). There are no stem, synonym or paraphrase stages.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::MetricError;
use crate::model::Token;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MeteorParams {
    pub alpha: f64,
    pub gamma: f64,
    pub beta: f64,
}

impl Default for MeteorParams {
    fn default() -> Self {
        MeteorParams {
            alpha: 0.9,
            gamma: 0.5,
            beta: 3.0,
        }
    }
}

/// Above this many memo states the search falls back to a greedy alignment.
const MEMO_LIMIT: usize = 1 << 18;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Alignment {
    pub matches: usize,
    pub chunks: usize,
}

fn tokens_match(a: &Token, b: &Token) -> bool {
    a.surface == b.surface || a.lemma == b.lemma
}

pub fn meteor_lite(
    reference: &[Token],
    hypothesis: &[Token],
    params: &MeteorParams,
) -> Result<f64, MetricError> {
    if reference.is_empty() {
        return Err(MetricError::EmptyReference);
    }
    if hypothesis.is_empty() {
        return Ok(0.0);
    }
    let Alignment { matches, chunks } = align(reference, hypothesis);
    if matches == 0 {
        return Ok(0.0);
    }
    let m = matches as f64;
    let precision = m / hypothesis.len() as f64;
    let recall = m / reference.len() as f64;
    let fmean =
        precision * recall / (params.alpha * precision + (1.0 - params.alpha) * recall);
    // a complete single-chunk match is not fragmented at all
    let frag = if matches == reference.len() && matches == hypothesis.len() && chunks == 1 {
        0.0
    } else {
        chunks as f64 / m
    };
    let penalty = params.gamma * frag.powf(params.beta);
    Ok(fmean * (1.0 - penalty))
}

/// Maximum-cardinality alignment with the fewest chunks.
pub fn align(reference: &[Token], hypothesis: &[Token]) -> Alignment {
    let edges: Vec<Vec<usize>> = hypothesis
        .iter()
        .map(|h| {
            reference
                .iter()
                .enumerate()
                .filter(|(_, r)| tokens_match(h, r))
                .map(|(j, _)| j)
                .collect()
        })
        .collect();
    let target = max_matching(&edges, reference.len());
    if target == 0 {
        return Alignment {
            matches: 0,
            chunks: 0,
        };
    }

    // compress candidate reference positions into bit slots
    let mut slot = vec![usize::MAX; reference.len()];
    let mut next = 0;
    for list in &edges {
        for &j in list {
            if slot[j] == usize::MAX {
                slot[j] = next;
                next += 1;
            }
        }
    }
    if next > 128 {
        return greedy(&edges);
    }
    let mut suffix_matchable = vec![0usize; edges.len() + 1];
    for i in (0..edges.len()).rev() {
        suffix_matchable[i] = suffix_matchable[i + 1] + usize::from(!edges[i].is_empty());
    }
    let mut search = ChunkSearch {
        edges: &edges,
        slot: &slot,
        suffix_matchable: &suffix_matchable,
        target,
        memo: HashMap::new(),
        overflow: false,
    };
    match search.best(0, 0, None) {
        Some(chunks) if !search.overflow => Alignment {
            matches: target,
            chunks: chunks as usize,
        },
        _ => greedy(&edges),
    }
}

struct ChunkSearch<'a> {
    edges: &'a [Vec<usize>],
    slot: &'a [usize],
    suffix_matchable: &'a [usize],
    target: usize,
    memo: HashMap<(usize, u128, usize), Option<u32>>,
    overflow: bool,
}

impl ChunkSearch<'_> {
    /// Fewest chunks for hypothesis tokens `i..` given used slots `mask` and
    /// the reference position matched by token `i - 1` (`prev`), such that
    /// the total reaches `target`. `None` if unreachable.
    fn best(&mut self, i: usize, mask: u128, prev: Option<usize>) -> Option<u32> {
        let matched = mask.count_ones() as usize;
        if i == self.edges.len() {
            return (matched == self.target).then_some(0);
        }
        if matched + self.suffix_matchable[i] < self.target {
            return None;
        }
        let key = (i, mask, prev.map_or(usize::MAX, |p| p));
        if let Some(&cached) = self.memo.get(&key) {
            return cached;
        }
        if self.memo.len() >= MEMO_LIMIT {
            self.overflow = true;
            return None;
        }
        let mut best = self.best(i + 1, mask, None);
        for &j in &self.edges[i] {
            let bit = 1u128 << self.slot[j];
            if mask & bit != 0 {
                continue;
            }
            let extends = prev.is_some_and(|p| p + 1 == j);
            if let Some(rest) = self.best(i + 1, mask | bit, Some(j)) {
                let total = rest + u32::from(!extends);
                if best.is_none_or(|b| total < b) {
                    best = Some(total);
                }
            }
        }
        self.memo.insert(key, best);
        best
    }
}

/// Bipartite maximum matching by augmenting paths.
fn max_matching(edges: &[Vec<usize>], right: usize) -> usize {
    fn augment(u: usize, edges: &[Vec<usize>], seen: &mut [bool], owner: &mut [Option<usize>]) -> bool {
        for &v in &edges[u] {
            if seen[v] {
                continue;
            }
            seen[v] = true;
            if owner[v].is_none_or(|w| augment(w, edges, seen, owner)) {
                owner[v] = Some(u);
                return true;
            }
        }
        false
    }
    let mut owner = vec![None; right];
    let mut size = 0;
    for u in 0..edges.len() {
        let mut seen = vec![false; right];
        if augment(u, edges, &mut seen, &mut owner) {
            size += 1;
        }
    }
    size
}

/// Left-to-right alignment preferring chunk continuation.
fn greedy(edges: &[Vec<usize>]) -> Alignment {
    let right = edges.iter().flatten().copied().max().map_or(0, |m| m + 1);
    let mut used = vec![false; right];
    let mut prev: Option<usize> = None;
    let mut matches = 0;
    let mut chunks = 0;
    for list in edges {
        let pick = prev
            .map(|p| p + 1)
            .filter(|c| list.contains(c) && !used[*c])
            .or_else(|| list.iter().copied().find(|&j| !used[j]));
        match pick {
            Some(j) => {
                if prev.is_none_or(|p| p + 1 != j) {
                    chunks += 1;
                }
                used[j] = true;
                matches += 1;
                prev = Some(j);
            }
            None => prev = None,
        }
    }
    Alignment { matches, chunks }
}

//! Pronoun substitution from coreference clusters.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::model::{AnnotatedDescription, CoarsePos, RoleSpan, Token, VerbFrame};

pub const PRONOUNS: [&str; 6] = ["they", "he", "she", "his", "her", "it"];

pub const POSSESSIVE_MARKER: &str = "'s";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Mention {
    pub segment_id: String,
    pub start: usize,
    pub end: usize,
}

impl Mention {
    fn contains(&self, index: usize) -> bool {
        self.start <= index && index < self.end
    }
}

/// A coreference chain. Mentions may span several segments of one video.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefCluster {
    pub cluster_id: String,
    pub mentions: Vec<Mention>,
    /// Index into `mentions`; when absent or pronominal the first
    /// non-pronominal mention is used.
    #[serde(default)]
    pub representative: Option<usize>,
}

/// A pronoun left in place, or a cluster without a usable representative.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CorefNote {
    pub segment_id: String,
    pub index: Option<usize>,
    pub reason: String,
}

pub fn is_pronoun(surface: &str) -> bool {
    PRONOUNS.contains(&surface)
}

fn mention_tokens<'a>(m: &Mention, by_segment: &HashMap<&str, &'a AnnotatedDescription>) -> Option<&'a [Token]> {
    let desc = by_segment.get(m.segment_id.as_str())?;
    (m.start < m.end && m.end <= desc.tokens.len()).then(|| &desc.tokens[m.start..m.end])
}

fn is_pronominal(tokens: &[Token]) -> bool {
    tokens.iter().all(|t| is_pronoun(&t.surface))
}

/// Representative mention index of a cluster, if it has a non-pronominal one.
pub fn representative(cluster: &CorefCluster, descriptions: &[AnnotatedDescription]) -> Option<usize> {
    let by_segment: HashMap<&str, &AnnotatedDescription> =
        descriptions.iter().map(|d| (d.segment_id.as_str(), d)).collect();
    representative_in(cluster, &by_segment)
}

fn representative_in(cluster: &CorefCluster, by_segment: &HashMap<&str, &AnnotatedDescription>) -> Option<usize> {
    let usable = |i: usize| {
        cluster
            .mentions
            .get(i)
            .and_then(|m| mention_tokens(m, by_segment))
            .is_some_and(|t| !is_pronominal(t))
    };
    cluster
        .representative
        .filter(|&i| usable(i))
        .or_else(|| (0..cluster.mentions.len()).find(|&i| usable(i)))
}

/// "his" is always possessive; "her" when a noun follows, possibly after one
/// modifier ("her red bag").
fn is_possessive(tokens: &[Token], index: usize) -> bool {
    match tokens[index].surface.as_str() {
        "his" => true,
        "her" => match (tokens.get(index + 1), tokens.get(index + 2)) {
            (Some(a), _) if a.pos == CoarsePos::Noun => true,
            (Some(a), Some(b)) => a.pos == CoarsePos::Other && b.pos == CoarsePos::Noun,
            _ => false,
        },
        _ => false,
    }
}

type Resolvable<'a> = (&'a Mention, usize, Vec<Token>);

/// Replaces pronouns lying inside cluster mentions with the tokens of the
/// cluster's representative; possessives get a trailing `'s`. When a pronoun
/// lies inside several mentions the outermost (widest, then earliest
/// cluster) decides. Verb tokens are never replaced. Role spans are remapped
/// to the new token positions and every description is marked
/// `coref_applied`.
pub fn apply_coref(
    descriptions: &[AnnotatedDescription],
    clusters: &[CorefCluster],
) -> (Vec<AnnotatedDescription>, Vec<CorefNote>) {
    let by_segment: HashMap<&str, &AnnotatedDescription> =
        descriptions.iter().map(|d| (d.segment_id.as_str(), d)).collect();
    let mut notes = Vec::new();

    // per segment: (mention, cluster index, representative tokens)
    let mut mentions: HashMap<&str, Vec<Resolvable<'_>>> = HashMap::new();
    for (ci, cluster) in clusters.iter().enumerate() {
        let Some(rep) = representative_in(cluster, &by_segment) else {
            notes.push(CorefNote {
                segment_id: cluster.mentions.first().map(|m| m.segment_id.clone()).unwrap_or_default(),
                index: None,
                reason: format!("cluster {} has no non-pronominal mention", cluster.cluster_id),
            });
            continue;
        };
        let rep_mention = &cluster.mentions[rep];
        let rep_tokens = mention_tokens(rep_mention, &by_segment).expect("checked").to_vec();
        for (mi, m) in cluster.mentions.iter().enumerate() {
            if mi != rep {
                mentions.entry(m.segment_id.as_str()).or_default().push((m, ci, rep_tokens.clone()));
            }
        }
    }

    let out = descriptions
        .iter()
        .map(|desc| {
            let verbs: Vec<usize> = desc.frames.iter().map(|f| f.verb_index).collect();
            let here = mentions.get(desc.segment_id.as_str()).map(Vec::as_slice).unwrap_or(&[]);
            let mut tokens = Vec::with_capacity(desc.tokens.len());
            // new_pos[i] = position of old token i in the output; new_pos[len] = output length
            let mut new_pos = Vec::with_capacity(desc.tokens.len() + 1);
            for (i, token) in desc.tokens.iter().enumerate() {
                new_pos.push(tokens.len());
                if !is_pronoun(&token.surface) || verbs.contains(&i) {
                    tokens.push(token.clone());
                    continue;
                }
                let outer = here
                    .iter()
                    .filter(|(m, _, _)| m.contains(i))
                    .min_by_key(|(m, ci, _)| (std::cmp::Reverse(m.end - m.start), *ci, m.start));
                match outer {
                    Some((_, _, rep)) => {
                        tokens.extend(rep.iter().cloned());
                        if is_possessive(&desc.tokens, i) {
                            tokens.push(Token::new(POSSESSIVE_MARKER, POSSESSIVE_MARKER, CoarsePos::Other));
                        }
                    }
                    None => {
                        log::debug!("{}: pronoun `{}` at {i} is in no cluster", desc.segment_id, token.surface);
                        notes.push(CorefNote {
                            segment_id: desc.segment_id.clone(),
                            index: Some(i),
                            reason: format!("pronoun `{}` left unresolved", token.surface),
                        });
                        tokens.push(token.clone());
                    }
                }
            }
            new_pos.push(tokens.len());
            let frames = desc
                .frames
                .iter()
                .map(|f| VerbFrame {
                    verb_index: new_pos[f.verb_index],
                    roles: f
                        .roles
                        .iter()
                        .map(|s| RoleSpan::new(s.role.clone(), new_pos[s.start], new_pos[s.end]))
                        .collect(),
                })
                .collect();
            AnnotatedDescription {
                video_id: desc.video_id.clone(),
                segment_id: desc.segment_id.clone(),
                tokens,
                frames,
                coref_applied: true,
            }
        })
        .collect();
    (out, notes)
}

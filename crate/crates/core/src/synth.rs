//! Seeded synthetic corpora and mock embedding stores for tests, benchmarks
//! and offline runs of the embedding metric.

use std::collections::BTreeSet;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use crate::embed::{normalize, EmbedError, EmbeddingBundle, EmbeddingStore, SentenceKey};
use crate::model::{AnnotatedDescription, CoarsePos, RoleSpan, SrlRole, Token, VerbFrame};

type Phrase = &'static [(&'static str, &'static str, CoarsePos)];

use CoarsePos::{Noun as N, Other as O, Verb as V};

const AGENTS: &[Phrase] = &[
    &[("a", "a", O), ("man", "man", N)],
    &[("a", "a", O), ("woman", "woman", N)],
    &[("the", "the", O), ("boy", "boy", N)],
    &[("a", "a", O), ("girl", "girl", N)],
    &[("a", "a", O), ("person", "person", N)],
    &[("the", "the", O), ("men", "man", N)],
];

const VERBS: &[(&str, &str)] = &[
    ("cuts", "cut"),
    ("throws", "throw"),
    ("opens", "open"),
    ("holds", "hold"),
    ("washes", "wash"),
    ("lifts", "lift"),
    ("moves", "move"),
    ("is", "be"),
];

const PATIENTS: &[Phrase] = &[
    &[("a", "a", O), ("box", "box", N)],
    &[("the", "the", O), ("ball", "ball", N)],
    &[("a", "a", O), ("vegetable", "vegetable", N)],
    &[("the", "the", O), ("door", "door", N)],
    &[("a", "a", O), ("pair", "pair", N), ("of", "of", O), ("shoes", "shoe", N)],
    &[("it", "it", O)],
];

const INSTRUMENTS: &[Phrase] = &[
    &[("with", "with", O), ("a", "a", O), ("knife", "knife", N)],
    &[("with", "with", O), ("a", "a", O), ("towel", "towel", N)],
    &[("to", "to", O), ("the", "the", O), ("dog", "dog", N)],
    &[("quickly", "quickly", O)],
];

const PLACES: &[Phrase] = &[
    &[("in", "in", O), ("the", "the", O), ("kitchen", "kitchen", N)],
    &[("on", "on", O), ("the", "the", O), ("table", "table", N)],
    &[("in", "in", O), ("a", "a", O), ("park", "park", N)],
];

const MANNERS: &[Phrase] = &[&[("slowly", "slowly", O)], &[("again", "again", O)]];

fn phrase(p: Phrase) -> Vec<Token> {
    p.iter().map(|(s, l, pos)| Token::new(s, l, *pos)).collect()
}

#[derive(Debug, Clone)]
pub struct SynthConfig {
    pub videos: usize,
    /// Upper bound on segments per video (at least 1).
    pub max_segments: usize,
    pub seed: u64,
}

impl Default for SynthConfig {
    fn default() -> Self {
        SynthConfig {
            videos: 100,
            max_segments: 2,
            seed: 7,
        }
    }
}

/// One single-frame description `ARG0 V ARG1 [ARG2] [MNR] [LOC]`, with
/// optional roles drawn at random so that frames of 2 to 6 roles occur.
fn description(rng: &mut impl Rng, video_id: &str, segment_id: &str) -> AnnotatedDescription {
    let mut tokens = Vec::new();
    let mut roles = Vec::new();
    let mut push = |role: SrlRole, words: Vec<Token>, tokens: &mut Vec<Token>| {
        let start = tokens.len();
        tokens.extend(words);
        roles.push(RoleSpan::new(role, start, tokens.len()));
    };
    if rng.random_bool(0.9) {
        push(SrlRole::Arg0, phrase(AGENTS[rng.random_range(0..AGENTS.len())]), &mut tokens);
    }
    let (surface, lemma) = VERBS[rng.random_range(0..VERBS.len())];
    let verb_index = tokens.len();
    push(SrlRole::V, vec![Token::new(surface, lemma, V)], &mut tokens);
    if rng.random_bool(0.85) {
        push(SrlRole::Arg1, phrase(PATIENTS[rng.random_range(0..PATIENTS.len())]), &mut tokens);
    }
    if rng.random_bool(0.4) {
        push(SrlRole::Arg2, phrase(INSTRUMENTS[rng.random_range(0..INSTRUMENTS.len())]), &mut tokens);
    }
    if rng.random_bool(0.2) {
        push(
            SrlRole::Other("ARGM-MNR".into()),
            phrase(MANNERS[rng.random_range(0..MANNERS.len())]),
            &mut tokens,
        );
    }
    if rng.random_bool(0.4) {
        push(SrlRole::Loc, phrase(PLACES[rng.random_range(0..PLACES.len())]), &mut tokens);
    }
    AnnotatedDescription {
        video_id: video_id.into(),
        segment_id: segment_id.into(),
        tokens,
        frames: vec![VerbFrame { verb_index, roles }],
        coref_applied: false,
    }
}

/// Deterministic corpus: video `v{i:05}` has segments `v{i:05}_{k}`.
pub fn synth_corpus(cfg: &SynthConfig) -> Vec<AnnotatedDescription> {
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let mut out = Vec::new();
    for v in 0..cfg.videos {
        let video = format!("v{v:05}");
        let segments = rng.random_range(1..=cfg.max_segments.max(1));
        for k in 0..segments {
            out.push(description(&mut rng, &video, &format!("{video}_{k}")));
        }
    }
    out
}

fn token_vector(surface: &str, dim: usize) -> Vec<f64> {
    let seed: [u8; 32] = Sha256::digest(surface.as_bytes()).into();
    let mut rng = ChaCha8Rng::from_seed(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

/// Context-mixed unit vectors: each token's vector is its own hash-seeded
/// vector plus a quarter of each neighbour's, normalized.
pub fn mock_vectors(tokens: &[Token], dim: usize) -> Vec<Vec<f32>> {
    let base: Vec<Vec<f64>> = tokens.iter().map(|t| token_vector(&t.surface, dim)).collect();
    (0..tokens.len())
        .map(|i| {
            let mut v = base[i].clone();
            for j in [i.wrapping_sub(1), i + 1] {
                if let Some(n) = base.get(j) {
                    for (x, y) in v.iter_mut().zip(n) {
                        *x += 0.25 * y;
                    }
                }
            }
            normalize(&v)
        })
        .collect()
}

/// Store holding mock vectors for every distinct non-empty sentence.
pub fn mock_store<'a>(
    sentences: impl IntoIterator<Item = &'a [Token]>,
    dim: usize,
    model_tag: &str,
) -> Result<EmbeddingStore, EmbedError> {
    let mut store = EmbeddingStore::new(model_tag, dim);
    let mut seen = BTreeSet::new();
    for s in sentences {
        if s.is_empty() {
            continue;
        }
        let key = SentenceKey::of_tokens(s);
        if seen.insert(key) {
            store.insert(EmbeddingBundle {
                sentence_key: key,
                vectors: mock_vectors(s, dim),
                model_tag: model_tag.into(),
            })?;
        }
    }
    Ok(store)
}

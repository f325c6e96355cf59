#![allow(dead_code)]

pub mod oracle;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use srlqa_core::model::{CoarsePos, Token};

/// Small vocabulary with inflections sharing a lemma, so both METEOR stages
/// and repeated n-grams occur often.
const VOCAB: [(&str, &str, CoarsePos); 12] = [
    ("a", "a", CoarsePos::Other),
    ("the", "the", CoarsePos::Other),
    ("man", "man", CoarsePos::Noun),
    ("men", "man", CoarsePos::Noun),
    ("cuts", "cut", CoarsePos::Verb),
    ("cutting", "cut", CoarsePos::Verb),
    ("cut", "cut", CoarsePos::Verb),
    ("box", "box", CoarsePos::Noun),
    ("boxes", "box", CoarsePos::Noun),
    ("with", "with", CoarsePos::Other),
    ("knife", "knife", CoarsePos::Noun),
    ("in", "in", CoarsePos::Other),
];

pub fn random_sentence(rng: &mut impl Rng, min_len: usize, max_len: usize) -> Vec<Token> {
    let len = rng.random_range(min_len..=max_len);
    let vocab = rng.random_range(3..=VOCAB.len());
    (0..len)
        .map(|_| {
            let (s, l, p) = VOCAB[rng.random_range(0..vocab)];
            Token::new(s, l, p)
        })
        .collect()
}

/// `n` seeded (reference, hypothesis) pairs with lengths 1..=max_len.
pub fn random_pairs(seed: u64, n: usize, max_len: usize) -> Vec<(Vec<Token>, Vec<Token>)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n)
        .map(|_| (random_sentence(&mut rng, 1, max_len), random_sentence(&mut rng, 1, max_len)))
        .collect()
}

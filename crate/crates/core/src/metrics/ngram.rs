use std::collections::BTreeMap;

use crate::model::Token;

/// N-gram key: surfaces joined by a single space. Surfaces never contain
/// whitespace, so the key is unambiguous.
pub fn ngram_key(window: &[Token]) -> String {
    let mut key = String::new();
    for (i, token) in window.iter().enumerate() {
        if i > 0 {
            key.push(' ');
        }
        key.push_str(&token.surface);
    }
    key
}

/// Ordered so that float sums over the counts are reproducible.
pub fn ngram_counts(tokens: &[Token], n: usize) -> BTreeMap<String, usize> {
    let mut counts = BTreeMap::new();
    if n == 0 || tokens.len() < n {
        return counts;
    }
    for window in tokens.windows(n) {
        *counts.entry(ngram_key(window)).or_insert(0) += 1;
    }
    counts
}

/// Number of n-grams in a sequence of `len` tokens.
pub fn ngram_total(len: usize, n: usize) -> usize {
    (len + 1).saturating_sub(n)
}

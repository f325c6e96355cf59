use std::collections::{HashMap, HashSet};

use super::ngram::ngram_key;
use super::MetricError;
use crate::model::Token;

/// Highest n-gram order tracked; covers CIDEr-D's 1..=4.
pub const MAX_IDF_ORDER: usize = 4;

/// Document frequencies of 1..=4-grams over a reference corpus.
///
/// `idf(g) = ln(max(1, N / df(g)))`, and `ln N` for unseen n-grams.
#[derive(Debug, Clone, PartialEq)]
pub struct IdfTable {
    df: HashMap<String, usize>,
    corpus_size: usize,
}

impl IdfTable {
    pub fn corpus_size(&self) -> usize {
        self.corpus_size
    }

    pub fn document_frequency(&self, key: &str) -> usize {
        self.df.get(key).copied().unwrap_or(0)
    }

    pub fn idf(&self, key: &str) -> f64 {
        let n = self.corpus_size as f64;
        match self.document_frequency(key) {
            0 => n.ln(),
            df => (n / df as f64).max(1.0).ln(),
        }
    }

    pub fn idf_tokens(&self, window: &[Token]) -> f64 {
        self.idf(&ngram_key(window))
    }

    /// Number of distinct n-grams with non-zero document frequency.
    pub fn len(&self) -> usize {
        self.df.len()
    }

    pub fn is_empty(&self) -> bool {
        self.df.is_empty()
    }
}

/// Counts each n-gram at most once per sentence.
pub fn build_idf<S: AsRef<[Token]>>(sentences: &[S]) -> Result<IdfTable, MetricError> {
    if sentences.is_empty() {
        return Err(MetricError::EmptyCorpus);
    }
    let mut df: HashMap<String, usize> = HashMap::new();
    for sentence in sentences {
        let tokens = sentence.as_ref();
        let mut seen = HashSet::new();
        for n in 1..=MAX_IDF_ORDER {
            if tokens.len() < n {
                break;
            }
            for window in tokens.windows(n) {
                let key = ngram_key(window);
                if seen.insert(key.clone()) {
                    *df.entry(key).or_insert(0) += 1;
                }
            }
        }
    }
    Ok(IdfTable {
        df,
        corpus_size: sentences.len(),
    })
}

//! Surface → (lemma, POS) lookup used to annotate free-text predictions.

use std::collections::{BTreeMap, HashMap};

use crate::model::{AnnotatedDescription, CoarsePos, QueryRecord, QueryToken, Token};

/// Most frequent analysis per surface form seen in annotated text; ties go
/// to the smallest (lemma, POS).
#[derive(Debug, Clone, Default)]
pub struct Lexicon {
    entries: HashMap<String, (String, CoarsePos)>,
}

impl Lexicon {
    pub fn from_tokens<'a>(tokens: impl IntoIterator<Item = &'a Token>) -> Self {
        let mut counts: HashMap<&str, BTreeMap<(&str, CoarsePos), usize>> = HashMap::new();
        for t in tokens {
            *counts
                .entry(t.surface.as_str())
                .or_default()
                .entry((t.lemma.as_str(), t.pos))
                .or_insert(0) += 1;
        }
        let entries = counts
            .into_iter()
            .map(|(surface, analyses)| {
                let ((lemma, pos), _) = analyses
                    .into_iter()
                    .fold(None::<((&str, CoarsePos), usize)>, |best, (a, c)| match best {
                        Some((_, bc)) if bc >= c => best,
                        _ => Some((a, c)),
                    })
                    .expect("at least one analysis per surface");
                (surface.to_string(), (lemma.to_string(), pos))
            })
            .collect();
        Lexicon { entries }
    }

    pub fn from_queries(queries: &[QueryRecord]) -> Self {
        Self::from_tokens(queries.iter().flat_map(|q| {
            q.answer_tokens.iter().chain(q.query_tokens.iter().filter_map(|t| match t {
                QueryToken::Word(w) => Some(w),
                QueryToken::Placeholder { .. } => None,
            }))
        }))
    }

    pub fn from_descriptions(descs: &[AnnotatedDescription]) -> Self {
        Self::from_tokens(descs.iter().flat_map(|d| d.tokens.iter()))
    }

    pub fn token(&self, surface: &str) -> Token {
        let surface = surface.to_lowercase();
        match self.entries.get(&surface) {
            Some((lemma, pos)) => Token {
                surface,
                lemma: lemma.clone(),
                pos: *pos,
            },
            None => Token::plain(&surface),
        }
    }

    /// Whitespace tokenization plus lexicon annotation.
    pub fn tokenize(&self, text: &str) -> Vec<Token> {
        text.split_whitespace().map(|w| self.token(w)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn annotates_known_words_and_passes_unknown() {
        let toks = [
            Token::new("cutting", "cut", CoarsePos::Verb),
            Token::new("cutting", "cutting", CoarsePos::Noun),
            Token::new("cutting", "cut", CoarsePos::Verb),
        ];
        let lex = Lexicon::from_tokens(toks.iter());
        assert_eq!(lex.token("Cutting"), Token::new("cutting", "cut", CoarsePos::Verb));
        assert_eq!(lex.tokenize("  zebra   cutting "), vec![
            Token::plain("zebra"),
            Token::new("cutting", "cut", CoarsePos::Verb)
        ]);
        assert!(lex.tokenize("").is_empty());
    }

    #[test]
    fn ties_take_smallest_analysis() {
        let toks = [
            Token::new("saw", "see", CoarsePos::Verb),
            Token::new("saw", "saw", CoarsePos::Noun),
        ];
        let lex = Lexicon::from_tokens(toks.iter());
        assert_eq!(lex.token("saw").lemma, "saw");
    }
}

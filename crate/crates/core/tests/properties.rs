use proptest::prelude::*;

use srlqa_core::embed::EmbeddingBundle;
use srlqa_core::embed::SentenceKey;
use srlqa_core::metrics::{build_idf, similarity_from_bundles};
use srlqa_core::model::{render, QueryToken, SrlRole, Token};
use srlqa_core::querygen::{generate_queries, QueryGenConfig};
use srlqa_core::records::{parse_corpus_str, to_canonical_string};
use srlqa_core::scoring::{consistency, contrastive_score};
use srlqa_core::synth::{mock_vectors, synth_corpus, SynthConfig};

fn is_strict_subsequence(needle: &[Token], hay: &[Token]) -> bool {
    let mut it = hay.iter();
    needle.len() < hay.len() && needle.iter().all(|w| it.any(|x| x == w))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn corpus_round_trips(seed in any::<u64>(), videos in 1usize..30) {
        let corpus = synth_corpus(&SynthConfig { videos, max_segments: 3, seed });
        let text = to_canonical_string(&corpus);
        let back = parse_corpus_str(&text).unwrap();
        prop_assert!(back.warnings.is_empty());
        prop_assert_eq!(to_canonical_string(&back.descriptions), text);
    }

    #[test]
    fn queries_render_consistently(seed in any::<u64>(), filler_len in 0usize..4) {
        let cfg = QueryGenConfig::default();
        let corpus = synth_corpus(&SynthConfig { videos: 10, max_segments: 1, seed });
        let filler: Vec<Token> = (0..filler_len).map(|i| Token::plain(&format!("w{i}"))).collect();
        for d in &corpus {
            let queries = generate_queries(d, &cfg);
            let frame = &d.frames[0];
            let restricted: Vec<&SrlRole> = frame
                .roles
                .iter()
                .map(|s| &s.role)
                .filter(|r| cfg.is_considered(r))
                .collect();
            let eligible = restricted.len() >= cfg.min_roles()
                && !cfg.stopword_verb_lemmas().contains(&d.tokens[frame.verb_index].lemma);
            // one query per considered role, none otherwise
            prop_assert_eq!(queries.len(), if eligible { restricted.len() } else { 0 });
            for q in &queries {
                prop_assert_eq!(q.query_tokens.iter().filter(|t| t.is_placeholder()).count(), 1);
                let rendered = render(q, &filler);
                prop_assert_eq!(rendered.len(), q.query_tokens.len() - 1 + filler.len());
                prop_assert!(is_strict_subsequence(&q.base(), &q.reference()));
                prop_assert!(q.query_tokens.iter().all(|t| !matches!(t, QueryToken::Word(w) if w.surface.starts_with("<Q-"))));
            }
        }
    }

    #[test]
    fn contrastive_score_bounds(s_i in -2.0f64..2.0, s_j in -2.0f64..2.0, a in 0.0f64..1.0, b in 0.0f64..1.0) {
        let (lo, hi) = if a <= b { (a, b) } else { (b, a) };
        let cs_lo = contrastive_score(s_i, s_j, 1.0, lo);
        let cs_hi = contrastive_score(s_i, s_j, 1.0, hi);
        prop_assert!(cs_lo >= 0.0);
        prop_assert!(cs_lo <= s_i.max(0.0));
        prop_assert!(cs_hi <= cs_lo);
        prop_assert_eq!(consistency(s_i, s_j, lo), consistency(s_j, s_i, lo));
    }

    #[test]
    fn embed_sim_ignores_token_order(perm_seed in any::<u64>(), len in 1usize..7) {
        let words = ["a", "man", "cuts", "the", "vegetable", "knife", "slowly"];
        let reference: Vec<Token> = words.iter().map(|w| Token::plain(w)).collect();
        let hyp: Vec<Token> = (0..len).map(|i| Token::plain(words[(i * 3 + 1) % words.len()])).collect();
        let idf = build_idf(std::slice::from_ref(&reference)).unwrap();
        let bundle = |tokens: &[Token], vectors: Vec<Vec<f32>>| EmbeddingBundle {
            sentence_key: SentenceKey::of_tokens(tokens),
            vectors,
            model_tag: "m".into(),
        };
        let rb = bundle(&reference, mock_vectors(&reference, 8));
        let hv = mock_vectors(&hyp, 8);
        let base = similarity_from_bundles(&reference, &rb, &hyp, &bundle(&hyp, hv.clone()), &idf, 0.0);

        let mut order: Vec<usize> = (0..len).collect();
        let mut s = perm_seed;
        for i in (1..len).rev() {
            s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
            order.swap(i, (s >> 33) as usize % (i + 1));
        }
        let ph: Vec<Token> = order.iter().map(|&i| hyp[i].clone()).collect();
        let pv: Vec<Vec<f32>> = order.iter().map(|&i| hv[i].clone()).collect();
        let permuted = similarity_from_bundles(&reference, &rb, &ph, &bundle(&ph, pv), &idf, 0.0);
        prop_assert!((base - permuted).abs() < 1e-12, "{} vs {}", base, permuted);
    }
}

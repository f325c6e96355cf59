//! Slow, obviously-correct reference implementations of the lexical metrics.
//! They share no code with the library: n-grams are plain slices, counts are
//! linear scans, LCS is subset enumeration and METEOR alignment is exhaustive
//! branch and bound.

#![allow(dead_code)]

use srlqa_core::model::Token;

fn surfaces(tokens: &[Token]) -> Vec<&str> {
    tokens.iter().map(|t| t.surface.as_str()).collect()
}

fn grams<'a>(words: &[&'a str], n: usize) -> Vec<Vec<&'a str>> {
    if words.len() < n {
        return Vec::new();
    }
    (0..=words.len() - n).map(|i| words[i..i + n].to_vec()).collect()
}

fn count(haystack: &[Vec<&str>], needle: &[&str]) -> usize {
    haystack.iter().filter(|g| g.as_slice() == needle).count()
}

fn distinct<'a>(gs: &[Vec<&'a str>]) -> Vec<Vec<&'a str>> {
    let mut out: Vec<Vec<&str>> = Vec::new();
    for g in gs {
        if !out.contains(g) {
            out.push(g.clone());
        }
    }
    out
}

pub fn bleu2(reference: &[Token], hypothesis: &[Token], eps: f64) -> f64 {
    if hypothesis.is_empty() {
        return 0.0;
    }
    let r = surfaces(reference);
    let h = surfaces(hypothesis);
    let mut logs = Vec::new();
    for n in 1..=2 {
        let hg = grams(&h, n);
        let rg = grams(&r, n);
        if hg.is_empty() && rg.is_empty() {
            continue;
        }
        let p = if hg.is_empty() {
            0.0
        } else {
            let clipped: usize = distinct(&hg)
                .iter()
                .map(|g| count(&hg, g).min(count(&rg, g)))
                .sum();
            clipped as f64 / hg.len() as f64
        };
        logs.push(if p == 0.0 { eps } else { p }.ln());
    }
    let geo = (logs.iter().sum::<f64>() / logs.len() as f64).exp();
    let bp = if h.len() >= r.len() {
        1.0
    } else {
        (1.0 - r.len() as f64 / h.len() as f64).exp()
    };
    bp * geo
}

fn is_subsequence(needle: &[&str], hay: &[&str]) -> bool {
    let mut it = hay.iter();
    needle.iter().all(|w| it.any(|x| x == w))
}

/// LCS length by trying every subset of the hypothesis.
pub fn lcs(reference: &[Token], hypothesis: &[Token]) -> usize {
    let r = surfaces(reference);
    let h = surfaces(hypothesis);
    let mut best = 0;
    for mask in 0u32..(1 << h.len()) {
        let size = mask.count_ones() as usize;
        if size <= best {
            continue;
        }
        let sub: Vec<&str> = (0..h.len()).filter(|i| mask >> i & 1 == 1).map(|i| h[i]).collect();
        if is_subsequence(&sub, &r) {
            best = size;
        }
    }
    best
}

pub fn rouge_l(reference: &[Token], hypothesis: &[Token], beta: f64) -> f64 {
    if hypothesis.is_empty() {
        return 0.0;
    }
    let l = lcs(reference, hypothesis) as f64;
    if l == 0.0 {
        return 0.0;
    }
    let r = l / reference.len() as f64;
    let p = l / hypothesis.len() as f64;
    (1.0 + beta * beta) * r * p / (r + beta * beta * p)
}

fn chunks_of(pairs: &[(usize, usize)]) -> usize {
    let mut chunks = 0;
    for (k, &(i, j)) in pairs.iter().enumerate() {
        let continues = k > 0 && pairs[k - 1] == (i.wrapping_sub(1), j.wrapping_sub(1));
        if !continues {
            chunks += 1;
        }
    }
    chunks
}

/// (matches, chunks) of the best alignment: most matches, then fewest chunks.
pub fn meteor_alignment(reference: &[Token], hypothesis: &[Token]) -> (usize, usize) {
    let matchable = |h: &Token, r: &Token| h.surface == r.surface || h.lemma == r.lemma;
    let mut best = (0usize, usize::MAX);
    let mut used = vec![false; reference.len()];
    let mut pairs = Vec::new();
    fn go(
        i: usize,
        reference: &[Token],
        hypothesis: &[Token],
        matchable: &dyn Fn(&Token, &Token) -> bool,
        used: &mut [bool],
        pairs: &mut Vec<(usize, usize)>,
        best: &mut (usize, usize),
    ) {
        let remaining = hypothesis.len() - i;
        if pairs.len() + remaining < best.0 {
            return;
        }
        if i == hypothesis.len() {
            let c = chunks_of(pairs);
            if pairs.len() > best.0 || (pairs.len() == best.0 && c < best.1) {
                *best = (pairs.len(), c);
            }
            return;
        }
        go(i + 1, reference, hypothesis, matchable, used, pairs, best);
        for j in 0..reference.len() {
            if !used[j] && matchable(&hypothesis[i], &reference[j]) {
                used[j] = true;
                pairs.push((i, j));
                go(i + 1, reference, hypothesis, matchable, used, pairs, best);
                pairs.pop();
                used[j] = false;
            }
        }
    }
    go(0, reference, hypothesis, &matchable, &mut used, &mut pairs, &mut best);
    if best.0 == 0 {
        (0, 0)
    } else {
        best
    }
}

pub fn meteor_lite(reference: &[Token], hypothesis: &[Token], alpha: f64, gamma: f64, beta: f64) -> f64 {
    if hypothesis.is_empty() {
        return 0.0;
    }
    let (m, chunks) = meteor_alignment(reference, hypothesis);
    if m == 0 {
        return 0.0;
    }
    let mf = m as f64;
    let p = mf / hypothesis.len() as f64;
    let r = mf / reference.len() as f64;
    let fmean = p * r / (alpha * p + (1.0 - alpha) * r);
    let frag = if chunks == 1 && m == reference.len() && m == hypothesis.len() {
        0.0
    } else {
        chunks as f64 / mf
    };
    fmean * (1.0 - gamma * frag.powf(beta))
}

/// Naive document-frequency idf over a corpus of token sequences.
pub struct NaiveIdf {
    corpus: Vec<Vec<String>>,
}

impl NaiveIdf {
    pub fn new(corpus: &[Vec<Token>]) -> Self {
        NaiveIdf {
            corpus: corpus
                .iter()
                .map(|s| s.iter().map(|t| t.surface.clone()).collect())
                .collect(),
        }
    }

    pub fn idf(&self, gram: &[&str]) -> f64 {
        let n = self.corpus.len() as f64;
        let df = self
            .corpus
            .iter()
            .filter(|s| {
                let words: Vec<&str> = s.iter().map(String::as_str).collect();
                grams(&words, gram.len()).iter().any(|g| g.as_slice() == gram)
            })
            .count();
        if df == 0 {
            n.ln()
        } else {
            (n / df as f64).max(1.0).ln()
        }
    }
}

fn tfidf<'a>(gs: &[Vec<&'a str>], idf: &NaiveIdf) -> Vec<(Vec<&'a str>, f64)> {
    distinct(gs)
        .into_iter()
        .map(|g| {
            let w = count(gs, &g) as f64 * idf.idf(&g);
            (g, w)
        })
        .collect()
}

pub fn cider_d(reference: &[Token], hypothesis: &[Token], idf: &NaiveIdf, sigma: f64) -> f64 {
    if hypothesis.is_empty() {
        return 0.0;
    }
    let r = surfaces(reference);
    let h = surfaces(hypothesis);
    let delta = h.len() as f64 - r.len() as f64;
    let mut sum = 0.0;
    for n in 1..=4 {
        let hg = grams(&h, n);
        let rg = grams(&r, n);
        let hv = tfidf(&hg, idf);
        let rv = tfidf(&rg, idf);
        let norm = |v: &[(Vec<&str>, f64)]| v.iter().map(|(_, w)| w * w).sum::<f64>().sqrt();
        let (hn, rn) = (norm(&hv), norm(&rv));
        if hn == 0.0 || rn == 0.0 {
            continue;
        }
        let mut dot = 0.0;
        for (g, hw) in &hv {
            if let Some((_, rw)) = rv.iter().find(|(rg, _)| rg == g) {
                dot += hw.min(*rw) * rw;
            }
        }
        sum += dot / (hn * rn) * (-(delta * delta) / (2.0 * sigma * sigma)).exp();
    }
    10.0 * sum / 4.0
}

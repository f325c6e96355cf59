//! Acceptance gate. Every criterion prints one PASS/FAIL line; the target
//! fails if any criterion does.

#[path = "../../core/tests/common/mod.rs"]
mod common;

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::Arc;
use std::time::Instant;

use common::oracle;
use srlqa_core::baseline::{baseline_predict, BaselineKind};
use srlqa_core::builder::{build_dataset, BuildOptions, Dataset, Split, SplitManifest};
use srlqa_core::contrastive::{build_index, signature, IndexedQuery};
use srlqa_core::lexicon::Lexicon;
use srlqa_core::metrics::{bleu2, build_idf, cider_d, meteor_lite, rouge_l, MeteorParams, MetricId, MetricParams, MetricSuite};
use srlqa_core::model::{
    AnnotatedDescription, CoarsePos, ContrastivePair, PredictionRecord, QueryRecord, RoleSpan, SrlRole, Token, VerbFrame,
};
use srlqa_core::querygen::{generate_queries, QueryGenConfig};
use srlqa_core::scoring::{embedding_sentences, relative_score, score_split, ScoreRequest, ScoringConfig, SplitScores};
use srlqa_core::synth::{mock_store, synth_corpus, SynthConfig};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

/// Val and test of a synthetic build, plus train for the frequency baseline.
struct Fixture {
    data: Dataset,
    eval: Vec<QueryRecord>,
}

fn fixture() -> Fixture {
    let corpus = synth_corpus(&SynthConfig {
        videos: 600,
        max_segments: 2,
        seed: 3,
    });
    let mut manifest = SplitManifest::new();
    for d in &corpus {
        let n: usize = d.video_id[1..].parse().unwrap();
        let split = match n % 4 {
            0 | 1 => Split::Train,
            2 => Split::Val,
            _ => Split::Test,
        };
        manifest.assign(d.video_id.clone(), split).unwrap();
    }
    let data = build_dataset(&corpus, &[], &QueryGenConfig::default(), &manifest, &BuildOptions::default()).unwrap();
    let eval = data.val.iter().chain(&data.test).cloned().collect();
    Fixture { data, eval }
}

fn score(
    queries: &[QueryRecord],
    pairs: &[ContrastivePair],
    predictions: &[PredictionRecord],
    metrics: &[MetricId],
    config: &ScoringConfig,
) -> SplitScores {
    let lexicon = Lexicon::from_queries(queries);
    let references: Vec<Vec<Token>> = queries.iter().map(QueryRecord::reference).collect();
    let store = metrics.contains(&MetricId::EmbedSim).then(|| {
        let sentences = embedding_sentences(queries, predictions, &lexicon);
        Arc::new(mock_store(sentences.iter().map(Vec::as_slice), 16, "mock").unwrap())
    });
    let suite = MetricSuite::new(MetricParams::default(), build_idf(&references).unwrap(), store);
    score_split(
        &suite,
        &ScoreRequest {
            queries,
            partner_pool: &[],
            pairs,
            predictions,
            metrics,
            config,
            lexicon: &lexicon,
        },
    )
    .unwrap()
}

fn relative_anchors() -> Outcome {
    let fx = fixture();
    let q = &fx.eval;
    ensure(q.len() >= 50, || format!("fixture has {} queries", q.len()))?;
    let start = Instant::now();
    let cfg = ScoringConfig::default();
    let gt = score(q, &fx.data.pairs, &baseline_predict(BaselineKind::Gt, &[], q), &MetricId::ALL, &cfg);
    let empty = score(q, &fx.data.pairs, &baseline_predict(BaselineKind::Empty, &[], q), &MetricId::ALL, &cfg);
    let elapsed = start.elapsed().as_secs_f64();
    for (name, run, want) in [("gt", &gt, 1.0), ("empty", &empty, 0.0)] {
        ensure(run.audit.is_empty(), || format!("{name}: {} audit entries", run.audit.len()))?;
        ensure(run.records.len() == q.len() * 5, || format!("{name}: {} records", run.records.len()))?;
        for r in &run.records {
            ensure((r.relative - want).abs() <= 1e-9, || {
                format!("{name} {} {:?}: relative {}", r.query_id, r.metric, r.relative)
            })?;
        }
    }
    ensure(elapsed < 5.0, || format!("took {elapsed:.2}s"))?;
    Ok(format!("{} queries x 5 metrics, {elapsed:.2}s", q.len()))
}

fn contrastive_anchors() -> Outcome {
    let fx = fixture();
    let q = &fx.eval;
    let cfg = ScoringConfig {
        cs_thresholds: vec![0.0, 0.1, 0.2, 0.3, 0.5, 0.9, 0.99],
        ..ScoringConfig::default()
    };
    let gt = score(q, &fx.data.pairs, &baseline_predict(BaselineKind::Gt, &[], q), &MetricId::ALL, &cfg);
    let empty = score(q, &fx.data.pairs, &baseline_predict(BaselineKind::Empty, &[], q), &MetricId::ALL, &cfg);
    for r in &gt.records {
        ensure(r.contrastive.len() == cfg.cs_thresholds.len(), || format!("{} unpaired", r.query_id))?;
        ensure(r.contrastive.values().all(|v| *v == 1.0), || {
            format!("gt {} {:?}: {:?}", r.query_id, r.metric, r.contrastive)
        })?;
        ensure(r.consistency.values().all(|v| *v == 1) && !r.consistency.is_empty(), || {
            format!("gt {} {:?}: consistency {:?}", r.query_id, r.metric, r.consistency)
        })?;
    }
    for r in &empty.records {
        ensure(r.contrastive.values().all(|v| *v == 0.0), || {
            format!("empty {} {:?}: {:?}", r.query_id, r.metric, r.contrastive)
        })?;
    }
    Ok(format!("{} paired records per baseline, t up to 0.99", gt.records.len()))
}

fn metric_oracles() -> Outcome {
    const TOL: f64 = 1e-9;
    let p = MeteorParams::default();
    let mut worst: f64 = 0.0;
    let mut check = |name: &str, got: f64, want: f64| {
        worst = worst.max((got - want).abs());
        ensure((got - want).abs() <= TOL, || format!("{name}: {got} vs oracle {want}"))
    };
    for (r, h) in common::random_pairs(101, 200, 12) {
        check("bleu2", bleu2(&r, &h, 1e-9).unwrap(), oracle::bleu2(&r, &h, 1e-9))?;
    }
    for (r, h) in common::random_pairs(102, 200, 12) {
        check("rouge_l", rouge_l(&r, &h, 1.2).unwrap(), oracle::rouge_l(&r, &h, 1.2))?;
    }
    for (r, h) in common::random_pairs(103, 200, 12) {
        let want = oracle::meteor_lite(&r, &h, p.alpha, p.gamma, p.beta);
        check("meteor_lite", meteor_lite(&r, &h, &p).unwrap(), want)?;
    }
    let pairs = common::random_pairs(104, 200, 12);
    let corpus: Vec<Vec<Token>> = pairs.iter().map(|(r, _)| r.clone()).collect();
    let idf = build_idf(&corpus).unwrap();
    let naive = oracle::NaiveIdf::new(&corpus);
    for (r, h) in &pairs {
        check("cider_d", cider_d(r, h, &idf, 6.0).unwrap(), oracle::cider_d(r, h, &naive, 6.0))?;
    }

    // LCS 2 of an 8-token reference and a 4-token hypothesis: R = 0.25, P = 0.5
    let words = |s: &str| s.split_whitespace().map(Token::plain).collect::<Vec<_>>();
    let f = rouge_l(&words("a b c d e f g h"), &words("a c x y"), 1.2).unwrap();
    ensure((f - 0.3144).abs() <= 1e-4, || format!("worked example gives {f}"))?;
    Ok(format!("4 x 200 pairs, max |diff| {worst:.1e}; worked example F = {f:.4}"))
}

fn cider_self_score() -> Outcome {
    let fx = fixture();
    let q = &fx.eval;
    let references: Vec<Vec<Token>> = q.iter().map(QueryRecord::reference).collect();
    let suite = MetricSuite::new(MetricParams::default(), build_idf(&references).unwrap(), None);
    let mut off_unit = 0;
    let mut example = 0.0;
    for (query, reference) in q.iter().zip(&references) {
        let own = suite.self_score(MetricId::CiderD, reference).unwrap();
        if (own - 1.0).abs() > 1e-6 {
            off_unit += 1;
            example = own;
        }
        let rel = relative_score(&suite, MetricId::CiderD, query, &query.answer_tokens, &query.answer_tokens).unwrap();
        ensure(rel == 1.0, || format!("{}: gt-copy relative {rel}", query.query_id))?;
    }
    ensure(off_unit > 0, || "every CIDEr-D self-score equals 1".to_string())?;
    Ok(format!(
        "{off_unit}/{} references with B(Ref,Ref) != 1 (e.g. {example:.4}); gt-copy relative exactly 1",
        q.len()
    ))
}

/// Key recomputed from the source description, without the library's
/// signature code.
#[derive(Clone, PartialEq, Eq)]
struct Key {
    structure: Vec<String>,
    masked: String,
    lemmas: Vec<String>,
    answer: BTreeSet<String>,
}

fn independent_key(q: &QueryRecord, d: &AnnotatedDescription) -> Key {
    let considered = ["ARG0", "ARG1", "V", "ARG2", "ARGM-LOC", "LOC"];
    let frame = &d.frames[q.frame_index];
    let spans: Vec<&RoleSpan> = frame
        .roles
        .iter()
        .filter(|s| considered.contains(&s.role.label()))
        .collect();
    let mut lemmas: Vec<String> = spans
        .iter()
        .filter(|s| s.role != q.masked_role)
        .flat_map(|s| &d.tokens[s.start..s.end])
        .filter(|t| matches!(t.pos, CoarsePos::Noun | CoarsePos::Verb))
        .map(|t| format!("{}/{:?}", t.lemma, t.pos))
        .collect();
    lemmas.sort();
    let wanted = if q.masked_role == SrlRole::V { CoarsePos::Verb } else { CoarsePos::Noun };
    Key {
        structure: spans.iter().map(|s| s.role.label().to_string()).collect(),
        masked: q.masked_role.label().to_string(),
        lemmas,
        answer: q.answer_tokens.iter().filter(|t| t.pos == wanted).map(|t| t.lemma.clone()).collect(),
    }
}

fn contrastive_index() -> Outcome {
    let cfg = QueryGenConfig::default();
    let corpus = synth_corpus(&SynthConfig {
        videos: 1200,
        max_segments: 1,
        seed: 17,
    });
    let mut queries = Vec::new();
    let mut entries = Vec::new();
    let mut keys = Vec::new();
    'outer: for d in &corpus {
        for q in generate_queries(d, &cfg) {
            if let Ok(sig) = signature(&q, d, &cfg) {
                keys.push(independent_key(&q, d));
                entries.push(IndexedQuery::new(&q, sig));
                queries.push(q);
                if queries.len() == 2000 {
                    break 'outer;
                }
            }
        }
    }
    ensure(queries.len() == 2000, || format!("only {} indexable queries", queries.len()))?;

    let start = Instant::now();
    let index = build_index(&entries);
    let found: Vec<Option<String>> = entries.iter().map(|e| index.find_partner(e).map(String::from)).collect();
    let elapsed = start.elapsed().as_secs_f64();

    let mut brute: Vec<Option<String>> = Vec::with_capacity(queries.len());
    for (i, qi) in queries.iter().enumerate() {
        let best = (0..queries.len())
            .filter(|&j| {
                let (a, b) = (&keys[i], &keys[j]);
                queries[j].video_id != qi.video_id
                    && a.structure == b.structure
                    && a.masked == b.masked
                    && a.lemmas == b.lemmas
                    && a.answer.is_disjoint(&b.answer)
            })
            .map(|j| queries[j].query_id.clone())
            .min();
        brute.push(best);
    }
    let differ = found.iter().zip(&brute).filter(|(a, b)| a != b).count();
    ensure(differ == 0, || format!("{differ} queries disagree with the O(n^2) scan"))?;

    let at: HashMap<&str, usize> = queries.iter().enumerate().map(|(i, q)| (q.query_id.as_str(), i)).collect();
    let mut paired = 0;
    for (i, partner) in found.iter().enumerate() {
        let Some(p) = partner else { continue };
        paired += 1;
        let j = at[p.as_str()];
        let (a, b) = (&keys[i], &keys[j]);
        let checks = [
            ("structure", a.structure == b.structure),
            ("masked role", a.masked == b.masked),
            ("question lemmas", a.lemmas == b.lemmas),
            ("disjoint answers", a.answer.is_disjoint(&b.answer)),
            ("distinct videos", queries[i].video_id != queries[j].video_id),
        ];
        for (name, ok) in checks {
            ensure(ok, || format!("{} -> {p}: {name} violated", queries[i].query_id))?;
        }
    }
    ensure(paired > 0, || "no pairs found".to_string())?;
    ensure(elapsed < 10.0, || format!("took {elapsed:.2}s"))?;
    Ok(format!("2000 queries, {paired} with partners, index+lookup {elapsed:.3}s"))
}

fn tok(surface: &str, lemma: &str, pos: CoarsePos) -> Token {
    Token::new(surface, lemma, pos)
}

/// `agent verb patient`, each a determiner + noun phrase except the verb.
fn scene(video: &str, agent: &str, verb: (&str, &str), patient: &str) -> AnnotatedDescription {
    let tokens = vec![
        tok("a", "a", CoarsePos::Other),
        tok(agent, agent, CoarsePos::Noun),
        tok(verb.0, verb.1, CoarsePos::Verb),
        tok("a", "a", CoarsePos::Other),
        tok(patient, patient, CoarsePos::Noun),
    ];
    AnnotatedDescription {
        video_id: video.into(),
        segment_id: format!("{video}_0"),
        tokens,
        frames: vec![VerbFrame {
            verb_index: 2,
            roles: vec![
                RoleSpan::new(SrlRole::Arg0, 0, 2),
                RoleSpan::new(SrlRole::V, 2, 3),
                RoleSpan::new(SrlRole::Arg1, 3, 5),
            ],
        }],
        coref_applied: false,
    }
}

fn pipeline_filters() -> Outcome {
    // e1/e2 share "cut box" (agent queries pair); e1/e3 share "man box"
    // (verb queries pair). Everything else has no interchangeable partner.
    let mut corpus = vec![
        scene("e1", "man", ("cuts", "cut"), "box"),
        scene("e2", "woman", ("cuts", "cut"), "box"),
        scene("e3", "man", ("opens", "open"), "box"),
    ];
    // "a man sleeps now": ARG0 V ARGM-TMP leaves two considered roles.
    let two_roles = AnnotatedDescription {
        video_id: "e4".into(),
        segment_id: "e4_0".into(),
        tokens: vec![
            tok("a", "a", CoarsePos::Other),
            tok("man", "man", CoarsePos::Noun),
            tok("sleeps", "sleep", CoarsePos::Verb),
            tok("now", "now", CoarsePos::Other),
        ],
        frames: vec![VerbFrame {
            verb_index: 2,
            roles: vec![
                RoleSpan::new(SrlRole::Arg0, 0, 2),
                RoleSpan::new(SrlRole::V, 2, 3),
                RoleSpan::new(SrlRole::from_label("ARGM-TMP"), 3, 4),
            ],
        }],
        coref_applied: false,
    };
    let direct = generate_queries(&two_roles, &QueryGenConfig::default()).len();
    ensure(direct == 0, || format!("2-role frame emitted {direct} queries"))?;
    corpus.push(two_roles);
    corpus.push(scene("t1", "boy", ("lifts", "lift"), "ball"));

    let mut manifest = SplitManifest::new();
    for (v, s) in [("e1", Split::Val), ("e2", Split::Test), ("e3", Split::Val), ("e4", Split::Test), ("t1", Split::Train)] {
        manifest.assign(v, s).unwrap();
    }
    let data = build_dataset(&corpus, &[], &QueryGenConfig::default(), &manifest, &BuildOptions::default()).unwrap();
    let expected: BTreeSet<&str> = ["e1_0:0:ARG1", "e2_0:0:V", "e2_0:0:ARG1", "e3_0:0:ARG0", "e3_0:0:ARG1"].into();
    let dropped: BTreeSet<&str> = data
        .audit
        .iter()
        .filter(|a| a.stage == "pairing")
        .map(|a| a.id.as_str())
        .collect();
    ensure(dropped == expected, || format!("dropped {dropped:?}"))?;
    let kept: BTreeSet<&str> = data.val.iter().chain(&data.test).map(|q| q.query_id.as_str()).collect();
    let want_kept: BTreeSet<&str> = ["e1_0:0:ARG0", "e1_0:0:V", "e2_0:0:ARG0", "e3_0:0:V"].into();
    ensure(kept == want_kept, || format!("kept {kept:?}"))?;
    ensure(data.train.len() == 3, || format!("train has {} queries", data.train.len()))?;
    Ok(format!("k = {} dropped exactly; 2-role frame emits 0 queries", expected.len()))
}

fn threshold_monotonicity() -> Outcome {
    let fx = fixture();
    let q = &fx.eval;
    let predictions = baseline_predict(BaselineKind::MostFrequent, &fx.data.train, q);
    let run = score(q, &fx.data.pairs, &predictions, &MetricId::ALL, &ScoringConfig::default());
    let mut checked = 0;
    let mut strict = 0;
    for r in &run.records {
        if r.contrastive.is_empty() {
            continue;
        }
        let cs: Vec<f64> = ["0", "0.1", "0.2", "0.3"].iter().map(|k| r.contrastive[*k]).collect();
        ensure(cs.windows(2).all(|w| w[0] >= w[1]), || format!("{} {:?}: {cs:?}", r.query_id, r.metric))?;
        checked += 1;
        strict += usize::from(cs[0] > cs[3]);
    }
    ensure(checked > 0, || "no paired records".to_string())?;
    Ok(format!("{checked} paired records, {strict} strictly decreasing from 0 to 0.3"))
}

fn srlqa(args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_srlqa"))
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("srlqa {}: {}", args.join(" "), String::from_utf8_lossy(&out.stderr))
    })
}

fn pipeline_run(root: &Path) -> Result<BTreeMap<PathBuf, Vec<u8>>, String> {
    let p = |rel: &str| root.join(rel).to_string_lossy().into_owned();
    srlqa(&["--seed", "5", "synth", "--videos", "300", "--out", &p("in")])?;
    srlqa(&["build", "--corpus", &p("in/corpus.jsonl"), "--manifest", &p("in/manifest.jsonl"), "--pair-train", "--out", &p("data")])?;
    srlqa(&[
        "baseline", "--kind", "most_frequent", "--train", &p("data/train.jsonl"),
        "--queries", &p("data/val.jsonl"), "--queries", &p("data/test.jsonl"), "--out", &p("pred.jsonl"),
    ])?;
    srlqa(&[
        "mock-embeddings", "--queries", &p("data/val.jsonl"), "--queries", &p("data/test.jsonl"),
        "--predictions", &p("pred.jsonl"), "--out", &p("emb.bin"),
    ])?;
    srlqa(&[
        "score", "--queries", &p("data/val.jsonl"), "--partners", &p("data/test.jsonl"),
        "--pairs", &p("data/pairs.jsonl"), "--predictions", &p("pred.jsonl"),
        "--embeddings", &p("emb.bin"), "--out", &p("score"),
    ])?;
    let mut files = BTreeMap::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).map_err(|e| e.to_string())? {
            let path = entry.map_err(|e| e.to_string())?.path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
                files.insert(path.strip_prefix(root).unwrap().to_path_buf(), bytes);
            }
        }
    }
    Ok(files)
}

fn determinism() -> Outcome {
    let a = tempfile::tempdir().map_err(|e| e.to_string())?;
    let b = tempfile::tempdir().map_err(|e| e.to_string())?;
    let first = pipeline_run(a.path())?;
    let second = pipeline_run(b.path())?;
    ensure(first.keys().eq(second.keys()), || "different file sets".to_string())?;
    for (path, bytes) in &first {
        ensure(second[path] == *bytes, || format!("{} differs", path.display()))?;
    }
    let scores = first.get(Path::new("score/scores.jsonl")).map_or(0, |b| b.iter().filter(|c| **c == b'\n').count());
    ensure(scores > 0, || "no score records written".to_string())?;
    Ok(format!("{} files byte-identical across two runs ({scores} score records)", first.len()))
}

fn main() {
    let criteria: [Criterion; 8] = [
        ("relative score anchors (gt = 1, empty = 0, 5 metrics, 1e-9, < 5 s)", relative_anchors),
        ("contrastive / consistency anchors", contrastive_anchors),
        ("metric oracle equivalence + ROUGE-L worked example", metric_oracles),
        ("CIDEr-D self-score != 1 with exact gt-copy relative", cider_self_score),
        ("contrastive index vs brute force (2000 queries, < 10 s)", contrastive_index),
        ("pipeline filters (k drops, 2-role frame)", pipeline_filters),
        ("CS threshold monotonicity", threshold_monotonicity),
        ("build + score determinism", determinism),
    ];
    let mut failed = 0;
    for (name, check) in criteria {
        let outcome = std::panic::catch_unwind(check).unwrap_or_else(|e| {
            Err(e
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| e.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_else(|| "panicked".into()))
        });
        match outcome {
            Ok(detail) => println!("PASS  {name}: {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL  {name}: {why}");
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

use std::fs::File;
use std::io::{BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::sync::Arc;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};

use srlqa_core::baseline::{baseline_predict, BaselineKind};
use srlqa_core::builder::{build_dataset, BuildOptions, CorefCluster, SplitManifest};
use srlqa_core::config::Config;
use srlqa_core::contrastive::{pair_eval_pool, signature};
use srlqa_core::embed::{load_store, EmbeddingStore, RemoteClient};
use srlqa_core::lexicon::Lexicon;
use srlqa_core::metrics::{build_idf, MetricId, MetricSuite};
use srlqa_core::model::{AnnotatedDescription, ContrastivePair, PredictionRecord, QueryRecord, ScoreRecord, SrlRole};
use srlqa_core::querygen::QueryGenConfig;
use srlqa_core::records::{parse_corpus, read_queries, read_records, write_records};
use srlqa_core::report::aggregate;
use srlqa_core::scoring::{embedding_sentences, score_split, ScoreRequest};
use srlqa_core::synth::{mock_store, synth_corpus, SynthConfig};

/// Fill-in-the-phrase queries from SRL-annotated descriptions, and
/// relative / contrastive scoring of predicted answer phrases.
#[derive(Parser)]
#[command(name = "srlqa", version)]
struct Cli {
    /// TOML configuration ([querygen], [metrics], [scoring], [embeddings]).
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Seed for `synth`; every other stage is deterministic.
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Build train/val/test query files and contrastive pairs from a corpus.
    Build(BuildArgs),
    /// Re-pair val and test query files and drop unpartnered queries.
    Pair(PairArgs),
    /// Score predictions and write scores plus a report.
    Score(ScoreArgs),
    /// Aggregate an existing scores file into a report.
    Report(ReportArgs),
    /// Write predictions of an analytic baseline.
    Baseline(BaselineArgs),
    /// Write a seeded synthetic corpus and split manifest.
    Synth(SynthArgs),
    /// Write a mock embedding store covering the sentences a score run needs.
    MockEmbeddings(MockEmbeddingsArgs),
}

#[derive(Args)]
struct BuildArgs {
    /// Annotated description records.
    #[arg(long)]
    corpus: PathBuf,
    /// Split manifest: lines {"split": "train|val|test|eval", "video_ids": [...]}.
    #[arg(long)]
    manifest: PathBuf,
    /// Coreference cluster records.
    #[arg(long)]
    clusters: Option<PathBuf>,
    /// Considered roles, comma separated (default ARG0,ARG1,V,ARG2,LOC).
    #[arg(long, value_delimiter = ',')]
    roles: Option<Vec<String>>,
    /// Also pair train queries within train and write train_pairs.jsonl.
    #[arg(long)]
    pair_train: bool,
    /// Print counts only; write nothing.
    #[arg(long)]
    dry_run: bool,
    /// Output directory.
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct PairArgs {
    #[arg(long)]
    val: PathBuf,
    #[arg(long)]
    test: PathBuf,
    /// Descriptions the queries were generated from (descriptions.jsonl of `build`).
    #[arg(long)]
    descriptions: PathBuf,
    #[arg(long, value_delimiter = ',')]
    roles: Option<Vec<String>>,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Text,
    Records,
}

#[derive(Args)]
struct ScoreArgs {
    /// Queries to score.
    #[arg(long)]
    queries: PathBuf,
    /// Other query files partners may come from (e.g. test when scoring val).
    #[arg(long)]
    partners: Vec<PathBuf>,
    #[arg(long)]
    pairs: PathBuf,
    #[arg(long)]
    predictions: PathBuf,
    /// Metrics, comma separated (default: all lexical metrics, plus
    /// EMBED_SIM when --embeddings is given).
    #[arg(long, value_delimiter = ',')]
    metrics: Option<Vec<String>>,
    /// Contrastive thresholds, comma separated (default 0,0.1,0.2,0.3).
    #[arg(long, value_delimiter = ',')]
    thresholds: Option<Vec<f64>>,
    /// Consistency threshold (default 0.1).
    #[arg(long)]
    cons_threshold: Option<f64>,
    /// Embedding store file or directory, or an http(s) endpoint.
    #[arg(long)]
    embeddings: Option<String>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    #[arg(long, default_value = "out")]
    out: PathBuf,
}

#[derive(Args)]
struct ReportArgs {
    #[arg(long)]
    scores: PathBuf,
    /// Query files supplying the masked role of each scored query.
    #[arg(long, required = true)]
    queries: Vec<PathBuf>,
    #[arg(long, value_enum, default_value = "text")]
    format: Format,
    /// Also write report.txt and report.jsonl here.
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BaselineArgs {
    /// empty, gt or most_frequent.
    #[arg(long)]
    kind: String,
    /// Queries to predict for; repeat for several files.
    #[arg(long, required = true)]
    queries: Vec<PathBuf>,
    /// Training queries (required by most_frequent).
    #[arg(long)]
    train: Option<PathBuf>,
    /// Output predictions file.
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long, default_value_t = 200)]
    videos: usize,
    #[arg(long, default_value_t = 2)]
    max_segments: usize,
    /// Videos assigned to train; the rest form an `eval` entry.
    #[arg(long)]
    train_videos: Option<usize>,
    #[arg(long, default_value = "synth")]
    out: PathBuf,
}

#[derive(Args)]
struct MockEmbeddingsArgs {
    #[arg(long, required = true)]
    queries: Vec<PathBuf>,
    #[arg(long, required = true)]
    predictions: Vec<PathBuf>,
    #[arg(long, default_value_t = 16)]
    dim: usize,
    /// Output store file.
    #[arg(long)]
    out: PathBuf,
}

/// Bad invocation or missing input; exits with status 2.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn open(path: &Path) -> Result<BufReader<File>> {
    if !path.is_file() {
        return Err(usage(format!("input file not found: {}", path.display())));
    }
    Ok(BufReader::new(File::open(path)?))
}

fn load_queries(path: &Path) -> Result<Vec<QueryRecord>> {
    read_queries(open(path)?).with_context(|| format!("reading {}", path.display()))
}

fn write_file<T: serde::Serialize>(dir: &Path, name: &str, records: &[T]) -> Result<()> {
    let path = dir.join(name);
    let file = File::create(&path).with_context(|| format!("creating {}", path.display()))?;
    write_records(std::io::BufWriter::new(file), records)?;
    Ok(())
}

fn querygen_config(cfg: &Config, roles: &Option<Vec<String>>) -> Result<QueryGenConfig> {
    match roles {
        None => Ok(cfg.querygen.clone()),
        Some(labels) => {
            let roles: Vec<SrlRole> = labels.iter().map(|l| SrlRole::from_label(l.trim())).collect();
            QueryGenConfig::new(
                roles,
                cfg.querygen.min_roles(),
                cfg.querygen.stopword_verb_lemmas().iter().cloned(),
            )
            .map_err(|e| usage(format!("--roles: {e}")))
        }
    }
}

fn cmd_build(cfg: &Config, args: &BuildArgs) -> Result<()> {
    let manifest = SplitManifest::read(open(&args.manifest)?).context("reading manifest")?;
    let parsed = parse_corpus(open(&args.corpus)?).context("reading corpus")?;
    let clusters: Vec<CorefCluster> = match &args.clusters {
        Some(p) => read_records(open(p)?).context("reading clusters")?,
        None => Vec::new(),
    };
    let qcfg = querygen_config(cfg, &args.roles)?;
    let mut data = build_dataset(
        &parsed.descriptions,
        &clusters,
        &qcfg,
        &manifest,
        &BuildOptions {
            pair_train: args.pair_train,
        },
    )?;
    for w in &parsed.warnings {
        data.audit.insert(
            0,
            srlqa_core::builder::AuditEntry {
                stage: "parse".into(),
                id: format!("{}:{}", w.segment_id, w.frame_index),
                reason: format!("line {}: {}", w.line, w.reason),
            },
        );
    }

    let mut stdout = std::io::stdout().lock();
    for (split, s) in &data.stats {
        writeln!(
            stdout,
            "{split}: {} videos, {} queries generated, {} kept",
            s.videos, s.generated, s.kept
        )?;
    }
    writeln!(stdout, "pairs: {}, audit entries: {}", data.pairs.len(), data.audit.len())?;
    if args.dry_run {
        return Ok(());
    }
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out, "train.jsonl", &data.train)?;
    write_file(&args.out, "val.jsonl", &data.val)?;
    write_file(&args.out, "test.jsonl", &data.test)?;
    write_file(&args.out, "pairs.jsonl", &data.pairs)?;
    write_file(&args.out, "descriptions.jsonl", &data.descriptions)?;
    write_file(&args.out, "audit.jsonl", &data.audit)?;
    if let Some(pairs) = &data.train_pairs {
        write_file(&args.out, "train_pairs.jsonl", pairs)?;
    }
    let stats = serde_json::to_string_pretty(&data.stats)?;
    std::fs::write(args.out.join("stats.json"), stats + "\n")?;
    Ok(())
}

fn cmd_pair(cfg: &Config, args: &PairArgs) -> Result<()> {
    let val = load_queries(&args.val)?;
    let test = load_queries(&args.test)?;
    let descs: Vec<AnnotatedDescription> = read_records(open(&args.descriptions)?).context("reading descriptions")?;
    let qcfg = querygen_config(cfg, &args.roles)?;
    let by_segment: std::collections::HashMap<&str, &AnnotatedDescription> =
        descs.iter().map(|d| (d.segment_id.as_str(), d)).collect();
    let sign = |qs: Vec<QueryRecord>| -> Vec<_> {
        qs.into_iter()
            .map(|q| {
                let sig = match by_segment.get(q.segment_id.as_str()) {
                    Some(d) => signature(&q, d, &qcfg),
                    None => Err(srlqa_core::contrastive::Unindexable::MissingSource {
                        query_id: q.query_id.clone(),
                    }),
                };
                (q, sig)
            })
            .collect()
    };
    let val = sign(val);
    let test = sign(test);
    let pairing = pair_eval_pool(&val, &test);
    let keep = |entries: Vec<(QueryRecord, _)>, kept: &[String]| -> Vec<QueryRecord> {
        let kept: std::collections::HashSet<&str> = kept.iter().map(String::as_str).collect();
        entries
            .into_iter()
            .map(|(q, _)| q)
            .filter(|q| kept.contains(q.query_id.as_str()))
            .collect()
    };
    let val = keep(val, &pairing.val_kept);
    let test = keep(test, &pairing.test_kept);
    println!(
        "val: {} kept, test: {} kept, pairs: {}, dropped: {}",
        val.len(),
        test.len(),
        pairing.pairs.len(),
        pairing.dropped.len()
    );
    let audit: Vec<srlqa_core::builder::AuditEntry> = pairing
        .dropped
        .iter()
        .map(|(id, reason)| srlqa_core::builder::AuditEntry {
            stage: "pairing".into(),
            id: id.clone(),
            reason: reason.clone(),
        })
        .collect();
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out, "val.jsonl", &val)?;
    write_file(&args.out, "test.jsonl", &test)?;
    write_file(&args.out, "pairs.jsonl", &pairing.pairs)?;
    write_file(&args.out, "audit.jsonl", &audit)?;
    Ok(())
}

fn parse_metrics(names: &Option<Vec<String>>, with_embeddings: bool) -> Result<Vec<MetricId>> {
    let mut metrics: Vec<MetricId> = match names {
        Some(names) => names
            .iter()
            .map(|n| n.parse::<MetricId>().map_err(|e| usage(format!("--metrics: {e}"))))
            .collect::<Result<_>>()?,
        None if with_embeddings => MetricId::ALL.to_vec(),
        None => MetricId::LEXICAL.to_vec(),
    };
    metrics.sort();
    metrics.dedup();
    if metrics.contains(&MetricId::EmbedSim) && !with_embeddings {
        return Err(usage("EMBED_SIM needs --embeddings <path|url>"));
    }
    Ok(metrics)
}

fn load_embeddings(
    cfg: &Config,
    source: &str,
    queries: &[QueryRecord],
    predictions: &[PredictionRecord],
    lexicon: &Lexicon,
) -> Result<EmbeddingStore> {
    if source.starts_with("http://") || source.starts_with("https://") {
        let client = RemoteClient::new(source, cfg.embeddings.model_tag.clone(), cfg.embeddings.remote());
        let sentences = embedding_sentences(queries, predictions, lexicon);
        log::info!("fetching embeddings for {} sentences from {source}", sentences.len());
        Ok(client.fetch_all(&sentences)?)
    } else {
        let path = Path::new(source);
        if !path.exists() {
            return Err(usage(format!("embedding store not found: {source}")));
        }
        Ok(load_store(path)?)
    }
}

fn cmd_score(cfg: &Config, args: &ScoreArgs) -> Result<()> {
    let metrics = parse_metrics(&args.metrics, args.embeddings.is_some())?;
    let queries = load_queries(&args.queries)?;
    let mut partners = Vec::new();
    for p in &args.partners {
        partners.extend(load_queries(p)?);
    }
    let pairs: Vec<ContrastivePair> = read_records(open(&args.pairs)?).context("reading pairs")?;
    let predictions: Vec<PredictionRecord> = read_records(open(&args.predictions)?).context("reading predictions")?;
    if queries.is_empty() {
        bail!("no queries to score in {}", args.queries.display());
    }

    let mut scoring = cfg.scoring.clone();
    if let Some(t) = &args.thresholds {
        scoring.cs_thresholds = t.clone();
    }
    if let Some(t) = args.cons_threshold {
        scoring.cons_threshold = t;
    }
    scoring.validate().map_err(|e| usage(e.to_string()))?;

    let all: Vec<QueryRecord> = partners.iter().chain(&queries).cloned().collect();
    let lexicon = Lexicon::from_queries(&all);
    let references: Vec<_> = queries.iter().map(QueryRecord::reference).collect();
    let idf = build_idf(&references)?;
    let embeddings = match &args.embeddings {
        Some(src) if metrics.contains(&MetricId::EmbedSim) => {
            Some(Arc::new(load_embeddings(cfg, src, &all, &predictions, &lexicon)?))
        }
        _ => None,
    };
    let suite = MetricSuite::new(cfg.metrics.clone(), idf, embeddings);
    let out = score_split(
        &suite,
        &ScoreRequest {
            queries: &queries,
            partner_pool: &partners,
            pairs: &pairs,
            predictions: &predictions,
            metrics: &metrics,
            config: &scoring,
            lexicon: &lexicon,
        },
    )?;
    for a in &out.audit {
        log::warn!("{} [{}]: {}", a.query_id, a.metric, a.reason);
    }
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out, "scores.jsonl", &out.records)?;
    write_file(&args.out, "score_audit.jsonl", &out.audit)?;
    emit_report(&out.records, &queries, args.format, Some(&args.out))
}

fn emit_report(records: &[ScoreRecord], queries: &[QueryRecord], format: Format, out: Option<&PathBuf>) -> Result<()> {
    let report = aggregate(records, queries);
    let text = report.render_text();
    let lines = report.render_records();
    if let Some(dir) = out {
        std::fs::create_dir_all(dir)?;
        std::fs::write(dir.join("report.txt"), &text)?;
        std::fs::write(dir.join("report.jsonl"), &lines)?;
    }
    let mut stdout = std::io::stdout().lock();
    match format {
        Format::Text => stdout.write_all(text.as_bytes())?,
        Format::Records => stdout.write_all(lines.as_bytes())?,
    }
    Ok(())
}

fn cmd_report(args: &ReportArgs) -> Result<()> {
    let records: Vec<ScoreRecord> = read_records(open(&args.scores)?).context("reading scores")?;
    let mut queries = Vec::new();
    for q in &args.queries {
        queries.extend(load_queries(q)?);
    }
    emit_report(&records, &queries, args.format, args.out.as_ref())
}

fn cmd_baseline(args: &BaselineArgs) -> Result<()> {
    let kind: BaselineKind = args.kind.parse().map_err(usage)?;
    let mut eval = Vec::new();
    for q in &args.queries {
        eval.extend(load_queries(q)?);
    }
    let train = match (&args.train, kind) {
        (Some(p), _) => load_queries(p)?,
        (None, BaselineKind::MostFrequent) => return Err(usage("most_frequent needs --train")),
        (None, _) => Vec::new(),
    };
    let predictions = baseline_predict(kind, &train, &eval);
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    let file = File::create(&args.out).with_context(|| format!("creating {}", args.out.display()))?;
    write_records(std::io::BufWriter::new(file), &predictions)?;
    Ok(())
}

fn cmd_synth(args: &SynthArgs, seed: Option<u64>) -> Result<()> {
    let synth = SynthConfig {
        videos: args.videos,
        max_segments: args.max_segments,
        seed: seed.unwrap_or(SynthConfig::default().seed),
    };
    let corpus = synth_corpus(&synth);
    let mut videos: Vec<&str> = corpus.iter().map(|d| d.video_id.as_str()).collect();
    videos.dedup();
    let train = args.train_videos.unwrap_or(videos.len() / 2).min(videos.len());
    let manifest = [
        serde_json::json!({"split": "train", "video_ids": &videos[..train]}),
        serde_json::json!({"split": "eval", "video_ids": &videos[train..]}),
    ];
    std::fs::create_dir_all(&args.out)?;
    write_file(&args.out, "corpus.jsonl", &corpus)?;
    write_file(&args.out, "manifest.jsonl", &manifest)?;
    println!("{} descriptions over {} videos ({train} train)", corpus.len(), videos.len());
    Ok(())
}

fn cmd_mock_embeddings(cfg: &Config, args: &MockEmbeddingsArgs) -> Result<()> {
    let mut queries = Vec::new();
    for q in &args.queries {
        queries.extend(load_queries(q)?);
    }
    let mut predictions: Vec<PredictionRecord> = Vec::new();
    for p in &args.predictions {
        predictions.extend(read_records::<PredictionRecord, _>(open(p)?).context("reading predictions")?);
    }
    if args.dim == 0 {
        return Err(usage("--dim must be positive"));
    }
    let lexicon = Lexicon::from_queries(&queries);
    let sentences = embedding_sentences(&queries, &predictions, &lexicon);
    let store = mock_store(sentences.iter().map(Vec::as_slice), args.dim, &cfg.embeddings.model_tag)?;
    if let Some(dir) = args.out.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    store.save(&args.out)?;
    println!("{} sentences, dim {}", store.len(), store.dim());
    Ok(())
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = match &cli.config {
        Some(p) if !p.is_file() => return Err(usage(format!("config file not found: {}", p.display()))),
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    if cli.seed.is_some() && !matches!(cli.command, Command::Synth(_)) {
        log::debug!("--seed only affects `synth`; every other stage is deterministic");
    }
    match &cli.command {
        Command::Build(a) => cmd_build(&cfg, a),
        Command::Pair(a) => cmd_pair(&cfg, a),
        Command::Score(a) => cmd_score(&cfg, a),
        Command::Report(a) => cmd_report(a),
        Command::Baseline(a) => cmd_baseline(a),
        Command::Synth(a) => cmd_synth(a, cli.seed),
        Command::MockEmbeddings(a) => cmd_mock_embeddings(&cfg, a),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::FAILURE
            }
        }
    }
}

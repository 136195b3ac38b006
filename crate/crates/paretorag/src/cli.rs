//! Command-line front end.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand, ValueEnum};
use pareto_core::metrics::{self, evaluate, gold_map, sweep_alpha_cached};
use pareto_core::pipeline::SentenceVectors;
use pareto_core::{
    build_passage_index, build_sentence_index, segment, Alpha, Corpus, EncodeItem, Encoder, IndexMode, Query,
    RetrievalResult, Retriever, TextKey, VectorIndex,
};

use crate::config::{Limit, Need, RunConfig};
use crate::encoders::BackendKind;
use crate::error::{Error, Result};
use crate::genclient::{self, GenClient, GenerationRecord};
use crate::{corpus_io, index_io, pvec, report};

#[derive(Debug, Parser)]
#[command(name = "paretorag", version, about = "Sentence-level dense retrieval with context-weighted embeddings")]
pub struct Cli {
    /// TOML config file. Flags override its values; its values override defaults.
    #[arg(long, global = true, value_name = "FILE")]
    pub config: Option<PathBuf>,

    /// Worker threads for encoding, search and sweeps [default: all cores].
    /// Results do not depend on this.
    #[arg(long, global = true, value_name = "N")]
    pub threads: Option<usize>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Split passages into sentences and write the sentence-unit dump.
    Segment(SegmentArgs),
    /// Embed corpus units, passages and queries into a PVEC file.
    Encode(EncodeArgs),
    /// Build a sentence or passage index.
    BuildIndex(BuildIndexArgs),
    /// Retrieve for a single query and print the result as JSON.
    Search(SearchArgs),
    /// Retrieve for every query in a query file.
    RetrieveBatch(RetrieveBatchArgs),
    /// Retrieve and score against gold answers.
    Eval(EvalArgs),
    /// Recall@k across a range of core-sentence weights.
    SweepAlpha(SweepArgs),
    /// Generate answers from retrieved items through a chat endpoint.
    Generate(GenerateArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum ModeArg {
    Sentence,
    Passage,
}

impl From<ModeArg> for IndexMode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Sentence => IndexMode::Sentence,
            ModeArg::Passage => IndexMode::Passage,
        }
    }
}

#[derive(Debug, Clone, Copy, ValueEnum)]
pub enum BackendArg {
    TestHash,
    Precomputed,
    Http,
}

impl From<BackendArg> for BackendKind {
    fn from(b: BackendArg) -> Self {
        match b {
            BackendArg::TestHash => BackendKind::TestHash,
            BackendArg::Precomputed => BackendKind::Precomputed,
            BackendArg::Http => BackendKind::Http,
        }
    }
}

#[derive(Debug, Args, Default)]
pub struct EncoderArgs {
    /// Embedding backend [default: test-hash].
    #[arg(long, value_enum)]
    pub backend: Option<BackendArg>,
    /// Embedding dimension [default: 256].
    #[arg(long)]
    pub dim: Option<usize>,
    /// Texts per encoder batch [default: 64].
    #[arg(long)]
    pub batch_size: Option<usize>,
    /// Embedding service URL (http backend).
    #[arg(long, value_name = "URL")]
    pub embed_endpoint: Option<String>,
    /// PVEC file (precomputed backend); repeatable. Keys are read from
    /// `<stem>.keys.jsonl`.
    #[arg(long = "vectors", value_name = "FILE")]
    pub vectors: Vec<PathBuf>,
    /// Concurrent embedding requests (http backend) [default: 4].
    #[arg(long)]
    pub max_in_flight: Option<usize>,
    /// Embedding request timeout in seconds [default: 60].
    #[arg(long, value_name = "SECS")]
    pub embed_timeout: Option<u64>,
    /// Backend identifier stored in the index header [default: derived from
    /// backend and dim].
    #[arg(long)]
    pub backend_id: Option<String>,
}

#[derive(Debug, Args, Default)]
pub struct ModeArgs {
    /// Retrieval unit [default: sentence].
    #[arg(long, value_enum)]
    pub mode: Option<ModeArg>,
    /// Core-sentence weight in [0, 1], sentence mode only [default: 0.8].
    #[arg(long)]
    pub alpha: Option<f64>,
}

#[derive(Debug, Args, Default)]
pub struct LimitArgs {
    /// Items per query [default: 30 unless --budget is given].
    #[arg(short, long, conflicts_with = "budget")]
    pub k: Option<usize>,
    /// Word budget over retrieved items instead of a fixed k; the first item
    /// is always kept [default when given without a value: 400].
    #[arg(long, value_name = "WORDS", num_args = 0..=1, default_missing_value = "400")]
    pub budget: Option<usize>,
}

#[derive(Debug, Args)]
pub struct SegmentArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Segment this text and print one sentence per line instead.
    #[arg(long, conflicts_with = "corpus")]
    pub text: Option<String>,
    /// Unit dump output [default: <out_dir>/units.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum EncodeWhat {
    Units,
    Passages,
    Queries,
}

#[derive(Debug, Args)]
pub struct EncodeArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Query JSONL.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// What to embed [default: units,passages and queries when --queries is given].
    #[arg(long, value_enum, value_delimiter = ',')]
    pub what: Vec<EncodeWhat>,
    /// PVEC output; keys go to `<stem>.keys.jsonl` [default: <out_dir>/vectors.pvec].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct BuildIndexArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index directory to write.
    #[arg(long)]
    pub index: Option<PathBuf>,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct SearchArgs {
    /// Corpus JSONL the index was built from.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index directory.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query text.
    #[arg(long)]
    pub query: String,
    /// Query id, used as the key for precomputed backends.
    #[arg(long, default_value = "query")]
    pub query_id: String,
    #[command(flatten)]
    pub limit: LimitArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct RetrieveBatchArgs {
    /// Corpus JSONL the index was built from.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index directory.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query JSONL.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Result dump [default: <out_dir>/results.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub limit: LimitArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct EvalArgs {
    /// Corpus JSONL the index was built from.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index directory.
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query JSONL with gold answers.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Output directory for report.json, histogram.json and results.jsonl.
    #[arg(long)]
    pub out_dir: Option<PathBuf>,
    /// Cutoffs for recall@k [default: 1,5,10,20,30].
    #[arg(long, value_delimiter = ',')]
    pub ks: Vec<usize>,
    /// Generation dump to score for accuracy and ROUGE-L.
    #[arg(long)]
    pub generations: Option<PathBuf>,
    #[command(flatten)]
    pub limit: LimitArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    /// Corpus JSONL.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Query JSONL with gold answers.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// `start:end:step` (inclusive) or a comma list.
    #[arg(long, default_value = "0.0:1.0:0.1")]
    pub alphas: String,
    /// Recall cutoff [default: 30].
    #[arg(short, long)]
    pub k: Option<usize>,
    /// Also report passage-mode recall at the same k.
    #[arg(long)]
    pub baseline: bool,
    /// CSV output [default: <out_dir>/sweep.csv].
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    /// Corpus JSONL the index was built from.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Index directory (not needed with --template none).
    #[arg(long)]
    pub index: Option<PathBuf>,
    /// Query JSONL.
    #[arg(long)]
    pub queries: Option<PathBuf>,
    /// Built-in template (none, nq, hotpotqa, msmarco) or a template file.
    #[arg(long, default_value = "nq")]
    pub template: String,
    /// Generation dump [default: <out_dir>/generations.jsonl].
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Chat completion URL.
    #[arg(long, value_name = "URL")]
    pub gen_endpoint: Option<String>,
    /// Model name sent with each request.
    #[arg(long)]
    pub model: Option<String>,
    /// Sampling temperature [default: 0.1].
    #[arg(long)]
    pub temperature: Option<f64>,
    /// Max output tokens [default: 150].
    #[arg(long)]
    pub max_output_tokens: Option<u32>,
    /// Sampling seed [default: 100].
    #[arg(long)]
    pub seed: Option<u64>,
    /// Request timeout in seconds [default: 120].
    #[arg(long, value_name = "SECS")]
    pub gen_timeout: Option<u64>,
    /// Retries after a timeout, connection failure, 429 or 5xx [default: 0].
    #[arg(long)]
    pub retries: Option<u32>,
    /// Concurrent generation requests [default: 4].
    #[arg(long)]
    pub parallelism: Option<usize>,
    #[command(flatten)]
    pub limit: LimitArgs,
    #[command(flatten)]
    pub encoder: EncoderArgs,
}

/// Parses `start:end:step` (inclusive) or `a,b,c`.
pub fn parse_alphas(arg: &str) -> std::result::Result<Vec<f64>, String> {
    let parts: Vec<&str> = arg.split(':').collect();
    let values = if parts.len() == 3 {
        let num = |s: &str| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}"));
        let (start, end, step) = (num(parts[0])?, num(parts[1])?, num(parts[2])?);
        if step.is_nan() || step <= 0.0 || end < start {
            return Err(format!("bad range {arg:?}: need start <= end and step > 0"));
        }
        let n = ((end - start) / step + 1e-9).floor() as usize;
        (0..=n)
            .map(|i| ((start + i as f64 * step) * 1e12).round() / 1e12)
            .collect()
    } else if parts.len() == 1 {
        arg.split(',')
            .map(|s| s.trim().parse::<f64>().map_err(|e| format!("{s:?}: {e}")))
            .collect::<std::result::Result<Vec<_>, _>>()?
    } else {
        return Err(format!("bad alpha list {arg:?}"));
    };
    if let Some(bad) = values.iter().find(|a| !(0.0..=1.0).contains(*a)) {
        return Err(format!("alpha {bad} outside [0, 1]"));
    }
    Ok(values)
}

fn apply_encoder(cfg: &mut RunConfig, a: &EncoderArgs) {
    let e = &mut cfg.encoder;
    if let Some(b) = a.backend {
        e.backend = b.into();
    }
    if let Some(d) = a.dim {
        e.dim = d;
    }
    if let Some(b) = a.batch_size {
        e.batch_size = b;
    }
    if let Some(u) = &a.embed_endpoint {
        e.endpoint = Some(u.clone());
    }
    if !a.vectors.is_empty() {
        e.vectors = a.vectors.clone();
    }
    if let Some(m) = a.max_in_flight {
        e.max_in_flight = m;
    }
    if let Some(t) = a.embed_timeout {
        e.timeout_secs = t;
    }
    if let Some(id) = &a.backend_id {
        e.backend_id = Some(id.clone());
    }
}

fn apply_limit(cfg: &mut RunConfig, a: &LimitArgs) {
    if let Some(k) = a.k {
        cfg.k = Some(k);
        cfg.budget_words = None;
    }
    if let Some(b) = a.budget {
        cfg.budget_words = Some(b);
        cfg.k = None;
    }
}

fn set<T: Clone>(slot: &mut Option<T>, flag: &Option<T>) {
    if flag.is_some() {
        slot.clone_from(flag);
    }
}

/// Parses `args` and runs the subcommand.
pub fn run<I, T>(args: I) -> Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(args).unwrap_or_else(|e| e.exit());
    run_cli(cli)
}

pub fn run_cli(cli: Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    set(&mut cfg.threads, &cli.threads);
    if let Some(n) = cfg.threads.filter(|&n| n > 0) {
        // Fails only if a pool already exists, which is harmless.
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    match cli.command {
        Command::Segment(a) => cmd_segment(cfg, a),
        Command::Encode(a) => cmd_encode(cfg, a),
        Command::BuildIndex(a) => cmd_build_index(cfg, a),
        Command::Search(a) => cmd_search(cfg, a),
        Command::RetrieveBatch(a) => cmd_retrieve_batch(cfg, a),
        Command::Eval(a) => cmd_eval(cfg, a),
        Command::SweepAlpha(a) => cmd_sweep(cfg, a),
        Command::Generate(a) => cmd_generate(cfg, a),
    }
}

fn required_output(cfg: &RunConfig, flag: Option<&Path>, name: &str, violations: &mut Vec<String>) -> PathBuf {
    match cfg.output(flag, name) {
        Some(p) => p,
        None => {
            violations.push("an output path is required (--out or `out_dir` in the config file)".to_string());
            PathBuf::new()
        }
    }
}

fn check(mut violations: Vec<String>, extra: Vec<String>) -> Result<()> {
    violations.extend(extra);
    if violations.is_empty() {
        Ok(())
    } else {
        Err(Error::Config(violations))
    }
}

fn print_json<T: serde::Serialize>(value: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(value).map_err(|e| Error::Format(e.to_string()))?;
    println!("{text}");
    Ok(())
}

fn path(p: &Option<PathBuf>) -> &Path {
    p.as_deref().expect("validated")
}

fn cmd_segment(mut cfg: RunConfig, a: SegmentArgs) -> Result<()> {
    if let Some(text) = &a.text {
        for s in segment(text)? {
            println!("{s}");
        }
        return Ok(());
    }
    set(&mut cfg.corpus, &a.corpus);
    let mut extra = Vec::new();
    let out = required_output(&cfg, a.out.as_deref(), "units.jsonl", &mut extra);
    check(cfg.violations(&[Need::Corpus]), extra)?;
    let (passages, stats) = corpus_io::ingest(path(&cfg.corpus))?;
    let n = corpus_io::write_unit_dump(&out, &passages)?;
    log::info!("wrote {n} units to {}", out.display());
    print_json(&stats)
}

fn cmd_encode(mut cfg: RunConfig, a: EncodeArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.queries, &a.queries);
    apply_encoder(&mut cfg, &a.encoder);
    let mut what = a.what.clone();
    if what.is_empty() {
        what = vec![EncodeWhat::Units, EncodeWhat::Passages];
        if cfg.queries.is_some() {
            what.push(EncodeWhat::Queries);
        }
    }
    let mut needs = vec![];
    if what.iter().any(|w| *w != EncodeWhat::Queries) {
        needs.push(Need::Corpus);
    }
    if what.contains(&EncodeWhat::Queries) {
        needs.push(Need::Queries);
    }
    let mut extra = Vec::new();
    let out = required_output(&cfg, a.out.as_deref(), "vectors.pvec", &mut extra);
    if cfg.encoder.backend == BackendKind::Precomputed {
        extra.push("encode needs a live backend (test-hash or http), not precomputed".to_string());
    }
    check(cfg.violations(&needs), extra)?;

    let encoder = cfg.encoder.build()?;
    let corpus = match &cfg.corpus {
        Some(p) if needs.contains(&Need::Corpus) => Some(corpus_io::load_corpus(p)?),
        _ => None,
    };
    let queries = match &cfg.queries {
        Some(p) if needs.contains(&Need::Queries) => corpus_io::read_queries(p)?,
        _ => Vec::new(),
    };
    let units = corpus.as_ref().map(Corpus::units).unwrap_or_default();
    let mut items: Vec<EncodeItem<'_>> = Vec::new();
    if what.contains(&EncodeWhat::Units) {
        for u in &units {
            items.push(EncodeItem {
                key: TextKey::Core {
                    passage_id: &u.passage_id,
                    sent_index: u.sent_index,
                },
                text: &u.core_text,
            });
            if let Some(ctx) = &u.context_text {
                items.push(EncodeItem {
                    key: TextKey::Context {
                        passage_id: &u.passage_id,
                        sent_index: u.sent_index,
                    },
                    text: ctx,
                });
            }
        }
    }
    if what.contains(&EncodeWhat::Passages) {
        for p in corpus.iter().flat_map(Corpus::passages) {
            items.push(EncodeItem {
                key: TextKey::Passage { passage_id: &p.id },
                text: &p.text,
            });
        }
    }
    if what.contains(&EncodeWhat::Queries) {
        for q in &queries {
            items.push(EncodeItem {
                key: TextKey::Query { id: &q.id },
                text: &q.question,
            });
        }
    }
    let vectors = pareto_core::encoder::encode_all(encoder.as_ref(), &items, cfg.encoder.batch_size)?;
    let rows: Vec<f32> = vectors.iter().flat_map(|v| v.to_f32()).collect();
    let keys: Vec<pvec::RowKey> = items.iter().map(|i| i.key.into()).collect();
    pvec::write(&out, &pvec::default_keys_path(&out), encoder.dim(), &rows, &keys)?;
    log::info!("wrote {} embeddings to {}", keys.len(), out.display());
    Ok(())
}

fn cmd_build_index(mut cfg: RunConfig, a: BuildIndexArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.index, &a.index);
    if let Some(m) = a.mode.mode {
        cfg.mode = Some(m.into());
    }
    set(&mut cfg.alpha, &a.mode.alpha);
    apply_encoder(&mut cfg, &a.encoder);
    cfg.validate(&[Need::Corpus, Need::Index])?;
    if cfg.mode() == IndexMode::Passage && a.mode.alpha.is_some() {
        log::warn!("--alpha is ignored in passage mode");
    }

    let corpus = corpus_io::load_corpus(path(&cfg.corpus))?;
    let encoder = cfg.encoder.build()?;
    let index = match cfg.alpha()? {
        Some(alpha) => build_sentence_index(&corpus, encoder.as_ref(), alpha, cfg.encoder.batch_size)?,
        None => build_passage_index(&corpus, encoder.as_ref(), cfg.encoder.batch_size)?,
    };
    index_io::save(&index, path(&cfg.index), index_io::build_timestamp())?;
    log::info!("indexed {} rows into {}", index.rows(), path(&cfg.index).display());
    Ok(())
}

/// Loads corpus, index and encoder, and checks they belong together.
struct Loaded {
    corpus: Corpus,
    index: VectorIndex,
    encoder: Box<dyn Encoder>,
}

impl Loaded {
    fn open(cfg: &RunConfig) -> Result<Self> {
        let index = index_io::load(path(&cfg.index))?;
        let encoder = cfg.encoder.build()?;
        let corpus = corpus_io::load_corpus(path(&cfg.corpus))?;
        Ok(Self { corpus, index, encoder })
    }

    fn retriever(&self) -> Result<Retriever<'_>> {
        Ok(Retriever::new(&self.index, &self.corpus, self.encoder.as_ref())?)
    }
}

fn retrieve_all(r: &Retriever<'_>, queries: &[Query], limit: Limit) -> Result<Vec<RetrievalResult>> {
    Ok(match limit {
        Limit::TopK(k) => r.retrieve_all(queries, k)?,
        Limit::Budget(b) => r.retrieve_all_word_budget(queries, b)?,
    })
}

fn cmd_search(mut cfg: RunConfig, a: SearchArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.index, &a.index);
    apply_limit(&mut cfg, &a.limit);
    apply_encoder(&mut cfg, &a.encoder);
    cfg.validate(&[Need::Corpus, Need::Index])?;
    let loaded = Loaded::open(&cfg)?;
    let r = loaded.retriever()?;
    let result = match cfg.limit() {
        Limit::TopK(k) => r.retrieve(&a.query_id, &a.query, k)?,
        Limit::Budget(b) => r.retrieve_word_budget(&a.query_id, &a.query, b)?,
    };
    print_json(&report::ResultRecord::new(&result, cfg.limit().k(), cfg.limit().budget()))
}

fn cmd_retrieve_batch(mut cfg: RunConfig, a: RetrieveBatchArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.index, &a.index);
    set(&mut cfg.queries, &a.queries);
    apply_limit(&mut cfg, &a.limit);
    apply_encoder(&mut cfg, &a.encoder);
    let mut extra = Vec::new();
    let out = required_output(&cfg, a.out.as_deref(), "results.jsonl", &mut extra);
    check(cfg.violations(&[Need::Corpus, Need::Index, Need::Queries]), extra)?;

    let loaded = Loaded::open(&cfg)?;
    let queries = corpus_io::read_queries(path(&cfg.queries))?;
    let results = retrieve_all(&loaded.retriever()?, &queries, cfg.limit())?;
    report::write_results(&out, &results, cfg.limit().k(), cfg.limit().budget())?;
    log::info!("wrote {} results to {}", results.len(), out.display());
    Ok(())
}

fn cmd_eval(mut cfg: RunConfig, a: EvalArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.index, &a.index);
    set(&mut cfg.queries, &a.queries);
    set(&mut cfg.out_dir, &a.out_dir);
    if !a.ks.is_empty() {
        cfg.ks = Some(a.ks.clone());
    }
    apply_limit(&mut cfg, &a.limit);
    apply_encoder(&mut cfg, &a.encoder);
    let mut extra = Vec::new();
    if cfg.out_dir.is_none() {
        extra.push("out_dir is required (--out-dir or `out_dir` in the config file)".to_string());
    }
    check(cfg.violations(&[Need::Corpus, Need::Index, Need::Queries]), extra)?;

    let loaded = Loaded::open(&cfg)?;
    let retriever = loaded.retriever()?;
    let queries = corpus_io::read_queries(path(&cfg.queries))?;
    let results = retrieve_all(&retriever, &queries, cfg.limit())?;
    let generations = a.generations.as_deref().map(report::read_generations).transpose()?;
    let eval = evaluate(&results, &gold_map(&queries), &cfg.ks(), generations.as_ref())?;

    let dir = path(&cfg.out_dir);
    std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    report::write_report(&dir.join("report.json"), &eval)?;
    if cfg.metrics.histogram {
        report::write_histogram(&dir.join("histogram.json"), &eval.histogram())?;
    }
    if cfg.metrics.results {
        report::write_results(&dir.join("results.jsonl"), &results, cfg.limit().k(), cfg.limit().budget())?;
    }
    print_json(&eval.aggregate)
}

#[derive(serde::Serialize)]
struct SweepSummary {
    k: usize,
    best_alpha: Option<f64>,
    best_recall: Option<f64>,
    passage_recall: Option<f64>,
}

fn cmd_sweep(mut cfg: RunConfig, a: SweepArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.queries, &a.queries);
    set(&mut cfg.k, &a.k);
    apply_encoder(&mut cfg, &a.encoder);
    let mut extra = Vec::new();
    let out = required_output(&cfg, a.out.as_deref(), "sweep.csv", &mut extra);
    let alphas = match parse_alphas(&a.alphas) {
        Ok(v) => v,
        Err(e) => {
            extra.push(format!("--alphas: {e}"));
            Vec::new()
        }
    };
    if cfg.budget_words.is_some() {
        extra.push("sweep-alpha measures recall@k; budget_words does not apply".to_string());
    }
    check(cfg.violations(&[Need::Corpus, Need::Queries]), extra)?;

    let k = cfg.k.unwrap_or(crate::config::DEFAULT_K);
    let corpus = corpus_io::load_corpus(path(&cfg.corpus))?;
    let queries = corpus_io::read_queries(path(&cfg.queries))?;
    let encoder = cfg.encoder.build()?;
    let alphas = alphas.into_iter().map(Alpha::new).collect::<pareto_core::Result<Vec<_>>>()?;
    let vectors = SentenceVectors::encode(&corpus, encoder.as_ref(), cfg.encoder.batch_size)?;
    let sweep = sweep_alpha_cached(&vectors, &corpus, encoder.as_ref(), &queries, &alphas, k)?;
    report::write_sweep_csv(&out, &sweep)?;

    let passage_recall = if a.baseline {
        let index = build_passage_index(&corpus, encoder.as_ref(), cfg.encoder.batch_size)?;
        let results = Retriever::new(&index, &corpus, encoder.as_ref())?.retrieve_all(&queries, k)?;
        Some(metrics::recall_at_k(&results, &gold_map(&queries), k)?)
    } else {
        None
    };
    let best = sweep.best();
    print_json(&SweepSummary {
        k,
        best_alpha: best.map(|b| b.0),
        best_recall: best.map(|b| b.1),
        passage_recall,
    })
}

fn cmd_generate(mut cfg: RunConfig, a: GenerateArgs) -> Result<()> {
    set(&mut cfg.corpus, &a.corpus);
    set(&mut cfg.index, &a.index);
    set(&mut cfg.queries, &a.queries);
    apply_limit(&mut cfg, &a.limit);
    apply_encoder(&mut cfg, &a.encoder);
    {
        let g = &mut cfg.gen;
        if let Some(v) = &a.gen_endpoint {
            g.endpoint = v.clone();
        }
        if let Some(v) = &a.model {
            g.model = v.clone();
        }
        if let Some(v) = a.temperature {
            g.temperature = v;
        }
        if let Some(v) = a.max_output_tokens {
            g.max_output_tokens = v;
        }
        if let Some(v) = a.seed {
            g.seed = v;
        }
        if let Some(v) = a.gen_timeout {
            g.timeout_secs = v;
        }
        if let Some(v) = a.retries {
            g.retries = v;
        }
        if let Some(v) = a.parallelism {
            g.parallelism = v;
        }
    }
    let template = genclient::load_template(&a.template);
    let rag = match &template {
        Ok(t) => t.kind == pareto_core::prompt::TemplateKind::Rag,
        Err(_) => true,
    };
    let mut extra = Vec::new();
    let out = required_output(&cfg, a.out.as_deref(), "generations.jsonl", &mut extra);
    if let Err(e) = &template {
        extra.push(format!("--template: {e}"));
    }
    let mut needs = vec![Need::Queries, Need::Gen];
    if rag {
        needs.extend([Need::Corpus, Need::Index]);
    }
    check(cfg.violations(&needs), extra)?;
    let template = template?;

    let queries = corpus_io::read_queries(path(&cfg.queries))?;
    let results: Option<Vec<RetrievalResult>> = if rag {
        let loaded = Loaded::open(&cfg)?;
        Some(retrieve_all(&loaded.retriever()?, &queries, cfg.limit())?)
    } else {
        None
    };
    let prompts = queries
        .iter()
        .enumerate()
        .map(|(i, q)| genclient::prompt_for(&template, &q.question, results.as_ref().map(|r| &r[i])))
        .collect::<Result<Vec<_>>>()?;
    let client = GenClient::new(cfg.gen.clone())?;
    let outputs = client.generate_many(&prompts);

    let mut records = Vec::new();
    let mut failures = BTreeMap::new();
    for ((q, prompt), output) in queries.iter().zip(&prompts).zip(outputs) {
        match output {
            Ok(text) => records.push(GenerationRecord::new(&q.id, prompt, text)),
            Err(e) => {
                failures.insert(q.id.clone(), e.to_string());
            }
        }
    }
    report::write_generations(&out, &records)?;
    log::info!("wrote {} generations to {}", records.len(), out.display());
    let tokens: usize = records.iter().map(|r| r.prompt_tokens).sum();
    log::info!("total prompt tokens (whitespace): {tokens}");
    if let Some((id, msg)) = failures.iter().next() {
        return Err(Error::Backend {
            status: None,
            message: format!("{} of {} generations failed; first ({id}): {msg}", failures.len(), queries.len()),
        });
    }
    Ok(())
}

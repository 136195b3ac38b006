//! Evaluation protocol: answer-containment recall, rank percentiles, alpha
//! sweeps, short-answer accuracy and ROUGE-L.
//!
//! An item "contains the answer" when some normalized gold answer is a
//! substring of the normalized item text. Normalization lowercases, splits on
//! whitespace, strips punctuation from the edges of every token and rejoins
//! with single spaces.

use alloc::collections::BTreeMap;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::corpus::{Corpus, WhitespaceTokenizer, Tokenizer};
use crate::encoder::{Alpha, Encoder};
use crate::error::{Error, Result};
use crate::pipeline::{Query, RetrievalResult, Retriever, SentenceVectors};

/// Maximum word count for a generated short answer to be scored correct.
pub const SHORT_ANSWER_MAX_WORDS: usize = 15;

/// Width of a rank-percentile histogram bin.
pub const PERCENTILE_BIN_WIDTH: f64 = 5.0;

fn normalized_tokens(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split_whitespace()
        .map(|t| t.trim_matches(|c: char| !c.is_alphanumeric()).to_lowercase())
        .filter(|t| !t.is_empty())
}

pub fn normalize(text: &str) -> String {
    let mut out = String::new();
    for tok in normalized_tokens(text) {
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(&tok);
    }
    out
}

/// True when any answer, normalized, occurs inside the normalized text.
/// Answers that normalize to nothing never match.
pub fn contains_answer<S: AsRef<str>>(text: &str, answers: &[S]) -> bool {
    let hay = normalize(text);
    answers.iter().any(|a| {
        let needle = normalize(a.as_ref());
        !needle.is_empty() && hay.contains(needle.as_str())
    })
}

/// 1-based rank of the first item containing an answer.
pub fn first_hit_rank<S: AsRef<str>>(result: &RetrievalResult, answers: &[S]) -> Option<usize> {
    result
        .items
        .iter()
        .position(|item| contains_answer(&item.text, answers))
        .map(|i| i + 1)
}

/// `100 * first_hit_rank / items`, or `-1.0` when no item contains an answer.
pub fn rank_percentile<S: AsRef<str>>(result: &RetrievalResult, answers: &[S]) -> f64 {
    match first_hit_rank(result, answers) {
        Some(rank) => 100.0 * rank as f64 / result.items.len() as f64,
        None => -1.0,
    }
}

fn gold_for<'g>(gold: &'g BTreeMap<String, Vec<String>>, query_id: &str) -> Result<&'g [String]> {
    match gold.get(query_id) {
        Some(answers) if !answers.is_empty() => Ok(answers),
        _ => Err(Error::MissingGold(String::from(query_id))),
    }
}

/// Fraction of results with an answer among their first `min(k, len)` items.
pub fn recall_at_k(results: &[RetrievalResult], gold: &BTreeMap<String, Vec<String>>, k: usize) -> Result<f64> {
    if k < 1 {
        return Err(Error::BadK);
    }
    if results.is_empty() {
        return Ok(0.0);
    }
    let mut hits = 0usize;
    for r in results {
        let answers = gold_for(gold, &r.query_id)?;
        if r.items.iter().take(k).any(|item| contains_answer(&item.text, answers)) {
            hits += 1;
        }
    }
    Ok(hits as f64 / results.len() as f64)
}

/// 1 when the generation contains an answer and is at most
/// [`SHORT_ANSWER_MAX_WORDS`] whitespace words long, else 0.
pub fn short_answer_accuracy<S: AsRef<str>>(generated: &str, answers: &[S]) -> u8 {
    let words = WhitespaceTokenizer.count_tokens(generated);
    u8::from(words <= SHORT_ANSWER_MAX_WORDS && contains_answer(generated, answers))
}

fn lcs_len(a: &[String], b: &[String]) -> usize {
    let mut prev = vec![0usize; b.len() + 1];
    let mut cur = vec![0usize; b.len() + 1];
    for x in a {
        for (j, y) in b.iter().enumerate() {
            cur[j + 1] = if x == y { prev[j] + 1 } else { cur[j].max(prev[j + 1]) };
        }
        core::mem::swap(&mut prev, &mut cur);
    }
    prev[b.len()]
}

/// ROUGE-L F1 over normalized tokens.
pub fn rouge_l(candidate: &str, reference: &str) -> f64 {
    let cand: Vec<String> = normalized_tokens(candidate).collect();
    let reference: Vec<String> = normalized_tokens(reference).collect();
    if cand.is_empty() || reference.is_empty() {
        return 0.0;
    }
    let lcs = lcs_len(&cand, &reference) as f64;
    if lcs == 0.0 {
        return 0.0;
    }
    let p = lcs / cand.len() as f64;
    let r = lcs / reference.len() as f64;
    2.0 * p * r / (p + r)
}

/// Best ROUGE-L against any of several references.
pub fn rouge_l_max<S: AsRef<str>>(candidate: &str, references: &[S]) -> f64 {
    references
        .iter()
        .map(|r| rouge_l(candidate, r.as_ref()))
        .fold(0.0, f64::max)
}

/// Rank percentiles in 5-point bins `(0,5], (5,10], ..., (95,100]` plus a
/// bucket for misses.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RankHistogram {
    pub misses: usize,
    pub bins: [usize; 20],
}

impl RankHistogram {
    pub fn add(&mut self, percentile: f64) {
        if percentile < 0.0 {
            self.misses += 1;
            return;
        }
        let mut bin = libm::ceil(percentile / PERCENTILE_BIN_WIDTH) as usize;
        bin = bin.clamp(1, self.bins.len());
        self.bins[bin - 1] += 1;
    }

    /// `(lower, upper]` bounds of bin `i`.
    pub fn bin_bounds(i: usize) -> (f64, f64) {
        (i as f64 * PERCENTILE_BIN_WIDTH, (i + 1) as f64 * PERCENTILE_BIN_WIDTH)
    }

    pub fn total(&self) -> usize {
        self.misses + self.bins.iter().sum::<usize>()
    }
}

impl FromIterator<f64> for RankHistogram {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut h = Self::default();
        iter.into_iter().for_each(|p| h.add(p));
        h
    }
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct QueryRecord {
    pub query_id: String,
    pub first_hit_rank: Option<usize>,
    pub rank_percentile: f64,
    pub token_total: usize,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub accuracy: Option<u8>,
    #[cfg_attr(feature = "serde", serde(skip_serializing_if = "Option::is_none", default))]
    pub rouge_l: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Aggregates {
    pub recall_at_k: BTreeMap<usize, f64>,
    /// Recall over each query's full returned list.
    pub mean_recall: f64,
    pub accuracy: Option<f64>,
    pub rouge_l: Option<f64>,
    pub mean_tokens: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct EvalReport {
    pub per_query: Vec<QueryRecord>,
    pub aggregate: Aggregates,
}

impl EvalReport {
    pub fn histogram(&self) -> RankHistogram {
        self.per_query.iter().map(|r| r.rank_percentile).collect()
    }
}

/// Scores retrieval results (and, when given, generations keyed by query id)
/// against the gold answers.
pub fn evaluate(
    results: &[RetrievalResult],
    gold: &BTreeMap<String, Vec<String>>,
    ks: &[usize],
    generations: Option<&BTreeMap<String, String>>,
) -> Result<EvalReport> {
    let mut per_query = Vec::with_capacity(results.len());
    let mut any_hit = 0usize;
    let mut acc_sum = 0.0;
    let mut rouge_sum = 0.0;
    let mut gen_count = 0usize;
    for r in results {
        let answers = gold_for(gold, &r.query_id)?;
        let first = first_hit_rank(r, answers);
        any_hit += usize::from(first.is_some());
        let (accuracy, rouge) = match generations.and_then(|g| g.get(&r.query_id)) {
            Some(text) => {
                let a = short_answer_accuracy(text, answers);
                let rl = rouge_l_max(text, answers);
                acc_sum += f64::from(a);
                rouge_sum += rl;
                gen_count += 1;
                (Some(a), Some(rl))
            }
            None => (None, None),
        };
        per_query.push(QueryRecord {
            query_id: r.query_id.clone(),
            first_hit_rank: first,
            rank_percentile: rank_percentile(r, answers),
            token_total: r.token_total,
            accuracy,
            rouge_l: rouge,
        });
    }
    let n = results.len().max(1) as f64;
    let mut recall = BTreeMap::new();
    for &k in ks {
        recall.insert(k, recall_at_k(results, gold, k)?);
    }
    let mean_of = |sum: f64| (gen_count > 0).then(|| sum / gen_count as f64);
    Ok(EvalReport {
        aggregate: Aggregates {
            recall_at_k: recall,
            mean_recall: any_hit as f64 / n,
            accuracy: mean_of(acc_sum),
            rouge_l: mean_of(rouge_sum),
            mean_tokens: per_query.iter().map(|r| r.token_total as f64).sum::<f64>() / n,
        },
        per_query,
    })
}

pub fn gold_map(queries: &[Query]) -> BTreeMap<String, Vec<String>> {
    queries
        .iter()
        .map(|q| (q.id.clone(), q.answers.clone()))
        .collect()
}

/// Recall@k for each alpha, over one query set.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct AlphaSweep {
    pub k: usize,
    pub alphas: Vec<f64>,
    pub recall: Vec<f64>,
}

impl AlphaSweep {
    /// `(alpha, recall)` of the first maximum.
    pub fn best(&self) -> Option<(f64, f64)> {
        let mut best: Option<(f64, f64)> = None;
        for (&a, &r) in self.alphas.iter().zip(&self.recall) {
            if best.is_none_or(|(_, br)| r > br) {
                best = Some((a, r));
            }
        }
        best
    }

    pub fn recall_at(&self, alpha: f64) -> Option<f64> {
        self.alphas
            .iter()
            .position(|&a| a == alpha)
            .map(|i| self.recall[i])
    }
}

/// Recall@k of the sentence index composed at `alpha`.
pub fn recall_for_alpha(
    vectors: &SentenceVectors,
    corpus: &Corpus,
    encoder: &dyn Encoder,
    queries: &[Query],
    alpha: Alpha,
    k: usize,
) -> Result<f64> {
    let index = vectors.to_index(alpha)?;
    let retriever = Retriever::new(&index, corpus, encoder)?;
    let results = retriever.retrieve_all(queries, k)?;
    recall_at_k(&results, &gold_map(queries), k)
}

/// Sweeps alpha over pre-encoded unit vectors. Core and context embeddings
/// are reused across every alpha; only the composition is redone.
pub fn sweep_alpha_cached(
    vectors: &SentenceVectors,
    corpus: &Corpus,
    encoder: &dyn Encoder,
    queries: &[Query],
    alphas: &[Alpha],
    k: usize,
) -> Result<AlphaSweep> {
    if k < 1 {
        return Err(Error::BadK);
    }
    let mut alphas = alphas.to_vec();
    alphas.sort_by(|a, b| a.value().total_cmp(&b.value()));
    let recall = map_alphas(&alphas, |a| recall_for_alpha(vectors, corpus, encoder, queries, a, k))?;
    Ok(AlphaSweep {
        k,
        alphas: alphas.iter().map(|a| a.value()).collect(),
        recall,
    })
}

pub fn sweep_alpha(
    corpus: &Corpus,
    encoder: &dyn Encoder,
    queries: &[Query],
    alphas: &[Alpha],
    k: usize,
    batch_size: usize,
) -> Result<AlphaSweep> {
    let vectors = SentenceVectors::encode(corpus, encoder, batch_size)?;
    sweep_alpha_cached(&vectors, corpus, encoder, queries, alphas, k)
}

#[cfg(feature = "parallel")]
fn map_alphas<F>(alphas: &[Alpha], f: F) -> Result<Vec<f64>>
where
    F: Fn(Alpha) -> Result<f64> + Sync + Send,
{
    use rayon::prelude::*;
    alphas.par_iter().map(|&a| f(a)).collect()
}

#[cfg(not(feature = "parallel"))]
fn map_alphas<F>(alphas: &[Alpha], f: F) -> Result<Vec<f64>>
where
    F: Fn(Alpha) -> Result<f64> + Sync + Send,
{
    alphas.iter().map(|&a| f(a)).collect()
}

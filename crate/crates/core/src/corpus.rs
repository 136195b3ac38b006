//! Passages, their decomposition into sentence units, and corpus statistics.

use alloc::collections::BTreeMap;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::segment::segment;

/// One retrievable document of the raw corpus.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Passage {
    pub id: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub title: String,
    pub text: String,
}

impl Passage {
    pub fn new(id: impl Into<String>, title: impl Into<String>, text: impl Into<String>) -> Self {
        Self {
            id: id.into(),
            title: title.into(),
            text: text.into(),
        }
    }
}

/// A core sentence together with the rest of its passage.
///
/// `context_text` is `None` exactly when the passage has a single sentence.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct SentenceUnit {
    pub passage_id: String,
    pub sent_index: usize,
    #[cfg_attr(feature = "serde", serde(rename = "core"))]
    pub core_text: String,
    #[cfg_attr(feature = "serde", serde(rename = "context"))]
    pub context_text: Option<String>,
}

/// Decomposes a passage into one unit per sentence.
///
/// The context of sentence `i` is every other sentence of the passage, in
/// order, joined by single spaces.
pub fn decompose(passage: &Passage) -> Result<Vec<SentenceUnit>> {
    let sentences = segment(&passage.text)?;
    Ok(units_from_sentences(&passage.id, &sentences))
}

pub(crate) fn units_from_sentences(passage_id: &str, sentences: &[&str]) -> Vec<SentenceUnit> {
    let n = sentences.len();
    sentences
        .iter()
        .enumerate()
        .map(|(i, core)| {
            let context_text = (n > 1).then(|| {
                let mut ctx = String::new();
                for (j, s) in sentences.iter().enumerate() {
                    if j == i {
                        continue;
                    }
                    if !ctx.is_empty() {
                        ctx.push(' ');
                    }
                    ctx.push_str(s);
                }
                ctx
            });
            SentenceUnit {
                passage_id: passage_id.to_string(),
                sent_index: i,
                core_text: core.to_string(),
                context_text,
            }
        })
        .collect()
}

/// Token counting hook used for corpus statistics and retrieval token totals.
pub trait Tokenizer: Sync {
    fn count_tokens(&self, text: &str) -> usize;
}

/// Counts whitespace-separated tokens.
#[derive(Debug, Clone, Copy, Default)]
pub struct WhitespaceTokenizer;

impl Tokenizer for WhitespaceTokenizer {
    fn count_tokens(&self, text: &str) -> usize {
        text.split_whitespace().count()
    }
}

impl<F: Fn(&str) -> usize + Sync> Tokenizer for F {
    fn count_tokens(&self, text: &str) -> usize {
        self(text)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CorpusStats {
    pub passage_count: usize,
    pub unit_count: usize,
    pub mean_tokens_per_passage: f64,
    pub mean_tokens_per_unit: f64,
}

/// Running accumulator for [`CorpusStats`], fed one passage at a time.
#[derive(Debug, Clone, Default)]
pub struct StatsAccumulator {
    passages: usize,
    units: usize,
    passage_tokens: u64,
    unit_tokens: u64,
}

impl StatsAccumulator {
    pub fn add(&mut self, passage: &Passage, sentences: &[&str], tokenizer: &dyn Tokenizer) {
        self.passages += 1;
        self.units += sentences.len();
        self.passage_tokens += tokenizer.count_tokens(&passage.text) as u64;
        self.unit_tokens += sentences
            .iter()
            .map(|s| tokenizer.count_tokens(s) as u64)
            .sum::<u64>();
    }

    pub fn finish(&self) -> CorpusStats {
        let mean = |total: u64, count: usize| {
            if count == 0 {
                0.0
            } else {
                total as f64 / count as f64
            }
        };
        CorpusStats {
            passage_count: self.passages,
            unit_count: self.units,
            mean_tokens_per_passage: mean(self.passage_tokens, self.passages),
            mean_tokens_per_unit: mean(self.unit_tokens, self.units),
        }
    }
}

/// A validated collection of passages with their segmentation cached.
///
/// Passage ids are unique and every passage has at least one sentence.
#[derive(Debug, Clone)]
pub struct Corpus {
    passages: Vec<Passage>,
    // Byte ranges of each passage's sentences inside `passages[i].text`.
    sentence_spans: Vec<Vec<(usize, usize)>>,
    by_id: BTreeMap<String, usize>,
}

impl Corpus {
    pub fn new(passages: Vec<Passage>) -> Result<Self> {
        let mut by_id = BTreeMap::new();
        let mut sentence_spans = Vec::with_capacity(passages.len());
        for (position, passage) in passages.iter().enumerate() {
            if by_id.insert(passage.id.clone(), position).is_some() {
                return Err(Error::DuplicateId {
                    id: passage.id.clone(),
                    position,
                });
            }
            let base = passage.text.as_ptr() as usize;
            let spans = segment(&passage.text)?
                .into_iter()
                .map(|s| {
                    let start = s.as_ptr() as usize - base;
                    (start, start + s.len())
                })
                .collect();
            sentence_spans.push(spans);
        }
        Ok(Self {
            passages,
            sentence_spans,
            by_id,
        })
    }

    pub fn len(&self) -> usize {
        self.passages.len()
    }

    pub fn is_empty(&self) -> bool {
        self.passages.is_empty()
    }

    pub fn passages(&self) -> &[Passage] {
        &self.passages
    }

    pub fn passage(&self, id: &str) -> Option<&Passage> {
        self.by_id.get(id).map(|&i| &self.passages[i])
    }

    /// Sentences of the passage at `position`.
    pub fn sentences_at(&self, position: usize) -> Vec<&str> {
        let text = &self.passages[position].text;
        self.sentence_spans[position]
            .iter()
            .map(|&(a, b)| &text[a..b])
            .collect()
    }

    pub fn sentence(&self, passage_id: &str, sent_index: usize) -> Option<&str> {
        let &position = self.by_id.get(passage_id)?;
        let &(a, b) = self.sentence_spans[position].get(sent_index)?;
        Some(&self.passages[position].text[a..b])
    }

    /// All sentence units, passage by passage, in corpus order.
    pub fn units(&self) -> Vec<SentenceUnit> {
        (0..self.passages.len())
            .flat_map(|i| units_from_sentences(&self.passages[i].id, &self.sentences_at(i)))
            .collect()
    }

    pub fn unit_count(&self) -> usize {
        self.sentence_spans.iter().map(Vec::len).sum()
    }

    pub fn stats(&self, tokenizer: &dyn Tokenizer) -> CorpusStats {
        let mut acc = StatsAccumulator::default();
        for i in 0..self.passages.len() {
            acc.add(&self.passages[i], &self.sentences_at(i), tokenizer);
        }
        acc.finish()
    }
}

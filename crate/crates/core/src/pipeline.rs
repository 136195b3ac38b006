//! End-to-end retrieval in sentence mode (weighted sentence units) and
//! passage mode (whole passages, the baseline).

use alloc::format;
use alloc::string::String;
use alloc::vec::Vec;

use crate::corpus::{Corpus, Tokenizer, WhitespaceTokenizer};
use crate::encoder::{compose_weighted, encode_all, Alpha, DenseVector, EncodeItem, Encoder, TextKey};
use crate::error::{Error, Result};
use crate::index::{Hit, IndexBuilder, IndexMode, RowMeta, VectorIndex};

#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Query {
    pub id: String,
    pub question: String,
    #[cfg_attr(feature = "serde", serde(default))]
    pub answers: Vec<String>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RetrievedItem {
    pub text: String,
    pub passage_id: String,
    pub sent_index: Option<usize>,
    pub score: f64,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RetrievalResult {
    pub query_id: String,
    pub mode: IndexMode,
    pub items: Vec<RetrievedItem>,
    pub token_total: usize,
}

impl RetrievalResult {
    pub fn texts(&self) -> impl Iterator<Item = &str> {
        self.items.iter().map(|i| i.text.as_str())
    }
}

/// Core and context embeddings of every sentence unit, encoded once so the
/// weighted index can be recomposed for any alpha.
#[derive(Debug, Clone)]
pub struct SentenceVectors {
    backend_id: String,
    meta: Vec<RowMeta>,
    core: Vec<DenseVector>,
    context: Vec<Option<DenseVector>>,
}

impl SentenceVectors {
    pub fn encode(corpus: &Corpus, encoder: &dyn Encoder, batch_size: usize) -> Result<Self> {
        let units = corpus.units();
        let core_items: Vec<EncodeItem<'_>> = units
            .iter()
            .map(|u| EncodeItem {
                key: TextKey::Core {
                    passage_id: &u.passage_id,
                    sent_index: u.sent_index,
                },
                text: &u.core_text,
            })
            .collect();
        let context_items: Vec<EncodeItem<'_>> = units
            .iter()
            .filter_map(|u| {
                u.context_text.as_deref().map(|text| EncodeItem {
                    key: TextKey::Context {
                        passage_id: &u.passage_id,
                        sent_index: u.sent_index,
                    },
                    text,
                })
            })
            .collect();
        let core = encode_all(encoder, &core_items, batch_size)?;
        let mut context_vectors = encode_all(encoder, &context_items, batch_size)?.into_iter();
        let context = units
            .iter()
            .map(|u| u.context_text.as_ref().and_then(|_| context_vectors.next()))
            .collect();
        let meta = units
            .iter()
            .map(|u| RowMeta {
                passage_id: u.passage_id.clone(),
                sent_index: Some(u.sent_index),
            })
            .collect();
        Ok(Self {
            backend_id: String::from(encoder.backend_id()),
            meta,
            core,
            context,
        })
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    /// Composes every unit at `alpha` into a sentence-mode index, in corpus
    /// order.
    pub fn to_index(&self, alpha: Alpha) -> Result<VectorIndex> {
        let mut builder = IndexBuilder::new(IndexMode::Sentence, Some(alpha), self.backend_id.clone());
        for ((meta, core), context) in self.meta.iter().zip(&self.core).zip(&self.context) {
            let weighted = compose_weighted(core, context.as_ref(), alpha)?;
            builder.push(meta.clone(), &weighted)?;
        }
        builder.finish()
    }
}

/// One row per sentence unit holding its weighted embedding. Single-sentence
/// passages are indexed with their raw core vector.
pub fn build_sentence_index(
    corpus: &Corpus,
    encoder: &dyn Encoder,
    alpha: Alpha,
    batch_size: usize,
) -> Result<VectorIndex> {
    SentenceVectors::encode(corpus, encoder, batch_size)?.to_index(alpha)
}

/// One row per passage, embedding the full passage text.
pub fn build_passage_index(corpus: &Corpus, encoder: &dyn Encoder, batch_size: usize) -> Result<VectorIndex> {
    let items: Vec<EncodeItem<'_>> = corpus
        .passages()
        .iter()
        .map(|p| EncodeItem {
            key: TextKey::Passage { passage_id: &p.id },
            text: &p.text,
        })
        .collect();
    let vectors = encode_all(encoder, &items, batch_size)?;
    let mut builder = IndexBuilder::new(IndexMode::Passage, None, encoder.backend_id());
    for (p, v) in corpus.passages().iter().zip(&vectors) {
        builder.push(
            RowMeta {
                passage_id: p.id.clone(),
                sent_index: None,
            },
            v,
        )?;
    }
    builder.finish()
}

/// Answers queries against one index, resolving rows back to corpus text.
pub struct Retriever<'a> {
    index: &'a VectorIndex,
    corpus: &'a Corpus,
    encoder: &'a dyn Encoder,
    tokenizer: &'a dyn Tokenizer,
}

impl<'a> Retriever<'a> {
    /// Checks that `encoder` is the backend the index was built with and that
    /// every index row resolves in `corpus`.
    pub fn new(index: &'a VectorIndex, corpus: &'a Corpus, encoder: &'a dyn Encoder) -> Result<Self> {
        if encoder.backend_id() != index.backend_id() {
            return Err(Error::IncompatibleIndex(format!(
                "index built with backend {:?}, query encoder is {:?}",
                index.backend_id(),
                encoder.backend_id()
            )));
        }
        if encoder.dim() != index.dim() {
            return Err(Error::IncompatibleIndex(format!(
                "index dim {} but encoder dim {}",
                index.dim(),
                encoder.dim()
            )));
        }
        for m in index.meta() {
            let found = match m.sent_index {
                Some(i) => corpus.sentence(&m.passage_id, i).is_some(),
                None => corpus.passage(&m.passage_id).is_some(),
            };
            if !found {
                return Err(Error::UnknownPassage(m.passage_id.clone()));
            }
        }
        Ok(Self {
            index,
            corpus,
            encoder,
            tokenizer: &WhitespaceTokenizer,
        })
    }

    pub fn with_tokenizer(mut self, tokenizer: &'a dyn Tokenizer) -> Self {
        self.tokenizer = tokenizer;
        self
    }

    pub fn index(&self) -> &VectorIndex {
        self.index
    }

    pub fn encode_query(&self, query_id: &str, text: &str) -> Result<DenseVector> {
        let item = EncodeItem {
            key: TextKey::Query { id: query_id },
            text,
        };
        let mut out = encode_all(self.encoder, &[item], 1)?;
        Ok(out.remove(0))
    }

    fn resolve(&self, query_id: &str, hits: &[Hit]) -> RetrievalResult {
        let items: Vec<RetrievedItem> = hits
            .iter()
            .map(|h| {
                let m = &self.index.meta()[h.row];
                // Rows were checked against the corpus in `new`.
                let text = match m.sent_index {
                    Some(i) => self.corpus.sentence(&m.passage_id, i).unwrap_or_default(),
                    None => self.corpus.passage(&m.passage_id).map_or("", |p| p.text.as_str()),
                };
                RetrievedItem {
                    text: String::from(text),
                    passage_id: m.passage_id.clone(),
                    sent_index: m.sent_index,
                    score: h.score,
                }
            })
            .collect();
        let token_total = items.iter().map(|i| self.tokenizer.count_tokens(&i.text)).sum();
        RetrievalResult {
            query_id: String::from(query_id),
            mode: self.index.mode(),
            items,
            token_total,
        }
    }

    /// Top-`k` items: core sentences in sentence mode, whole passages in
    /// passage mode.
    pub fn retrieve(&self, query_id: &str, query_text: &str, k: usize) -> Result<RetrievalResult> {
        if k < 1 {
            return Err(Error::BadK);
        }
        let q = self.encode_query(query_id, query_text)?;
        let hits = self.index.search(&q, k)?;
        Ok(self.resolve(query_id, &hits))
    }

    /// The longest ranked prefix whose whitespace word count stays within
    /// `budget_words`. The first item is always kept, even when it alone
    /// exceeds the budget; items are never truncated.
    pub fn retrieve_word_budget(&self, query_id: &str, query_text: &str, budget_words: usize) -> Result<RetrievalResult> {
        if budget_words < 1 {
            return Err(Error::BadBudget);
        }
        let q = self.encode_query(query_id, query_text)?;
        let ranked = self.index.rank_all(&q)?;
        let meta = self.index.meta();
        let mut used = 0usize;
        let mut take = 0usize;
        for h in &ranked {
            let m = &meta[h.row];
            let text = match m.sent_index {
                Some(i) => self.corpus.sentence(&m.passage_id, i).unwrap_or_default(),
                None => self.corpus.passage(&m.passage_id).map_or("", |p| p.text.as_str()),
            };
            let words = WhitespaceTokenizer.count_tokens(text);
            if take > 0 && used + words > budget_words {
                break;
            }
            used += words;
            take += 1;
        }
        Ok(self.resolve(query_id, &ranked[..take]))
    }

    /// Runs [`Retriever::retrieve`] for every query, keeping input order.
    pub fn retrieve_all(&self, queries: &[Query], k: usize) -> Result<Vec<RetrievalResult>> {
        self.map_queries(queries, |q| self.retrieve(&q.id, &q.question, k))
    }

    pub fn retrieve_all_word_budget(&self, queries: &[Query], budget_words: usize) -> Result<Vec<RetrievalResult>> {
        self.map_queries(queries, |q| self.retrieve_word_budget(&q.id, &q.question, budget_words))
    }

    #[cfg(feature = "parallel")]
    fn map_queries<F>(&self, queries: &[Query], f: F) -> Result<Vec<RetrievalResult>>
    where
        F: Fn(&Query) -> Result<RetrievalResult> + Sync + Send,
    {
        use rayon::prelude::*;
        queries.par_iter().map(f).collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn map_queries<F>(&self, queries: &[Query], f: F) -> Result<Vec<RetrievalResult>>
    where
        F: Fn(&Query) -> Result<RetrievalResult> + Sync + Send,
    {
        queries.iter().map(f).collect()
    }
}

//! Sentence-granular dense retrieval.
//!
//! Passages are split into sentences; every sentence becomes a retrieval unit
//! whose embedding is a convex mix of the sentence's own vector and the vector
//! of its passage-mates:
//!
//! ```text
//! weighted = alpha * core + (1 - alpha) * context      (context present)
//! weighted = core                                      (single-sentence passage)
//! ```
//!
//! Units are scored against the query by plain dot product and ranked with an
//! exact top-k scan. A passage-level index built from whole passages serves as
//! the baseline, and [`metrics`] carries the evaluation protocol (answer
//! containment recall, rank percentiles, alpha sweeps, short-answer accuracy,
//! ROUGE-L).
//!
//! The crate is `no_std` + `alloc`. The `parallel` feature pulls in `std` and
//! rayon for block-parallel scans and parallel alpha sweeps; results are
//! identical to the sequential paths. File formats, HTTP backends and the CLI
//! live in the companion `paretorag` crate.
#![cfg_attr(not(feature = "parallel"), no_std)]

extern crate alloc;

pub mod corpus;
pub mod encoder;
pub mod error;
pub mod index;
pub mod metrics;
pub mod pipeline;
pub mod prompt;
pub mod segment;

pub use corpus::{Corpus, CorpusStats, Passage, SentenceUnit, Tokenizer, WhitespaceTokenizer};
pub use encoder::{compose_weighted, dot, Alpha, DenseVector, EncodeItem, Encoder, HashEncoder, TextKey};
pub use error::{Error, Result};
pub use index::{Hit, IndexBuilder, IndexMode, RowMeta, VectorIndex};
pub use pipeline::{build_passage_index, build_sentence_index, Query, RetrievalResult, RetrievedItem, Retriever, SentenceVectors};
pub use segment::segment;

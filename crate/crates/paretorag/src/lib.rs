//! IO, file formats, HTTP backends and the command-line front end for
//! `pareto-core`.
//!
//! File formats:
//!
//! * corpus JSONL: `{"id", "title", "text"}` per line ([`corpus_io`])
//! * query JSONL: `{"id", "question", "answers"}` per line ([`corpus_io`])
//! * precomputed embeddings: `PVEC` binary + key sidecar JSONL ([`pvec`])
//! * index: `vectors.bin` + `meta.jsonl` + `header.json` ([`index_io`])
//! * reports, sweep CSV, histograms, result and generation dumps ([`report`])

pub mod atomic;
pub mod cli;
pub mod config;
pub mod corpus_io;
pub mod encoders;
pub mod error;
pub mod genclient;
pub mod index_io;
pub mod pvec;
pub mod report;

pub use error::{Error, Result};

//! Report, sweep CSV, histogram and dump writers.

use std::collections::BTreeMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::Path;

use pareto_core::metrics::{AlphaSweep, EvalReport, RankHistogram};
use pareto_core::{IndexMode, RetrievalResult, RetrievedItem};
use serde::{Deserialize, Serialize};

use crate::atomic;
use crate::error::{Error, Result};
use crate::genclient::GenerationRecord;

fn json_err(e: serde_json::Error) -> Error {
    Error::Format(e.to_string())
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value).map_err(json_err)?;
    bytes.push(b'\n');
    atomic::write_bytes(path, &bytes)
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl IntoIterator<Item = T>) -> Result<()> {
    atomic::write_with(path, |w| {
        for row in rows {
            serde_json::to_writer(&mut *w, &row).map_err(json_err)?;
            w.write_all(b"\n").map_err(|e| Error::io(path, e))?;
        }
        Ok(())
    })
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(out)
}

pub fn write_report(path: &Path, report: &EvalReport) -> Result<()> {
    write_json(path, report)
}

pub fn read_report(path: &Path) -> Result<EvalReport> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(json_err)
}

/// `alpha,recall` header plus one row per alpha, ascending.
pub fn sweep_csv(sweep: &AlphaSweep) -> String {
    let mut out = String::from("alpha,recall\n");
    for (a, r) in sweep.alphas.iter().zip(&sweep.recall) {
        out.push_str(&format!("{a},{r}\n"));
    }
    out
}

pub fn write_sweep_csv(path: &Path, sweep: &AlphaSweep) -> Result<()> {
    atomic::write_bytes(path, sweep_csv(sweep).as_bytes())
}

#[derive(Debug, Serialize)]
struct HistogramBin {
    lo: f64,
    hi: f64,
    count: usize,
}

#[derive(Debug, Serialize)]
struct HistogramDump {
    misses: usize,
    bins: Vec<HistogramBin>,
}

/// Rank-percentile histogram as JSON: `{"misses", "bins": [{"lo", "hi", "count"}]}`
/// with bins `(lo, hi]`.
pub fn write_histogram(path: &Path, hist: &RankHistogram) -> Result<()> {
    let dump = HistogramDump {
        misses: hist.misses,
        bins: hist
            .bins
            .iter()
            .enumerate()
            .map(|(i, &count)| {
                let (lo, hi) = RankHistogram::bin_bounds(i);
                HistogramBin { lo, hi, count }
            })
            .collect(),
    };
    write_json(path, &dump)
}

/// One line of the result dump.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ResultRecord {
    pub query_id: String,
    pub mode: IndexMode,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub k: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub budget_words: Option<usize>,
    pub items: Vec<RetrievedItem>,
    pub token_total: usize,
}

impl ResultRecord {
    pub fn new(result: &RetrievalResult, k: Option<usize>, budget_words: Option<usize>) -> Self {
        Self {
            query_id: result.query_id.clone(),
            mode: result.mode,
            k,
            budget_words,
            items: result.items.clone(),
            token_total: result.token_total,
        }
    }

    pub fn into_result(self) -> RetrievalResult {
        RetrievalResult {
            query_id: self.query_id,
            mode: self.mode,
            items: self.items,
            token_total: self.token_total,
        }
    }
}

pub fn write_results(path: &Path, results: &[RetrievalResult], k: Option<usize>, budget_words: Option<usize>) -> Result<()> {
    write_jsonl(path, results.iter().map(|r| ResultRecord::new(r, k, budget_words)))
}

pub fn read_results(path: &Path) -> Result<Vec<RetrievalResult>> {
    Ok(read_jsonl::<ResultRecord>(path)?
        .into_iter()
        .map(ResultRecord::into_result)
        .collect())
}

pub fn write_generations(path: &Path, records: &[GenerationRecord]) -> Result<()> {
    write_jsonl(path, records)
}

pub fn read_generations(path: &Path) -> Result<BTreeMap<String, String>> {
    Ok(read_jsonl::<GenerationRecord>(path)?
        .into_iter()
        .map(|g| (g.query_id, g.output))
        .collect())
}

//! Corpus and query JSONL readers, plus the sentence-unit dump.

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, Write};
use std::path::Path;

use pareto_core::corpus::{decompose, StatsAccumulator};
use pareto_core::segment::segment;
use pareto_core::{Corpus, CorpusStats, Passage, Query, SentenceUnit, Tokenizer, WhitespaceTokenizer};

use crate::atomic;
use crate::error::{Error, Result};

/// Streams passages from corpus JSONL in file order.
///
/// Blank lines are skipped. Line numbers in errors are 1-based. Statistics
/// over everything read so far are available from [`PassageReader::stats`].
pub struct PassageReader<'t, R> {
    lines: std::io::Lines<R>,
    line: usize,
    seen: HashSet<String>,
    stats: StatsAccumulator,
    tokenizer: &'t dyn Tokenizer,
}

impl<R: BufRead> PassageReader<'static, R> {
    pub fn new(reader: R) -> Self {
        Self::with_tokenizer(reader, &WhitespaceTokenizer)
    }
}

impl<'t, R: BufRead> PassageReader<'t, R> {
    pub fn with_tokenizer(reader: R, tokenizer: &'t dyn Tokenizer) -> Self {
        Self {
            lines: reader.lines(),
            line: 0,
            seen: HashSet::new(),
            stats: StatsAccumulator::default(),
            tokenizer,
        }
    }

    pub fn stats(&self) -> CorpusStats {
        self.stats.finish()
    }

    fn parse(&mut self, raw: &str) -> Result<Passage> {
        let line = self.line;
        let passage: Passage = serde_json::from_str(raw).map_err(|e| Error::Record {
            line,
            message: e.to_string(),
        })?;
        let sentences = segment(&passage.text).map_err(|e| Error::Record {
            line,
            message: format!("passage {:?}: {e}", passage.id),
        })?;
        if !self.seen.insert(passage.id.clone()) {
            return Err(Error::DuplicateId { line, id: passage.id });
        }
        self.stats.add(&passage, &sentences, self.tokenizer);
        Ok(passage)
    }
}

impl<R: BufRead> Iterator for PassageReader<'_, R> {
    type Item = Result<Passage>;

    fn next(&mut self) -> Option<Self::Item> {
        loop {
            let raw = match self.lines.next()? {
                Ok(raw) => raw,
                Err(e) => {
                    return Some(Err(Error::Record {
                        line: self.line + 1,
                        message: e.to_string(),
                    }))
                }
            };
            self.line += 1;
            if raw.trim().is_empty() {
                continue;
            }
            return Some(self.parse(&raw));
        }
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path).map(BufReader::new).map_err(|e| Error::io(path, e))
}

/// Reads a whole corpus file.
pub fn ingest(path: &Path) -> Result<(Vec<Passage>, CorpusStats)> {
    let mut reader = PassageReader::new(open(path)?);
    let passages = reader.by_ref().collect::<Result<Vec<_>>>()?;
    Ok((passages, reader.stats()))
}

pub fn load_corpus(path: &Path) -> Result<Corpus> {
    let (passages, _) = ingest(path)?;
    Ok(Corpus::new(passages)?)
}

pub fn read_queries(path: &Path) -> Result<Vec<Query>> {
    let mut out = Vec::new();
    let mut seen = HashSet::new();
    for (i, line) in open(path)?.lines().enumerate() {
        let line_no = i + 1;
        let raw = line.map_err(|e| Error::io(path, e))?;
        if raw.trim().is_empty() {
            continue;
        }
        let q: Query = serde_json::from_str(&raw).map_err(|e| Error::Record {
            line: line_no,
            message: e.to_string(),
        })?;
        if !seen.insert(q.id.clone()) {
            return Err(Error::DuplicateId { line: line_no, id: q.id });
        }
        out.push(q);
    }
    Ok(out)
}

/// Writes one JSON object per sentence unit:
/// `{"passage_id", "sent_index", "core", "context"}` (`context` is null for
/// single-sentence passages).
pub fn write_unit_dump(path: &Path, passages: &[Passage]) -> Result<usize> {
    let mut count = 0;
    atomic::write_with(path, |w| {
        for p in passages {
            for unit in decompose(p)? {
                write_unit(w, &unit).map_err(|e| Error::io(path, e))?;
                count += 1;
            }
        }
        Ok(())
    })?;
    Ok(count)
}

fn write_unit(w: &mut dyn Write, unit: &SentenceUnit) -> std::io::Result<()> {
    serde_json::to_writer(&mut *w, unit)?;
    w.write_all(b"\n")
}

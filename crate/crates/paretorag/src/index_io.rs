//! On-disk index: a directory holding `vectors.bin`, `meta.jsonl` and
//! `header.json`.
//!
//! `vectors.bin`, little-endian:
//!
//! ```text
//! b"PRAG" | u32 version = 1 | u32 dim | u64 rows | u8 mode | rows * dim * f32
//! ```
//!
//! `mode` is 0 for sentence indexes and 1 for passage indexes. `meta.jsonl`
//! has one `{"passage_id", "sent_index"}` object per row, and `header.json`
//! records `{"alpha", "backend_id", "built_at"}`.

use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};
use std::time::{SystemTime, UNIX_EPOCH};

use pareto_core::{Alpha, IndexMode, RowMeta, VectorIndex};
use serde::{Deserialize, Serialize};

use crate::atomic;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PRAG";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8 + 1;

pub const VECTORS_FILE: &str = "vectors.bin";
pub const META_FILE: &str = "meta.jsonl";
pub const HEADER_FILE: &str = "header.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Header {
    pub alpha: Option<f64>,
    pub backend_id: String,
    /// Unix seconds.
    pub built_at: u64,
}

#[derive(Serialize, Deserialize)]
struct MetaLine {
    passage_id: String,
    sent_index: Option<usize>,
}

pub fn vectors_path(dir: &Path) -> PathBuf {
    dir.join(VECTORS_FILE)
}

pub fn meta_path(dir: &Path) -> PathBuf {
    dir.join(META_FILE)
}

pub fn header_path(dir: &Path) -> PathBuf {
    dir.join(HEADER_FILE)
}

/// `SOURCE_DATE_EPOCH` when set, else the current time.
pub fn build_timestamp() -> u64 {
    std::env::var("SOURCE_DATE_EPOCH")
        .ok()
        .and_then(|s| s.trim().parse().ok())
        .unwrap_or_else(|| SystemTime::now().duration_since(UNIX_EPOCH).map_or(0, |d| d.as_secs()))
}

pub fn encode_vectors(index: &VectorIndex) -> Vec<u8> {
    let values = index.vectors();
    let mut out = Vec::with_capacity(HEADER_LEN + values.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim() as u32).to_le_bytes());
    out.extend_from_slice(&(index.rows() as u64).to_le_bytes());
    out.push(index.mode().as_byte());
    for v in values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

/// Parses `vectors.bin` into `(dim, mode, values)`.
pub fn decode_vectors(bytes: &[u8]) -> Result<(usize, IndexMode, Vec<f32>)> {
    if bytes.len() >= 4 && &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected PRAG".into()));
    }
    if bytes.len() < HEADER_LEN {
        return Err(Error::TruncatedFile(format!(
            "index header needs {HEADER_LEN} bytes, got {}",
            bytes.len()
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported index version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let rows = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    let mode = IndexMode::from_byte(bytes[20]).ok_or_else(|| Error::Format(format!("unknown index mode {}", bytes[20])))?;
    let expected = rows as u128 * dim as u128 * 4;
    let body = &bytes[HEADER_LEN..];
    if (body.len() as u128) < expected {
        return Err(Error::TruncatedFile(format!(
            "index body has {} bytes, header promises {expected}",
            body.len()
        )));
    }
    if (body.len() as u128) > expected {
        return Err(Error::Format("trailing bytes after index rows".into()));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim, mode, values))
}

/// Writes the three index files into `dir`, creating it if needed. Each file
/// is written atomically.
pub fn save(index: &VectorIndex, dir: &Path, built_at: u64) -> Result<()> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    atomic::write_bytes(&vectors_path(dir), &encode_vectors(index))?;
    let mp = meta_path(dir);
    atomic::write_with(&mp, |w| {
        for m in index.meta() {
            let line = MetaLine {
                passage_id: m.passage_id.clone(),
                sent_index: m.sent_index,
            };
            serde_json::to_writer(&mut *w, &line).map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| Error::io(&mp, e))?;
        }
        Ok(())
    })?;
    let header = Header {
        alpha: index.alpha().map(Alpha::value),
        backend_id: index.backend_id().to_string(),
        built_at,
    };
    let mut json = serde_json::to_vec_pretty(&header).map_err(|e| Error::Format(e.to_string()))?;
    json.push(b'\n');
    atomic::write_bytes(&header_path(dir), &json)
}

pub fn read_header(dir: &Path) -> Result<Header> {
    let path = header_path(dir);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Format(format!("{}: {e}", path.display())))
}

pub fn load(dir: &Path) -> Result<VectorIndex> {
    let vp = vectors_path(dir);
    let bytes = fs::read(&vp).map_err(|e| Error::io(&vp, e))?;
    let (dim, mode, values) = decode_vectors(&bytes)?;
    let header = read_header(dir)?;

    let mp = meta_path(dir);
    let file = fs::File::open(&mp).map_err(|e| Error::io(&mp, e))?;
    let mut meta = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(&mp, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let m: MetaLine = serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?;
        meta.push(RowMeta {
            passage_id: m.passage_id,
            sent_index: m.sent_index,
        });
    }
    if meta.len() * dim != values.len() {
        return Err(Error::TruncatedFile(format!(
            "{} has {} rows, vectors.bin has {}",
            mp.display(),
            meta.len(),
            values.len() / dim.max(1)
        )));
    }
    let alpha = header.alpha.map(Alpha::new).transpose()?;
    Ok(VectorIndex::from_parts(dim, mode, values, meta, alpha, header.backend_id)?)
}

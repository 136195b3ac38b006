//! Precomputed embedding files.
//!
//! Binary layout, little-endian:
//!
//! ```text
//! b"PVEC" | u32 version = 1 | u32 dim | u64 count | count * dim * f32
//! ```
//!
//! A sidecar JSONL lists one [`RowKey`] per row in the same order. Units are
//! keyed by `(passage_id, sent_index)` with kind `core` or `context`, whole
//! passages by id with kind `passage`, and queries by id with kind `query`.

use std::collections::HashMap;
use std::fs;
use std::io::{BufRead, BufReader};
use std::path::{Path, PathBuf};

use pareto_core::{DenseVector, EncodeItem, Encoder, TextKey};
use serde::{Deserialize, Serialize};

use crate::atomic;
use crate::error::{Error, Result};

pub const MAGIC: &[u8; 4] = b"PVEC";
pub const VERSION: u32 = 1;
const HEADER_LEN: usize = 4 + 4 + 4 + 8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum KeyKind {
    Core,
    Context,
    Passage,
    Query,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct RowKey {
    pub kind: KeyKind,
    pub id: String,
    #[serde(default)]
    pub sent_index: Option<usize>,
}

impl From<TextKey<'_>> for RowKey {
    fn from(key: TextKey<'_>) -> Self {
        let (kind, id, sent_index) = match key {
            TextKey::Core { passage_id, sent_index } => (KeyKind::Core, passage_id, Some(sent_index)),
            TextKey::Context { passage_id, sent_index } => (KeyKind::Context, passage_id, Some(sent_index)),
            TextKey::Passage { passage_id } => (KeyKind::Passage, passage_id, None),
            TextKey::Query { id } => (KeyKind::Query, id, None),
        };
        RowKey {
            kind,
            id: id.to_string(),
            sent_index,
        }
    }
}

/// Sidecar path used when none is given: `vectors.pvec` -> `vectors.keys.jsonl`.
pub fn default_keys_path(vectors: &Path) -> PathBuf {
    vectors.with_extension("keys.jsonl")
}

pub fn encode_rows(dim: usize, rows: &[f32]) -> Result<Vec<u8>> {
    if dim == 0 || !rows.len().is_multiple_of(dim) {
        return Err(Error::Format(format!("{} values do not form rows of dim {dim}", rows.len())));
    }
    let count = rows.len() / dim;
    let mut out = Vec::with_capacity(HEADER_LEN + rows.len() * 4);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.extend_from_slice(&(dim as u32).to_le_bytes());
    out.extend_from_slice(&(count as u64).to_le_bytes());
    for v in rows {
        out.extend_from_slice(&v.to_le_bytes());
    }
    Ok(out)
}

/// Parses a PVEC buffer into `(dim, row-major values)`.
pub fn decode_rows(bytes: &[u8]) -> Result<(usize, Vec<f32>)> {
    if bytes.len() < HEADER_LEN {
        if bytes.len() >= 4 && &bytes[..4] != MAGIC {
            return Err(Error::Format("bad magic, expected PVEC".into()));
        }
        return Err(Error::TruncatedFile(format!("PVEC header needs {HEADER_LEN} bytes, got {}", bytes.len())));
    }
    if &bytes[..4] != MAGIC {
        return Err(Error::Format("bad magic, expected PVEC".into()));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != VERSION {
        return Err(Error::Format(format!("unsupported PVEC version {version}")));
    }
    let dim = u32::from_le_bytes(bytes[8..12].try_into().unwrap()) as usize;
    let count = u64::from_le_bytes(bytes[12..20].try_into().unwrap());
    if dim == 0 {
        return Err(Error::Format("PVEC dim is 0".into()));
    }
    let expected = (count as u128) * (dim as u128) * 4;
    let body = &bytes[HEADER_LEN..];
    if (body.len() as u128) < expected {
        return Err(Error::TruncatedFile(format!(
            "PVEC body has {} bytes, header promises {expected}",
            body.len()
        )));
    }
    if (body.len() as u128) > expected {
        return Err(Error::Format("trailing bytes after PVEC rows".into()));
    }
    let values = body
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    Ok((dim, values))
}

/// Writes a PVEC file and its key sidecar.
pub fn write(vectors_path: &Path, keys_path: &Path, dim: usize, rows: &[f32], keys: &[RowKey]) -> Result<()> {
    if keys.len() * dim != rows.len() {
        return Err(Error::Format(format!(
            "{} keys for {} rows",
            keys.len(),
            rows.len() / dim.max(1)
        )));
    }
    atomic::write_bytes(vectors_path, &encode_rows(dim, rows)?)?;
    atomic::write_with(keys_path, |w| {
        for k in keys {
            serde_json::to_writer(&mut *w, k).map_err(|e| Error::Format(e.to_string()))?;
            w.write_all(b"\n").map_err(|e| Error::io(keys_path, e))?;
        }
        Ok(())
    })
}

pub fn read_keys(path: &Path) -> Result<Vec<RowKey>> {
    let file = fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut keys = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        keys.push(serde_json::from_str(&line).map_err(|e| Error::Record {
            line: i + 1,
            message: e.to_string(),
        })?);
    }
    Ok(keys)
}

/// Looks up embeddings by key from one or more PVEC files.
#[derive(Debug, Clone)]
pub struct PrecomputedEncoder {
    backend_id: String,
    dim: usize,
    values: Vec<f32>,
    rows: HashMap<RowKey, usize>,
}

impl PrecomputedEncoder {
    /// Loads and merges `(vectors, keys)` file pairs. Later files win on
    /// duplicate keys. All files must share `dim`.
    pub fn open(files: &[(PathBuf, PathBuf)], dim: usize, backend_id: impl Into<String>) -> Result<Self> {
        let mut enc = Self {
            backend_id: backend_id.into(),
            dim,
            values: Vec::new(),
            rows: HashMap::new(),
        };
        for (vectors_path, keys_path) in files {
            let bytes = fs::read(vectors_path).map_err(|e| Error::io(vectors_path, e))?;
            let (file_dim, values) = decode_rows(&bytes)?;
            if file_dim != dim {
                return Err(pareto_core::Error::DimMismatch {
                    expected: dim,
                    found: file_dim,
                }
                .into());
            }
            let keys = read_keys(keys_path)?;
            if keys.len() * dim != values.len() {
                return Err(Error::Format(format!(
                    "{}: {} keys for {} rows",
                    keys_path.display(),
                    keys.len(),
                    values.len() / dim
                )));
            }
            let base = enc.values.len() / dim;
            for (i, key) in keys.into_iter().enumerate() {
                enc.rows.insert(key, base + i);
            }
            enc.values.extend(values);
        }
        Ok(enc)
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }
}

impl Encoder for PrecomputedEncoder {
    fn backend_id(&self) -> &str {
        &self.backend_id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, items: &[EncodeItem<'_>]) -> pareto_core::Result<Vec<DenseVector>> {
        items
            .iter()
            .map(|item| {
                let row = *self
                    .rows
                    .get(&RowKey::from(item.key))
                    .ok_or_else(|| pareto_core::Error::MissingEmbedding(item.key.to_string()))?;
                DenseVector::from_f32(&self.values[row * self.dim..(row + 1) * self.dim])
            })
            .collect()
    }
}

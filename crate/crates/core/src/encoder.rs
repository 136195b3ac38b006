//! Dense vectors, the encoder backend trait, weighted composition and dot
//! similarity.

use alloc::format;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;
use core::fmt;

use crate::error::{Error, Result};

/// A finite, fixed-dimension real vector.
#[derive(Debug, Clone, PartialEq)]
pub struct DenseVector(Vec<f64>);

impl DenseVector {
    /// Wraps `values`, rejecting empty or non-finite input.
    pub fn new(values: Vec<f64>) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self(values))
    }

    pub fn from_f32(values: &[f32]) -> Result<Self> {
        Self::new(values.iter().map(|&v| f64::from(v)).collect())
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.0
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }

    pub fn to_f32(&self) -> Vec<f32> {
        self.0.iter().map(|&v| v as f32).collect()
    }
}

/// Core-sentence weight, restricted to `[0, 1]`.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct Alpha(f64);

impl Alpha {
    pub const ONE: Alpha = Alpha(1.0);
    /// Default operating point.
    pub const DEFAULT: Alpha = Alpha(0.8);

    pub fn new(value: f64) -> Result<Self> {
        if (0.0..=1.0).contains(&value) {
            Ok(Self(value))
        } else {
            Err(Error::AlphaOutOfRange(value))
        }
    }

    pub fn value(self) -> f64 {
        self.0
    }
}

impl Default for Alpha {
    fn default() -> Self {
        Self::DEFAULT
    }
}

impl fmt::Display for Alpha {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        self.0.fmt(f)
    }
}

/// Weighted representation of a sentence unit.
///
/// Without a context the core vector is returned unchanged. At `alpha == 1`
/// the core is also returned bit for bit, which the arithmetic alone would not
/// guarantee for negative zeros.
pub fn compose_weighted(core: &DenseVector, context: Option<&DenseVector>, alpha: Alpha) -> Result<DenseVector> {
    let Some(context) = context else {
        return Ok(core.clone());
    };
    check_dims(core, context)?;
    if alpha == Alpha::ONE {
        return Ok(core.clone());
    }
    let a = alpha.value();
    let b = 1.0 - a;
    Ok(DenseVector(
        core.0
            .iter()
            .zip(&context.0)
            .map(|(c, x)| a * c + b * x)
            .collect(),
    ))
}

pub fn dot(a: &DenseVector, b: &DenseVector) -> Result<f64> {
    check_dims(a, b)?;
    Ok(a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum())
}

fn check_dims(a: &DenseVector, b: &DenseVector) -> Result<()> {
    if a.dim() != b.dim() {
        return Err(Error::DimMismatch {
            expected: a.dim(),
            found: b.dim(),
        });
    }
    Ok(())
}

/// What a piece of text is, so keyed backends can look it up.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TextKey<'a> {
    Core { passage_id: &'a str, sent_index: usize },
    Context { passage_id: &'a str, sent_index: usize },
    Passage { passage_id: &'a str },
    Query { id: &'a str },
}

impl fmt::Display for TextKey<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            TextKey::Core { passage_id, sent_index } => write!(f, "core {passage_id}#{sent_index}"),
            TextKey::Context { passage_id, sent_index } => write!(f, "context {passage_id}#{sent_index}"),
            TextKey::Passage { passage_id } => write!(f, "passage {passage_id}"),
            TextKey::Query { id } => write!(f, "query {id}"),
        }
    }
}

#[derive(Debug, Clone, Copy)]
pub struct EncodeItem<'a> {
    pub key: TextKey<'a>,
    pub text: &'a str,
}

/// An embedding backend. Corpus units, contexts and queries all go through
/// the same encoder.
pub trait Encoder: Sync {
    /// Identifier recorded in index headers; queries must match it.
    fn backend_id(&self) -> &str;

    fn dim(&self) -> usize;

    /// Encodes `items` in order; the result has one vector per item.
    fn encode_batch(&self, items: &[EncodeItem<'_>]) -> Result<Vec<DenseVector>>;
}

/// Runs `encoder` over `items` in chunks of `batch_size` and checks that the
/// backend honoured the count and dimension contract.
pub fn encode_all(encoder: &dyn Encoder, items: &[EncodeItem<'_>], batch_size: usize) -> Result<Vec<DenseVector>> {
    let batch_size = batch_size.max(1);
    let mut out = Vec::with_capacity(items.len());
    for chunk in items.chunks(batch_size) {
        let vectors = encoder.encode_batch(chunk)?;
        if vectors.len() != chunk.len() {
            return Err(Error::Backend(format!(
                "backend returned {} vectors for {} texts",
                vectors.len(),
                chunk.len()
            )));
        }
        for v in &vectors {
            if v.dim() != encoder.dim() {
                return Err(Error::DimMismatch {
                    expected: encoder.dim(),
                    found: v.dim(),
                });
            }
        }
        out.extend(vectors);
    }
    Ok(out)
}

const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
const FNV_PRIME: u64 = 0x0000_0100_0000_01b3;

pub fn fnv1a64(bytes: &[u8]) -> u64 {
    bytes
        .iter()
        .fold(FNV_OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(FNV_PRIME))
}

/// Deterministic signed feature-hashing encoder.
///
/// Lowercases the text, splits on runs of non-alphanumeric characters and
/// hashes each token with FNV-1a (64 bit). The token adds `+1` to bucket
/// `hash % dim` when the hash's top bit is clear and `-1` otherwise. The sum
/// is L2-normalized.
#[derive(Debug, Clone)]
pub struct HashEncoder {
    dim: usize,
    id: String,
}

impl HashEncoder {
    pub fn new(dim: usize) -> Result<Self> {
        if dim == 0 {
            return Err(Error::DimMismatch {
                expected: 1,
                found: 0,
            });
        }
        Ok(Self {
            dim,
            id: format!("test-hash:{dim}"),
        })
    }

    pub fn encode_text(&self, text: &str) -> Result<DenseVector> {
        let lower = text.to_lowercase();
        let mut acc = vec![0.0f64; self.dim];
        for token in lower.split(|c: char| !c.is_alphanumeric()).filter(|t| !t.is_empty()) {
            let h = fnv1a64(token.as_bytes());
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if h >> 63 == 0 { 1.0 } else { -1.0 };
        }
        let norm = libm::sqrt(acc.iter().map(|v| v * v).sum::<f64>());
        if norm == 0.0 {
            return Err(Error::ZeroText);
        }
        acc.iter_mut().for_each(|v| *v /= norm);
        Ok(DenseVector(acc))
    }
}

impl Encoder for HashEncoder {
    fn backend_id(&self) -> &str {
        &self.id
    }

    fn dim(&self) -> usize {
        self.dim
    }

    fn encode_batch(&self, items: &[EncodeItem<'_>]) -> Result<Vec<DenseVector>> {
        items.iter().map(|item| self.encode_text(item.text)).collect()
    }
}

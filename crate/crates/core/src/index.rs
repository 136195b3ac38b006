//! Immutable vector store with exact top-k maximum-inner-product search.
//!
//! Rows are scanned in fixed-size blocks. Each block keeps a bounded heap of
//! its best `k` rows and the per-block winners are merged under the total
//! order (score descending, row ascending). Block boundaries do not depend on
//! the thread count, so parallel and sequential scans return identical hits.
//!
//! Vectors are stored as `f32`. A row score is accumulated in `f32` in
//! component order and compared as `f64`.

use alloc::collections::BinaryHeap;
use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::{Ordering, Reverse};

use crate::encoder::{Alpha, DenseVector};
use crate::error::{Error, Result};

/// Rows per scan block.
pub const BLOCK_ROWS: usize = 2048;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "lowercase"))]
pub enum IndexMode {
    Sentence,
    Passage,
}

impl IndexMode {
    pub fn as_byte(self) -> u8 {
        match self {
            IndexMode::Sentence => 0,
            IndexMode::Passage => 1,
        }
    }

    pub fn from_byte(b: u8) -> Option<Self> {
        match b {
            0 => Some(IndexMode::Sentence),
            1 => Some(IndexMode::Passage),
            _ => None,
        }
    }
}

/// Per-row metadata. `sent_index` is `None` for passage-level rows.
#[derive(Debug, Clone, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RowMeta {
    pub passage_id: String,
    pub sent_index: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Hit {
    pub row: usize,
    pub score: f64,
    /// 1-based.
    pub rank: usize,
}

#[derive(Debug, Clone)]
pub struct VectorIndex {
    dim: usize,
    mode: IndexMode,
    vectors: Vec<f32>,
    meta: Vec<RowMeta>,
    alpha: Option<Alpha>,
    backend_id: String,
}

/// Single-writer builder; rows keep their push order.
#[derive(Debug)]
pub struct IndexBuilder {
    dim: Option<usize>,
    mode: IndexMode,
    vectors: Vec<f32>,
    meta: Vec<RowMeta>,
    alpha: Option<Alpha>,
    backend_id: String,
}

impl IndexBuilder {
    pub fn new(mode: IndexMode, alpha: Option<Alpha>, backend_id: impl Into<String>) -> Self {
        Self {
            dim: None,
            mode,
            vectors: Vec::new(),
            meta: Vec::new(),
            alpha,
            backend_id: backend_id.into(),
        }
    }

    pub fn push(&mut self, meta: RowMeta, vector: &DenseVector) -> Result<()> {
        let row = self.meta.len();
        let dim = *self.dim.get_or_insert(vector.dim());
        if vector.dim() != dim {
            return Err(Error::RowDimMismatch {
                row,
                expected: dim,
                found: vector.dim(),
            });
        }
        let values = vector.to_f32();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        self.vectors.extend_from_slice(&values);
        self.meta.push(meta);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.meta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.meta.is_empty()
    }

    pub fn finish(self) -> Result<VectorIndex> {
        let dim = self.dim.ok_or(Error::EmptyIndex)?;
        Ok(VectorIndex {
            dim,
            mode: self.mode,
            vectors: self.vectors,
            meta: self.meta,
            alpha: self.alpha,
            backend_id: self.backend_id,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Ranked {
    score: f64,
    row: usize,
}

impl Eq for Ranked {}

impl Ord for Ranked {
    /// Greater means ranked earlier.
    fn cmp(&self, other: &Self) -> Ordering {
        self.score
            .total_cmp(&other.score)
            .then_with(|| other.row.cmp(&self.row))
    }
}

impl PartialOrd for Ranked {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl VectorIndex {
    /// Reassembles an index from stored parts (e.g. after loading from disk).
    pub fn from_parts(
        dim: usize,
        mode: IndexMode,
        vectors: Vec<f32>,
        meta: Vec<RowMeta>,
        alpha: Option<Alpha>,
        backend_id: String,
    ) -> Result<Self> {
        if meta.is_empty() {
            return Err(Error::EmptyIndex);
        }
        if dim == 0 || vectors.len() != meta.len() * dim {
            return Err(Error::DimMismatch {
                expected: meta.len() * dim,
                found: vectors.len(),
            });
        }
        if vectors.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(Self {
            dim,
            mode,
            vectors,
            meta,
            alpha,
            backend_id,
        })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn rows(&self) -> usize {
        self.meta.len()
    }

    pub fn mode(&self) -> IndexMode {
        self.mode
    }

    pub fn alpha(&self) -> Option<Alpha> {
        self.alpha
    }

    pub fn backend_id(&self) -> &str {
        &self.backend_id
    }

    pub fn meta(&self) -> &[RowMeta] {
        &self.meta
    }

    pub fn vectors(&self) -> &[f32] {
        &self.vectors
    }

    pub fn row_vector(&self, row: usize) -> &[f32] {
        &self.vectors[row * self.dim..(row + 1) * self.dim]
    }

    fn prepare_query(&self, query: &DenseVector) -> Result<Vec<f32>> {
        if query.dim() != self.dim {
            return Err(Error::DimMismatch {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let q = query.to_f32();
        if q.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite);
        }
        Ok(q)
    }

    fn score(&self, row: usize, q: &[f32]) -> f64 {
        let mut acc = 0.0f32;
        for (a, b) in self.row_vector(row).iter().zip(q) {
            acc += a * b;
        }
        // `+ 0.0` folds -0.0 into 0.0 so `total_cmp` sees a single zero.
        f64::from(acc) + 0.0
    }

    fn scan_block(&self, block: usize, q: &[f32], k: usize) -> Vec<Ranked> {
        let start = block * BLOCK_ROWS;
        let end = (start + BLOCK_ROWS).min(self.rows());
        let mut heap: BinaryHeap<Reverse<Ranked>> = BinaryHeap::with_capacity(k.min(end - start) + 1);
        for row in start..end {
            let cand = Ranked {
                score: self.score(row, q),
                row,
            };
            if heap.len() < k {
                heap.push(Reverse(cand));
            } else if let Some(Reverse(worst)) = heap.peek() {
                if cand > *worst {
                    heap.pop();
                    heap.push(Reverse(cand));
                }
            }
        }
        heap.into_iter().map(|Reverse(r)| r).collect()
    }

    fn block_count(&self) -> usize {
        self.rows().div_ceil(BLOCK_ROWS)
    }

    #[cfg(feature = "parallel")]
    fn scan(&self, q: &[f32], k: usize) -> Vec<Ranked> {
        use rayon::prelude::*;
        if self.block_count() <= 1 {
            return self.scan_block(0, q, k);
        }
        (0..self.block_count())
            .into_par_iter()
            .map(|b| self.scan_block(b, q, k))
            .flatten()
            .collect()
    }

    #[cfg(not(feature = "parallel"))]
    fn scan(&self, q: &[f32], k: usize) -> Vec<Ranked> {
        (0..self.block_count())
            .flat_map(|b| self.scan_block(b, q, k))
            .collect()
    }

    /// Exact top-`k` rows by dot product with `query`.
    ///
    /// Returns `min(k, rows)` hits ordered by score descending, ties broken by
    /// ascending row.
    pub fn search(&self, query: &DenseVector, k: usize) -> Result<Vec<Hit>> {
        if k < 1 {
            return Err(Error::BadK);
        }
        let q = self.prepare_query(query)?;
        let k = k.min(self.rows());
        let mut candidates = self.scan(&q, k);
        candidates.sort_unstable_by(|a, b| b.cmp(a));
        candidates.truncate(k);
        Ok(candidates
            .into_iter()
            .enumerate()
            .map(|(i, r)| Hit {
                row: r.row,
                score: r.score,
                rank: i + 1,
            })
            .collect())
    }

    /// Every row, fully ranked.
    pub fn rank_all(&self, query: &DenseVector) -> Result<Vec<Hit>> {
        self.search(query, self.rows())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::format;
    use alloc::vec;

    fn dv(values: &[f64]) -> DenseVector {
        DenseVector::new(values.to_vec()).unwrap()
    }

    fn meta(i: usize) -> RowMeta {
        RowMeta {
            passage_id: format!("p{i}"),
            sent_index: Some(0),
        }
    }

    fn index_of(rows: &[&[f64]]) -> VectorIndex {
        let mut b = IndexBuilder::new(IndexMode::Sentence, Some(Alpha::DEFAULT), "test");
        for (i, r) in rows.iter().enumerate() {
            b.push(meta(i), &dv(r)).unwrap();
        }
        b.finish().unwrap()
    }

    #[test]
    fn hand_computed_top_two() {
        let idx = index_of(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        let hits = idx.search(&dv(&[1.0, 0.0]), 2).unwrap();
        assert_eq!(hits.len(), 2);
        assert_eq!((hits[0].row, hits[0].score, hits[0].rank), (0, 1.0, 1));
        assert_eq!((hits[1].row, hits[1].score, hits[1].rank), (2, 0.5, 2));
    }

    #[test]
    fn k_larger_than_rows_returns_everything() {
        let idx = index_of(&[&[1.0, 0.0], &[0.0, 1.0], &[0.5, 0.5]]);
        let hits = idx.search(&dv(&[0.0, 1.0]), 10).unwrap();
        assert_eq!(hits.iter().map(|h| h.row).collect::<Vec<_>>(), vec![1, 2, 0]);
    }

    #[test]
    fn ties_break_by_ascending_row() {
        let idx = index_of(&[&[1.0], &[2.0], &[1.0], &[2.0]]);
        let hits = idx.rank_all(&dv(&[1.0])).unwrap();
        assert_eq!(hits.iter().map(|h| h.row).collect::<Vec<_>>(), vec![1, 3, 0, 2]);
    }

    #[test]
    fn bad_k_and_dim_mismatch() {
        let idx = index_of(&[&[1.0, 0.0]]);
        assert_eq!(idx.search(&dv(&[1.0, 0.0]), 0), Err(Error::BadK));
        assert_eq!(
            idx.search(&dv(&[1.0]), 1),
            Err(Error::DimMismatch { expected: 2, found: 1 })
        );
    }

    #[test]
    fn builder_reports_offending_row() {
        let mut b = IndexBuilder::new(IndexMode::Passage, None, "test");
        b.push(meta(0), &dv(&[1.0, 2.0])).unwrap();
        b.push(meta(1), &dv(&[1.0, 2.0])).unwrap();
        assert_eq!(
            b.push(meta(2), &dv(&[1.0])),
            Err(Error::RowDimMismatch {
                row: 2,
                expected: 2,
                found: 1
            })
        );
    }

    #[test]
    fn empty_builder_is_an_error() {
        let b = IndexBuilder::new(IndexMode::Sentence, None, "test");
        assert!(matches!(b.finish(), Err(Error::EmptyIndex)));
    }

    #[test]
    fn values_outside_f32_range_are_rejected() {
        let mut b = IndexBuilder::new(IndexMode::Sentence, None, "test");
        assert_eq!(b.push(meta(0), &dv(&[1e300])), Err(Error::NonFinite));
    }

    #[test]
    fn five_rows_keep_metadata_alignment() {
        let idx = index_of(&[&[1.0], &[2.0], &[3.0], &[4.0], &[5.0]]);
        assert_eq!(idx.rows(), 5);
        for (i, m) in idx.meta().iter().enumerate() {
            assert_eq!(m.passage_id, format!("p{i}"));
            assert_eq!(idx.row_vector(i), &[(i + 1) as f32]);
        }
    }

    #[test]
    fn multi_block_scan_matches_full_sort() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(7);
        let rows = BLOCK_ROWS * 2 + 17;
        let mut b = IndexBuilder::new(IndexMode::Sentence, None, "test");
        for i in 0..rows {
            // Coarse values so exact ties occur across blocks.
            let v: Vec<f64> = (0..4).map(|_| f64::from(rng.gen_range(-2i32..=2))).collect();
            b.push(meta(i), &dv(&v)).unwrap();
        }
        let idx = b.finish().unwrap();
        let q = dv(&[1.0, -1.0, 0.5, 2.0]);
        let mut oracle: Vec<(f64, usize)> = (0..rows)
            .map(|r| {
                let mut s = 0.0f32;
                for (a, b) in idx.row_vector(r).iter().zip([1.0f32, -1.0, 0.5, 2.0]) {
                    s += a * b;
                }
                (f64::from(s), r)
            })
            .collect();
        oracle.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap().then(a.1.cmp(&b.1)));
        for k in [1, 7, 100, rows] {
            let got: Vec<usize> = idx.search(&q, k).unwrap().iter().map(|h| h.row).collect();
            let want: Vec<usize> = oracle.iter().take(k).map(|p| p.1).collect();
            assert_eq!(got, want, "k={k}");
        }
    }

    #[test]
    fn from_parts_validates_shape() {
        assert!(matches!(
            VectorIndex::from_parts(2, IndexMode::Sentence, vec![1.0; 3], vec![meta(0), meta(1)], None, "x".into()),
            Err(Error::DimMismatch { .. })
        ));
        assert!(matches!(
            VectorIndex::from_parts(2, IndexMode::Sentence, vec![], vec![], None, "x".into()),
            Err(Error::EmptyIndex)
        ));
    }
}

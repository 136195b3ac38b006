use pareto_core::{DenseVector, IndexMode, RowMeta, VectorIndex};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn index_from(dim: usize, values: Vec<f32>) -> VectorIndex {
    let meta = (0..values.len() / dim)
        .map(|i| RowMeta {
            passage_id: format!("p{i}"),
            sent_index: Some(0),
        })
        .collect();
    VectorIndex::from_parts(dim, IndexMode::Sentence, values, meta, None, "oracle".into()).unwrap()
}

fn brute_force(index: &VectorIndex, q: &[f32], k: usize) -> Vec<(usize, f64)> {
    let mut all: Vec<(usize, f64)> = (0..index.rows())
        .map(|r| {
            let mut acc = 0.0f32;
            for (a, b) in index.row_vector(r).iter().zip(q) {
                acc += a * b;
            }
            (r, f64::from(acc) + 0.0)
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn hits(index: &VectorIndex, q: &[f32], k: usize) -> Vec<(usize, f64)> {
    index
        .search(&DenseVector::from_f32(q).unwrap(), k)
        .unwrap()
        .into_iter()
        .map(|h| (h.row, h.score))
        .collect()
}

#[test]
fn thousand_rows_match_brute_force() {
    let mut rng = ChaCha8Rng::seed_from_u64(1000);
    let dim = 32;
    let values: Vec<f32> = (0..1000 * dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let index = index_from(dim, values);
    for _ in 0..50 {
        let q: Vec<f32> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
        for k in [1, 10, 30] {
            assert_eq!(hits(&index, &q, k), brute_force(&index, &q, k));
        }
    }
}

#[test]
fn ranks_are_one_based_and_scores_non_increasing() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let values: Vec<f32> = (0..200 * 8).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let index = index_from(8, values);
    let q = DenseVector::new(vec![0.5; 8]).unwrap();
    let h = index.search(&q, 200).unwrap();
    assert_eq!(h.len(), 200);
    for (i, w) in h.windows(2).enumerate() {
        assert_eq!(w[0].rank, i + 1);
        assert!(w[0].score > w[1].score || (w[0].score == w[1].score && w[0].row < w[1].row));
    }
}

fn small_grid() -> impl Strategy<Value = f32> {
    // Few distinct values make exact ties common.
    prop::sample::select(vec![-1.0f32, -0.5, 0.0, 0.5, 1.0])
}

proptest! {
    #[test]
    fn search_is_exact_under_ties(
        dim in 1usize..6,
        rows in 1usize..60,
        seed in any::<u64>(),
        k in 1usize..70,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let grid = [-1.0f32, -0.5, 0.0, 0.5, 1.0];
        let values: Vec<f32> = (0..rows * dim).map(|_| grid[rng.gen_range(0..grid.len())]).collect();
        let q: Vec<f32> = (0..dim).map(|_| grid[rng.gen_range(0..grid.len())]).collect();
        let index = index_from(dim, values);
        prop_assert_eq!(hits(&index, &q, k), brute_force(&index, &q, k.min(rows)));
    }

    #[test]
    fn scaling_the_query_scales_scores_and_keeps_order(
        values in prop::collection::vec(-1.0f32..1.0, 40),
        q in prop::collection::vec(-1.0f32..1.0, 4),
        exp in -4i32..5,
    ) {
        // Powers of two scale f32 products exactly, so order is preserved bit for bit.
        let c = 2f32.powi(exp);
        let index = index_from(4, values);
        let base = hits(&index, &q, 10);
        let scaled_q: Vec<f32> = q.iter().map(|v| v * c).collect();
        let scaled = hits(&index, &scaled_q, 10);
        prop_assert_eq!(
            base.iter().map(|h| h.0).collect::<Vec<_>>(),
            scaled.iter().map(|h| h.0).collect::<Vec<_>>()
        );
        for (a, b) in base.iter().zip(&scaled) {
            prop_assert_eq!(a.1 * f64::from(c), b.1);
        }
    }

    #[test]
    fn repeated_searches_are_identical(
        values in prop::collection::vec(small_grid(), 30),
        q in prop::collection::vec(small_grid(), 3),
    ) {
        let index = index_from(3, values);
        let a = hits(&index, &q, 7);
        let b = hits(&index, &q, 7);
        prop_assert_eq!(a, b);
    }
}

#[test]
fn general_positive_scaling_keeps_argmax() {
    let mut rng = ChaCha8Rng::seed_from_u64(77);
    let values: Vec<f32> = (0..500 * 16).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let index = index_from(16, values);
    for _ in 0..20 {
        let q: Vec<f32> = (0..16).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let c = rng.gen_range(0.1f32..10.0);
        let scaled: Vec<f32> = q.iter().map(|v| v * c).collect();
        let a = hits(&index, &q, 5);
        let b = hits(&index, &scaled, 5);
        assert_eq!(a[0].0, b[0].0);
        for (x, y) in a.iter().zip(&b) {
            let want = x.1 * f64::from(c);
            assert!((want - y.1).abs() <= 1e-5 * want.abs().max(1.0));
        }
    }
}

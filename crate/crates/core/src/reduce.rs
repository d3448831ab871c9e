//! Deterministic parallel reductions over matrix rows.
//!
//! Rows are split into blocks of a fixed size. Each block is reduced
//! sequentially, blocks run in parallel, and the per-block partials are then
//! combined in block order. Block boundaries do not depend on the worker
//! count, so results are bitwise identical for any thread pool size.

use rayon::prelude::*;

use crate::feature_store::FeatureMatrix;

pub const ROW_BLOCK: usize = 1024;

/// Sums `f(row_index, row)` over all rows, where `f` returns a vector of
/// `width` accumulators.
pub fn sum_rows<F>(matrix: &FeatureMatrix, width: usize, f: F) -> Vec<f64>
where
    F: Fn(usize, &[f32], &mut [f64]) + Sync,
{
    let dim = matrix.dim();
    let partials: Vec<Vec<f64>> = matrix
        .values()
        .par_chunks(ROW_BLOCK * dim)
        .enumerate()
        .map(|(b, block)| {
            let mut acc = vec![0.0f64; width];
            for (r, row) in block.chunks_exact(dim).enumerate() {
                f(b * ROW_BLOCK + r, row, &mut acc);
            }
            acc
        })
        .collect();

    let mut total = vec![0.0f64; width];
    for p in partials {
        for (t, v) in total.iter_mut().zip(p) {
            *t += v;
        }
    }
    total
}

/// Column sums accumulated in `f64`.
pub fn column_sums(matrix: &FeatureMatrix) -> Vec<f64> {
    sum_rows(matrix, matrix.dim(), |_, row, acc| {
        for (a, &v) in acc.iter_mut().zip(row) {
            *a += v as f64;
        }
    })
}

pub fn column_means(matrix: &FeatureMatrix) -> Vec<f64> {
    let n = matrix.n_samples() as f64;
    column_sums(matrix).into_iter().map(|s| s / n).collect()
}

/// Sum of a per-row scalar, with the same fixed-block reduction order.
pub fn sum_scalar<F>(matrix: &FeatureMatrix, f: F) -> f64
where
    F: Fn(usize, &[f32]) -> f64 + Sync,
{
    sum_rows(matrix, 1, |i, row, acc| acc[0] += f(i, row))[0]
}

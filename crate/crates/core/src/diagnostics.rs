//! Anisotropy diagnosis for an embedding set.
//!
//! Three views: the distribution of per-dimension means, the singular value
//! spectrum of the mean-centered matrix, and the drift ratio
//! `||mu|| / mean_i ||x_i - mu||`.

use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{PrismError, Result};
use crate::feature_store::FeatureMatrix;
use crate::geometry::norm;
use crate::linalg::symmetric_eigenvalues;
use crate::reduce::{column_means, sum_scalar};

/// Largest Gram matrix side the spectrum path will build.
pub const MAX_GRAM_DIM: usize = 4096;

const GRAM_ROW_BLOCK: usize = 8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStats {
    pub min: f64,
    pub p25: f64,
    pub p75: f64,
    pub p99: f64,
    pub max: f64,
    pub mean_abs: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectrumReport {
    pub singular_values: Vec<f64>,
    pub k: usize,
    pub energy_topk: f64,
    pub effective_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AnisotropyReport {
    pub mean_stats: MeanStats,
    pub spectrum: SpectrumReport,
    #[serde(serialize_with = "serialize_ratio")]
    pub drift_ratio: f64,
}

fn serialize_ratio<S: Serializer>(v: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    if v.is_infinite() {
        s.serialize_str("infinite")
    } else {
        s.serialize_f64(*v)
    }
}

/// Percentile of ascending-sorted data, linearly interpolating between order
/// statistics (`p` in `[0, 100]`).
pub fn percentile(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty(), "percentile of empty data");
    let h = (sorted.len() - 1) as f64 * p / 100.0;
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// Distribution summary of an arbitrary vector of values.
pub fn summarize(values: &[f64]) -> MeanStats {
    let mut sorted = values.to_vec();
    sorted.sort_by(f64::total_cmp);
    MeanStats {
        min: sorted[0],
        p25: percentile(&sorted, 25.0),
        p75: percentile(&sorted, 75.0),
        p99: percentile(&sorted, 99.0),
        max: sorted[sorted.len() - 1],
        mean_abs: values.iter().map(|v| v.abs()).sum::<f64>() / values.len() as f64,
    }
}

/// Statistics of the per-dimension mean vector.
pub fn mean_statistics(matrix: &FeatureMatrix) -> MeanStats {
    summarize(&column_means(matrix))
}

/// All `min(N, d)` singular values of the mean-centered matrix, descending.
///
/// Computed as square roots of the eigenvalues of the smaller Gram matrix.
pub fn centered_singular_values(matrix: &FeatureMatrix) -> Result<Vec<f64>> {
    let (n, d) = (matrix.n_samples(), matrix.dim());
    let side = n.min(d);
    if side > MAX_GRAM_DIM {
        return Err(PrismError::contract(format!(
            "spectrum of a {n}x{d} matrix needs a {side}x{side} Gram matrix, limit is {MAX_GRAM_DIM}"
        )));
    }
    let mu = column_means(matrix);
    let mut gram = if d <= n {
        feature_gram(matrix, &mu)
    } else {
        sample_gram(matrix, &mu)
    };
    let eig = symmetric_eigenvalues(&mut gram, side)?;
    Ok(eig.into_iter().map(|l| l.max(0.0).sqrt()).collect())
}

/// `C^T C` for the centered matrix `C`, lower triangle filled. Each entry is
/// accumulated over rows in index order, so the result does not depend on
/// how output rows are distributed across workers.
fn feature_gram(matrix: &FeatureMatrix, mu: &[f64]) -> Vec<f64> {
    let d = matrix.dim();
    let mut gram = vec![0.0f64; d * d];
    gram.par_chunks_mut(GRAM_ROW_BLOCK * d)
        .enumerate()
        .for_each(|(blk, out)| {
            let first = blk * GRAM_ROW_BLOCK;
            let rows_here = out.len() / d;
            let mut centered = vec![0.0f64; d];
            for row in matrix.rows() {
                for ((c, &x), &m) in centered.iter_mut().zip(row).zip(mu) {
                    *c = x as f64 - m;
                }
                for r in 0..rows_here {
                    let a = first + r;
                    let ca = centered[a];
                    let dst = &mut out[r * d..r * d + a + 1];
                    for (g, &cb) in dst.iter_mut().zip(&centered[..=a]) {
                        *g += ca * cb;
                    }
                }
            }
        });
    gram
}

/// `C C^T` for the centered matrix `C`, lower triangle filled.
fn sample_gram(matrix: &FeatureMatrix, mu: &[f64]) -> Vec<f64> {
    let n = matrix.n_samples();
    let centered: Vec<Vec<f64>> = matrix
        .rows()
        .map(|row| row.iter().zip(mu).map(|(&x, &m)| x as f64 - m).collect())
        .collect();
    let mut gram = vec![0.0f64; n * n];
    gram.par_chunks_mut(n).enumerate().for_each(|(i, out)| {
        for j in 0..=i {
            out[j] = centered[i]
                .iter()
                .zip(&centered[j])
                .map(|(a, b)| a * b)
                .sum();
        }
    });
    gram
}

/// Spectrum summary from a full descending singular value list.
pub fn spectrum_from_values(all: &[f64], k: usize) -> Result<SpectrumReport> {
    if k == 0 || k > all.len() {
        return Err(PrismError::contract(format!(
            "k = {k} outside 1..={}",
            all.len()
        )));
    }
    let energies: Vec<f64> = all.iter().map(|s| s * s).collect();
    let total: f64 = energies.iter().sum();
    let (energy_topk, effective_rank) = if total > 0.0 {
        let top: f64 = energies[..k].iter().sum();
        let entropy: f64 = energies
            .iter()
            .map(|e| e / total)
            .filter(|&p| p > 0.0)
            .map(|p| -p * p.ln())
            .sum();
        ((top / total).clamp(0.0, 1.0), entropy.exp().max(1.0))
    } else {
        // No variance at all: every direction is equally (un)used.
        (1.0, 1.0)
    };
    Ok(SpectrumReport {
        singular_values: all[..k].to_vec(),
        k,
        energy_topk,
        effective_rank,
    })
}

pub fn singular_spectrum(matrix: &FeatureMatrix, k: usize) -> Result<SpectrumReport> {
    let side = matrix.n_samples().min(matrix.dim());
    if k == 0 || k > side {
        return Err(PrismError::contract(format!("k = {k} outside 1..={side}")));
    }
    spectrum_from_values(&centered_singular_values(matrix)?, k)
}

/// `||mu|| / mean_i ||x_i - mu||`; infinite when every residual vanishes.
pub fn drift_ratio(matrix: &FeatureMatrix) -> f64 {
    let mu = column_means(matrix);
    let total = sum_scalar(matrix, |_, row| {
        row.iter()
            .zip(&mu)
            .map(|(&x, &m)| {
                let r = x as f64 - m;
                r * r
            })
            .sum::<f64>()
            .sqrt()
    });
    let mean_residual = total / matrix.n_samples() as f64;
    if mean_residual == 0.0 {
        f64::INFINITY
    } else {
        norm(&mu) / mean_residual
    }
}

pub fn anisotropy_report(matrix: &FeatureMatrix, k: usize) -> Result<AnisotropyReport> {
    Ok(AnisotropyReport {
        mean_stats: mean_statistics(matrix),
        spectrum: singular_spectrum(matrix, k)?,
        drift_ratio: drift_ratio(matrix),
    })
}

/// Plain-text table of per-dimension mean statistics, one row per label.
pub fn mean_stats_table(rows: &[(&str, MeanStats)]) -> String {
    let width = rows.iter().map(|(l, _)| l.len()).max().unwrap_or(0).max(7);
    let mut out = format!(
        "{:<width$} {:>9} {:>9} {:>9} {:>9} {:>9} {:>9}\n",
        "Dataset", "Min", "P25", "P75", "P99", "Max", "Mean(|x|)"
    );
    for (label, s) in rows {
        out.push_str(&format!(
            "{:<width$} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9.4}\n",
            label, s.min, s.p25, s.p75, s.p99, s.max, s.mean_abs
        ));
    }
    out
}

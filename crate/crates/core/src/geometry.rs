//! Similarity kernels: drift decomposition `x = mu + delta`, raw cosine,
//! per-vector re-centered (Pearson) correlation, and the leading-order
//! approximation of raw cosine under a dominant shared mean.
//!
//! Every reduction accumulates in `f64` regardless of the input precision.

use serde::Serialize;

use crate::error::{PrismError, Result};
use crate::feature_store::FeatureMatrix;
use crate::reduce::column_means;

/// Relative threshold on the centered norm below which a vector is treated
/// as constant. The effective epsilon is `DEGENERATE_REL_EPS * sqrt(d)`.
pub const DEGENERATE_REL_EPS: f64 = 1e-12;

pub fn degenerate_eps(dim: usize) -> f64 {
    DEGENERATE_REL_EPS * (dim as f64).sqrt()
}

/// Global mean `mu` and per-row residuals `delta_i = x_i - mu`.
#[derive(Debug, Clone, PartialEq)]
pub struct DriftDecomposition {
    pub mu: Vec<f64>,
    residuals: Vec<f64>,
    dim: usize,
}

impl DriftDecomposition {
    pub fn residual(&self, i: usize) -> &[f64] {
        &self.residuals[i * self.dim..(i + 1) * self.dim]
    }

    pub fn residuals(&self) -> std::slice::ChunksExact<'_, f64> {
        self.residuals.chunks_exact(self.dim)
    }

    pub fn n_samples(&self) -> usize {
        self.residuals.len() / self.dim
    }

    pub fn dim(&self) -> usize {
        self.dim
    }
}

pub fn decompose(matrix: &FeatureMatrix) -> DriftDecomposition {
    let mu = column_means(matrix);
    let mut residuals = Vec::with_capacity(matrix.values().len());
    for row in matrix.rows() {
        residuals.extend(row.iter().zip(&mu).map(|(&x, &m)| x as f64 - m));
    }
    DriftDecomposition {
        mu,
        residuals,
        dim: matrix.dim(),
    }
}

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(PrismError::contract(format!(
            "vector lengths differ: {a} vs {b}"
        )));
    }
    Ok(())
}

pub(crate) fn dot<A, B>(a: &[A], b: &[B]) -> f64
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    a.iter()
        .zip(b)
        .map(|(&x, &y)| x.into() * y.into())
        .sum()
}

pub(crate) fn norm<T: Copy + Into<f64>>(v: &[T]) -> f64 {
    v.iter()
        .map(|&x| {
            let x = x.into();
            x * x
        })
        .sum::<f64>()
        .sqrt()
}

pub fn cosine<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    check_len(a.len(), b.len())?;
    let (na, nb) = (norm(a), norm(b));
    if na == 0.0 || nb == 0.0 {
        return Err(PrismError::DegenerateInput(
            "cosine of a zero-norm vector".into(),
        ));
    }
    Ok((dot(a, b) / (na * nb)).clamp(-1.0, 1.0))
}

/// A vector with its scalar element-mean removed, scaled to unit length.
#[derive(Debug, Clone, PartialEq)]
pub struct CenteredUnitVector {
    /// All zeros when `degenerate`.
    pub values: Vec<f64>,
    pub degenerate: bool,
}

pub fn center_normalize<T: Copy + Into<f64>>(v: &[T]) -> CenteredUnitVector {
    let mut values = vec![0.0; v.len()];
    let ok = center_normalize_into(v, &mut values);
    CenteredUnitVector {
        values,
        degenerate: !ok,
    }
}

/// Writes the centered unit vector of `v` into `out`. Returns `false` (and
/// zeroes `out`) when the centered norm falls below the degeneracy epsilon.
pub(crate) fn center_normalize_into<T: Copy + Into<f64>>(v: &[T], out: &mut [f64]) -> bool {
    let n = v.len();
    if n == 0 {
        return false;
    }
    let mean = v.iter().map(|&x| x.into()).sum::<f64>() / n as f64;
    let mut sq = 0.0;
    for (o, &x) in out.iter_mut().zip(v) {
        let c = x.into() - mean;
        *o = c;
        sq += c * c;
    }
    let len = sq.sqrt();
    if len.is_nan() || len < degenerate_eps(n) {
        out.fill(0.0);
        return false;
    }
    for o in out.iter_mut() {
        *o /= len;
    }
    true
}

/// Writes the unit vector of `v` into `out`; `false` for a zero vector.
pub(crate) fn normalize_into<T: Copy + Into<f64>>(v: &[T], out: &mut [f64]) -> bool {
    let len = norm(v);
    if len == 0.0 {
        out.fill(0.0);
        return false;
    }
    for (o, &x) in out.iter_mut().zip(v) {
        *o = x.into() / len;
    }
    true
}

/// Pearson correlation of two vectors, i.e. the cosine of their re-centered
/// versions.
pub fn pearson<A, B>(a: &[A], b: &[B]) -> Result<f64>
where
    A: Copy + Into<f64>,
    B: Copy + Into<f64>,
{
    check_len(a.len(), b.len())?;
    let ua = center_normalize(a);
    let ub = center_normalize(b);
    if ua.degenerate || ub.degenerate {
        return Err(PrismError::DegenerateInput(
            "pearson correlation of a constant vector".into(),
        ));
    }
    Ok(dot(&ua.values, &ub.values).clamp(-1.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DriftApprox {
    pub exact: f64,
    pub approx: f64,
    pub residual_error: f64,
}

/// Component of `delta` orthogonal to `mu`.
fn orthogonal_part(mu: &[f64], mu_sq: f64, delta: &[f64]) -> Vec<f64> {
    let coef = dot(mu, delta) / mu_sq;
    delta.iter().zip(mu).map(|(&d, &m)| d - coef * m).collect()
}

/// Compares the exact cosine of `mu + delta_i` and `mu + delta_j` against
/// `1 - 0.5 * ||(delta_i' - delta_j') / ||mu|| ||^2`, where `delta'` is the
/// part of `delta` orthogonal to `mu`.
pub fn drift_cosine_approx(mu: &[f64], delta_i: &[f64], delta_j: &[f64]) -> Result<DriftApprox> {
    check_len(mu.len(), delta_i.len())?;
    check_len(mu.len(), delta_j.len())?;
    let mu_sq = dot(mu, mu);
    if mu_sq == 0.0 {
        return Err(PrismError::DegenerateInput("drift vector mu is zero".into()));
    }
    let xi: Vec<f64> = mu.iter().zip(delta_i).map(|(m, d)| m + d).collect();
    let xj: Vec<f64> = mu.iter().zip(delta_j).map(|(m, d)| m + d).collect();
    let exact = cosine(&xi, &xj)?;

    let pi = orthogonal_part(mu, mu_sq, delta_i);
    let pj = orthogonal_part(mu, mu_sq, delta_j);
    let gap_sq: f64 = pi.iter().zip(&pj).map(|(a, b)| (a - b) * (a - b)).sum();
    let approx = 1.0 - 0.5 * gap_sq / mu_sq;
    Ok(DriftApprox {
        exact,
        approx,
        residual_error: (exact - approx).abs(),
    })
}

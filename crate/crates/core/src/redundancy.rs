//! Redundancy scoring in the re-centered space and percentile-budget
//! selection.
//!
//! The redundancy of sample `i` is its mean Pearson correlation with every
//! other sample. With `u_i` the centered unit vector of row `i` and
//! `S = sum_j u_j`, the pairwise sum collapses to
//! `sum_{j != i} u_i . u_j = u_i . S - 1`, so all `N` scores cost `O(N d)`.
//!
//! Rows with (numerically) zero variance have no direction after centering.
//! They receive score `+1.0`, are flagged, and are left out of `S`.

use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{PrismError, Result};
use crate::feature_store::{DatasetHandle, FeatureMatrix, SampleManifest};
use crate::geometry::{center_normalize_into, dot, normalize_into};
use crate::reduce::ROW_BLOCK;

pub const DEGENERATE_SCORE: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct RedundancyScores {
    pub scores: Vec<f64>,
    /// Ascending indices of zero-variance rows.
    pub degenerate: Vec<usize>,
}

impl RedundancyScores {
    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }

    pub fn is_degenerate(&self, i: usize) -> bool {
        self.degenerate.binary_search(&i).is_ok()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectionResult {
    /// Row indices, ascending.
    #[serde(skip)]
    pub selected: Vec<usize>,
    pub selected_ids: Vec<String>,
    pub tau_percent: f64,
    pub threshold_value: Option<f64>,
    pub selector_name: String,
    pub seed: Option<u64>,
}

/// How each row is turned into a unit direction before correlating.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub(crate) enum Direction {
    /// Subtract the row's scalar element-mean, then normalize (Pearson).
    Centered,
    /// Normalize the raw row (cosine).
    Raw,
}

impl Direction {
    fn unit(self, row: &[f32], out: &mut [f64]) -> bool {
        match self {
            Direction::Centered => center_normalize_into(row, out),
            Direction::Raw => normalize_into(row, out),
        }
    }
}

/// Mean pairwise similarity of each row with all others, in `O(N d)`.
/// Returns the scores and the ascending list of rows without a direction.
pub(crate) fn mean_similarity_scores(
    matrix: &FeatureMatrix,
    direction: Direction,
) -> Result<(Vec<f64>, Vec<usize>)> {
    let (n, d) = (matrix.n_samples(), matrix.dim());
    if n < 2 {
        return Err(PrismError::contract(format!(
            "redundancy needs at least 2 samples, got {n}"
        )));
    }

    // Pass 1: S over fixed row blocks, combined in block order.
    let partials: Vec<(Vec<f64>, Vec<usize>)> = matrix
        .values()
        .par_chunks(ROW_BLOCK * d)
        .enumerate()
        .map(|(b, block)| {
            let mut acc = vec![0.0f64; d];
            let mut unit = vec![0.0f64; d];
            let mut flagged = Vec::new();
            for (r, row) in block.chunks_exact(d).enumerate() {
                if direction.unit(row, &mut unit) {
                    for (a, u) in acc.iter_mut().zip(&unit) {
                        *a += u;
                    }
                } else {
                    flagged.push(b * ROW_BLOCK + r);
                }
            }
            (acc, flagged)
        })
        .collect();

    let mut total = vec![0.0f64; d];
    let mut degenerate = Vec::new();
    for (acc, flagged) in partials {
        for (t, a) in total.iter_mut().zip(acc) {
            *t += a;
        }
        degenerate.extend(flagged);
    }

    // Pass 2: u_i . S per row.
    let denom = (n - 1) as f64;
    let scores = matrix
        .values()
        .par_chunks(d)
        .map_init(
            || vec![0.0f64; d],
            |unit, row| {
                if direction.unit(row, unit) {
                    ((dot(unit, &total) - 1.0) / denom).clamp(-1.0, 1.0)
                } else {
                    DEGENERATE_SCORE
                }
            },
        )
        .collect();
    Ok((scores, degenerate))
}

/// Redundancy (mean re-centered correlation) of every sample.
pub fn redundancy_scores(handle: &DatasetHandle) -> Result<RedundancyScores> {
    redundancy_scores_matrix(handle.matrix())
}

pub fn redundancy_scores_matrix(matrix: &FeatureMatrix) -> Result<RedundancyScores> {
    let (scores, degenerate) = mean_similarity_scores(matrix, Direction::Centered)?;
    Ok(RedundancyScores { scores, degenerate })
}

pub fn validate_tau(tau: f64) -> Result<()> {
    if tau.is_finite() && tau > 0.0 && tau <= 100.0 {
        Ok(())
    } else {
        Err(PrismError::contract(format!("tau = {tau} outside (0, 100]")))
    }
}

/// Number of samples kept at budget `tau` percent: `max(1, floor(tau N / 100))`.
pub fn budget(n: usize, tau: f64) -> usize {
    ((tau * n as f64 / 100.0).floor() as usize).clamp(1, n.max(1))
}

/// Indices of the `k` smallest scores (ties to the lower index), ascending
/// by index, and the `k`-th smallest score.
pub(crate) fn lowest_k(scores: &[f64], k: usize) -> (Vec<usize>, f64) {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]).then(a.cmp(&b)));
    let threshold = scores[order[k - 1]];
    let mut chosen = order[..k].to_vec();
    chosen.sort_unstable();
    (chosen, threshold)
}

pub(crate) fn build_result(
    manifest: &SampleManifest,
    selected: Vec<usize>,
    tau: f64,
    threshold: Option<f64>,
    selector: &str,
    seed: Option<u64>,
) -> SelectionResult {
    SelectionResult {
        selected_ids: selected.iter().map(|&i| manifest.id(i).to_string()).collect(),
        selected,
        tau_percent: tau,
        threshold_value: threshold,
        selector_name: selector.to_string(),
        seed,
    }
}

/// Keeps the `max(1, floor(tau N / 100))` lowest-scoring samples.
pub fn select(
    scores: &RedundancyScores,
    manifest: &SampleManifest,
    tau: f64,
) -> Result<SelectionResult> {
    select_by_score(&scores.scores, manifest, tau, "prism")
}

pub(crate) fn select_by_score(
    scores: &[f64],
    manifest: &SampleManifest,
    tau: f64,
    selector: &str,
) -> Result<SelectionResult> {
    validate_tau(tau)?;
    if scores.len() != manifest.len() {
        return Err(PrismError::contract(format!(
            "{} scores for {} manifest entries",
            scores.len(),
            manifest.len()
        )));
    }
    if scores.is_empty() {
        return Err(PrismError::contract("nothing to select from"));
    }
    let k = budget(scores.len(), tau);
    let (chosen, threshold) = lowest_k(scores, k);
    Ok(build_result(manifest, chosen, tau, Some(threshold), selector, None))
}

/// Number of selected samples per manifest source tag.
pub fn per_source_counts(
    result: &SelectionResult,
    manifest: &SampleManifest,
) -> Result<BTreeMap<String, usize>> {
    let by_id: HashMap<&str, &str> = manifest
        .entries
        .iter()
        .map(|e| (e.sample_id.as_str(), e.source_tag.as_str()))
        .collect();
    let mut counts = BTreeMap::new();
    for id in &result.selected_ids {
        let source = by_id
            .get(id.as_str())
            .ok_or_else(|| PrismError::Manifest(format!("unknown sample id {id:?}")))?;
        *counts.entry(source.to_string()).or_insert(0) += 1;
    }
    Ok(counts)
}

/// Selections at several budgets from a single scoring pass, in input order.
pub fn tau_sweep(handle: &DatasetHandle, taus: &[f64]) -> Result<Vec<SelectionResult>> {
    if taus.is_empty() {
        return Err(PrismError::contract("tau sweep needs at least one tau"));
    }
    for &t in taus {
        validate_tau(t)?;
    }
    let scores = redundancy_scores(handle)?;
    taus.iter()
        .map(|&t| select(&scores, handle.manifest(), t))
        .collect()
}

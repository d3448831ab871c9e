//! Synthetic anisotropic embedding worlds with known ground truth.
//!
//! Each sample is `x_i = mu + s_i (c_{k(i)} + eps_i)`:
//!
//! * `mu` points along the all-ones direction, the shared offset that
//!   per-vector re-centering removes, and is scaled after the residuals are
//!   drawn so that the measured drift ratio hits the target;
//! * the cluster centers `c_k` are mutually orthogonal, orthogonal to `mu`,
//!   and have norm `cluster_spread` (a single cluster sits at the origin);
//! * `eps_i` is isotropic Gaussian noise with per-coordinate scale
//!   `residual_sigma`;
//! * `s_i` is a per-sample log-normal magnitude (`scale_jitter`, default off).
//!
//! A `duplicate_fraction` of the rows are exact copies of earlier rows,
//! organised in groups of `duplicate_group_size` copies per template.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::baselines::{SelectorKind, SelectorSpec};
use crate::diagnostics::drift_ratio;
use crate::error::{PrismError, Result};
use crate::feature_store::{DatasetHandle, FeatureMatrix, ManifestEntry, SampleManifest};
use crate::geometry::{decompose, dot, drift_cosine_approx, pearson};
use crate::redundancy::{validate_tau, SelectionResult};

fn default_imbalance() -> f64 {
    1.0
}

fn default_group_size() -> usize {
    1
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SynthConfig {
    pub n_samples: usize,
    pub dim: usize,
    pub n_clusters: usize,
    /// Desired `||mu|| / mean ||x_i - mu||`.
    pub drift_ratio_target: f64,
    pub cluster_spread: f64,
    pub residual_sigma: f64,
    pub duplicate_fraction: f64,
    pub seed: u64,
    /// Ratio between consecutive cluster weights; 1 gives equal clusters.
    #[serde(default = "default_imbalance")]
    pub cluster_imbalance: f64,
    /// Standard deviation of the log of the per-sample residual magnitude.
    #[serde(default)]
    pub scale_jitter: f64,
    /// Number of copies made of each duplicated template row.
    #[serde(default = "default_group_size")]
    pub duplicate_group_size: usize,
}

impl SynthConfig {
    /// Named reference configurations.
    ///
    /// * `theorem1`: 2000 x 512, four equal clusters, drift ratio 10.
    /// * `corollary1`: 2000 x 256, eight weak clusters of geometrically
    ///   decaying size under strong noise, jittered magnitudes, 30% planted
    ///   duplicates in groups of 40, drift ratio 10.
    pub fn preset(name: &str) -> Result<Self> {
        match name {
            "theorem1" => Ok(SynthConfig {
                n_samples: 2000,
                dim: 512,
                n_clusters: 4,
                drift_ratio_target: 10.0,
                cluster_spread: 1.0,
                residual_sigma: 1.0 / (512f64).sqrt(),
                duplicate_fraction: 0.0,
                seed: 0,
                cluster_imbalance: 1.0,
                scale_jitter: 0.0,
                duplicate_group_size: 1,
            }),
            "corollary1" => Ok(SynthConfig {
                n_samples: 2000,
                dim: 256,
                n_clusters: 8,
                drift_ratio_target: 10.0,
                cluster_spread: 1.0,
                residual_sigma: 10.0 / (256f64).sqrt(),
                duplicate_fraction: 0.3,
                seed: 0,
                cluster_imbalance: 0.5,
                scale_jitter: 0.5,
                duplicate_group_size: 40,
            }),
            other => Err(PrismError::contract(format!("unknown preset {other:?}"))),
        }
    }

    pub fn with_seed(&self, seed: u64) -> Self {
        SynthConfig {
            seed,
            ..self.clone()
        }
    }

    pub fn n_duplicates(&self) -> usize {
        (self.duplicate_fraction * self.n_samples as f64).floor() as usize
    }

    fn n_groups(&self) -> usize {
        self.n_duplicates().div_ceil(self.duplicate_group_size.max(1))
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |m: String| Err(PrismError::contract(m));
        if self.n_clusters == 0 {
            return fail("n_clusters must be at least 1".into());
        }
        if self.dim < self.n_clusters + 1 || self.dim < 2 {
            return fail(format!(
                "dim {} leaves no room for {} orthogonal clusters plus the drift direction",
                self.dim, self.n_clusters
            ));
        }
        if !(self.drift_ratio_target >= 0.0 && self.drift_ratio_target.is_finite()) {
            return fail(format!("drift_ratio_target {} must be >= 0", self.drift_ratio_target));
        }
        for (name, v) in [
            ("cluster_spread", self.cluster_spread),
            ("residual_sigma", self.residual_sigma),
        ] {
            if !(v > 0.0 && v.is_finite()) {
                return fail(format!("{name} must be positive, got {v}"));
            }
        }
        if !(0.0..1.0).contains(&self.duplicate_fraction) {
            return fail(format!(
                "duplicate_fraction {} outside [0, 1)",
                self.duplicate_fraction
            ));
        }
        if !(self.cluster_imbalance > 0.0 && self.cluster_imbalance <= 1.0) {
            return fail(format!(
                "cluster_imbalance {} outside (0, 1]",
                self.cluster_imbalance
            ));
        }
        if !(self.scale_jitter >= 0.0 && self.scale_jitter.is_finite()) {
            return fail(format!("scale_jitter {} must be >= 0", self.scale_jitter));
        }
        if self.duplicate_group_size == 0 {
            return fail("duplicate_group_size must be at least 1".into());
        }
        let unique = self.n_samples - self.n_duplicates();
        if unique < self.n_clusters {
            return fail(format!(
                "{unique} non-duplicate samples cannot populate {} clusters",
                self.n_clusters
            ));
        }
        if self.n_groups() > unique {
            return fail("more duplicate groups than template rows".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SynthTruth {
    pub cluster_of: Vec<usize>,
    /// Duplicate row index -> index of the row it copies.
    pub duplicates_of: BTreeMap<usize, usize>,
    pub realized_drift_ratio: f64,
    pub n_clusters: usize,
}

impl SynthTruth {
    pub fn cluster_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.n_clusters];
        for &c in &self.cluster_of {
            sizes[c] += 1;
        }
        sizes
    }
}

#[derive(Debug, Clone)]
pub struct SynthWorld {
    pub handle: DatasetHandle,
    pub truth: SynthTruth,
}

/// Splits `total` into parts proportional to `weights`, each at least one,
/// by largest remainder.
fn apportion(total: usize, weights: &[f64]) -> Vec<usize> {
    let k = weights.len();
    let spare = total - k;
    let sum: f64 = weights.iter().sum();
    let exact: Vec<f64> = weights.iter().map(|w| w / sum * spare as f64).collect();
    let mut counts: Vec<usize> = exact.iter().map(|e| e.floor() as usize).collect();
    let mut left = spare - counts.iter().sum::<usize>();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| {
        let ra = exact[a] - exact[a].floor();
        let rb = exact[b] - exact[b].floor();
        rb.total_cmp(&ra).then(a.cmp(&b))
    });
    for &i in order.iter().cycle() {
        if left == 0 {
            break;
        }
        counts[i] += 1;
        left -= 1;
    }
    counts.iter().map(|c| c + 1).collect()
}

fn gaussian_vec(rng: &mut ChaCha8Rng, d: usize) -> Vec<f64> {
    (0..d).map(|_| rng.sample::<f64, _>(StandardNormal)).collect()
}

/// `count` orthonormal vectors, all orthogonal to the all-ones direction.
fn orthonormal_centers(rng: &mut ChaCha8Rng, d: usize, count: usize) -> Vec<Vec<f64>> {
    let ones = vec![1.0 / (d as f64).sqrt(); d];
    let mut basis: Vec<Vec<f64>> = vec![ones];
    while basis.len() < count + 1 {
        let mut v = gaussian_vec(rng, d);
        // Two Gram-Schmidt passes keep the basis orthogonal to rounding.
        for _ in 0..2 {
            for b in &basis {
                let c = dot(&v, b);
                for (x, y) in v.iter_mut().zip(b) {
                    *x -= c * y;
                }
            }
        }
        let len = dot(&v, &v).sqrt();
        if len > 1e-6 {
            v.iter_mut().for_each(|x| *x /= len);
            basis.push(v);
        }
    }
    basis.split_off(1)
}

pub fn generate(config: &SynthConfig) -> Result<SynthWorld> {
    config.validate()?;
    let (n, d, k) = (config.n_samples, config.dim, config.n_clusters);
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);

    let n_dup = config.n_duplicates();
    let n_unique = n - n_dup;
    let weights: Vec<f64> = (0..k).map(|c| config.cluster_imbalance.powi(c as i32)).collect();
    let mut cluster_of: Vec<usize> = apportion(n_unique, &weights)
        .into_iter()
        .enumerate()
        .flat_map(|(c, count)| std::iter::repeat_n(c, count))
        .collect();
    cluster_of.shuffle(&mut rng);

    let centers: Vec<Vec<f64>> = if k == 1 {
        vec![vec![0.0; d]]
    } else {
        orthonormal_centers(&mut rng, d, k)
            .into_iter()
            .map(|c| c.into_iter().map(|x| x * config.cluster_spread).collect())
            .collect()
    };

    let mut residuals: Vec<Vec<f64>> = Vec::with_capacity(n);
    for &c in &cluster_of {
        let scale = if config.scale_jitter > 0.0 {
            (config.scale_jitter * rng.sample::<f64, _>(StandardNormal)).exp()
        } else {
            1.0
        };
        let row = centers[c]
            .iter()
            .map(|&m| scale * (m + config.residual_sigma * rng.sample::<f64, _>(StandardNormal)))
            .collect();
        residuals.push(row);
    }

    // Templates are drawn uniformly from the non-duplicate rows, so each
    // cluster receives duplicates in proportion to its size.
    let mut duplicates_of = BTreeMap::new();
    if n_dup > 0 {
        let templates = rand::seq::index::sample(&mut rng, n_unique, config.n_groups()).into_vec();
        for j in 0..n_dup {
            let template = templates[j % templates.len()];
            duplicates_of.insert(n_unique + j, template);
            residuals.push(residuals[template].clone());
            cluster_of.push(cluster_of[template]);
        }
    }

    // Calibrate |mu| so that ||mu + rbar|| = target * mean ||r_i - rbar||.
    let mut rbar = vec![0.0f64; d];
    for r in &residuals {
        for (a, x) in rbar.iter_mut().zip(r) {
            *a += x;
        }
    }
    rbar.iter_mut().for_each(|a| *a /= n as f64);
    let mean_spread = residuals
        .iter()
        .map(|r| {
            r.iter()
                .zip(&rbar)
                .map(|(x, m)| (x - m) * (x - m))
                .sum::<f64>()
                .sqrt()
        })
        .sum::<f64>()
        / n as f64;
    let along = rbar.iter().sum::<f64>() / (d as f64).sqrt();
    let perp_sq = (dot(&rbar, &rbar) - along * along).max(0.0);
    let want = config.drift_ratio_target * mean_spread;
    let mu_len = -along + (want * want - perp_sq).max(0.0).sqrt();
    let mu_coord = mu_len / (d as f64).sqrt();

    let rows: Vec<Vec<f64>> = residuals
        .into_iter()
        .map(|r| r.into_iter().map(|x| x + mu_coord).collect())
        .collect();
    let matrix = FeatureMatrix::from_rows(&rows)?;
    let realized_drift_ratio = drift_ratio(&matrix);

    let manifest = SampleManifest::new(
        cluster_of
            .iter()
            .enumerate()
            .map(|(i, c)| ManifestEntry {
                sample_id: format!("syn-{i:06}"),
                source_tag: format!("cluster-{c}"),
            })
            .collect(),
    )?;
    Ok(SynthWorld {
        handle: DatasetHandle::new(matrix, manifest)?,
        truth: SynthTruth {
            cluster_of,
            duplicates_of,
            realized_drift_ratio,
            n_clusters: k,
        },
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Theorem1Check {
    pub mean_raw_cosine: f64,
    /// `None` with a single cluster.
    pub mean_centered_pearson_intercluster: Option<f64>,
    pub mean_approx_error: f64,
}

fn random_pair(rng: &mut ChaCha8Rng, n: usize) -> (usize, usize) {
    let i = rng.random_range(0..n);
    let mut j = rng.random_range(0..n - 1);
    if j >= i {
        j += 1;
    }
    (i, j)
}

/// Measures raw-cosine collapse, inter-cluster re-centered correlation, and
/// the error of the leading-order drift approximation over random pairs.
pub fn verify_theorem1(config: &SynthConfig, n_pairs: usize) -> Result<Theorem1Check> {
    let world = generate(config)?;
    theorem1_on(&world, n_pairs, config.seed)
}

pub fn theorem1_on(world: &SynthWorld, n_pairs: usize, seed: u64) -> Result<Theorem1Check> {
    if n_pairs < 100 {
        return Err(PrismError::contract(format!("n_pairs = {n_pairs} < 100")));
    }
    let matrix = world.handle.matrix();
    let n = matrix.n_samples();
    if n < 2 {
        return Err(PrismError::contract("need at least two samples"));
    }
    let decomposition = decompose(matrix);
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x7468_6d31);

    let mut cos_sum = 0.0;
    let mut err_sum = 0.0;
    for _ in 0..n_pairs {
        let (i, j) = random_pair(&mut rng, n);
        let a = drift_cosine_approx(
            &decomposition.mu,
            decomposition.residual(i),
            decomposition.residual(j),
        )?;
        cos_sum += a.exact;
        err_sum += a.residual_error;
    }

    let intercluster = if world.truth.n_clusters > 1 {
        let mut sum = 0.0;
        let mut taken = 0;
        while taken < n_pairs {
            let (i, j) = random_pair(&mut rng, n);
            if world.truth.cluster_of[i] == world.truth.cluster_of[j] {
                continue;
            }
            sum += pearson(matrix.row(i), matrix.row(j))?;
            taken += 1;
        }
        Some(sum / n_pairs as f64)
    } else {
        None
    };

    Ok(Theorem1Check {
        mean_raw_cosine: cos_sum / n_pairs as f64,
        mean_centered_pearson_intercluster: intercluster,
        mean_approx_error: err_sum / n_pairs as f64,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SelectionMetrics {
    /// Fraction of clusters with at least one selected sample.
    pub cluster_coverage: f64,
    /// Smallest per-cluster fraction of members selected.
    pub min_cluster_share: f64,
    /// Fraction of planted duplicates left out; `None` without duplicates.
    pub duplicate_prune_rate: Option<f64>,
}

pub fn evaluate_selection(result: &SelectionResult, truth: &SynthTruth) -> Result<SelectionMetrics> {
    let n = truth.cluster_of.len();
    let mut picked = vec![false; n];
    for &i in &result.selected {
        if i >= n {
            return Err(PrismError::Manifest(format!("selected index {i} out of range")));
        }
        picked[i] = true;
    }
    let sizes = truth.cluster_sizes();
    let mut hits = vec![0usize; truth.n_clusters];
    for (i, &c) in truth.cluster_of.iter().enumerate() {
        if picked[i] {
            hits[c] += 1;
        }
    }
    let covered = hits.iter().filter(|&&h| h > 0).count();
    let min_share = hits
        .iter()
        .zip(&sizes)
        .filter(|(_, &s)| s > 0)
        .map(|(&h, &s)| h as f64 / s as f64)
        .fold(f64::INFINITY, f64::min);
    let duplicate_prune_rate = if truth.duplicates_of.is_empty() {
        None
    } else {
        let kept = truth.duplicates_of.keys().filter(|&&i| picked[i]).count();
        Some(1.0 - kept as f64 / truth.duplicates_of.len() as f64)
    };
    Ok(SelectionMetrics {
        cluster_coverage: covered as f64 / truth.n_clusters as f64,
        min_cluster_share: min_share,
        duplicate_prune_rate,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanStd {
    pub mean: f64,
    pub std: f64,
}

impl MeanStd {
    fn of(values: &[f64]) -> Self {
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let var = if values.len() > 1 {
            values.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (n - 1.0)
        } else {
            0.0
        };
        MeanStd {
            mean,
            std: var.sqrt(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SelectorSummary {
    pub selector: String,
    pub cluster_coverage: MeanStd,
    pub min_cluster_share: MeanStd,
    pub duplicate_prune_rate: Option<MeanStd>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ComparisonTable {
    pub tau: f64,
    pub seeds: Vec<u64>,
    pub rows: Vec<SelectorSummary>,
}

impl ComparisonTable {
    pub fn row(&self, kind: SelectorKind) -> Option<&SelectorSummary> {
        self.rows.iter().find(|r| r.selector == kind.name())
    }
}

/// Runs each selector on a fresh world per seed and aggregates the metrics.
/// The world seed doubles as the selector seed.
pub fn compare_selectors(
    config: &SynthConfig,
    tau: f64,
    seeds: &[u64],
    selectors: &[SelectorSpec],
) -> Result<ComparisonTable> {
    validate_tau(tau)?;
    if selectors.len() < 2 {
        return Err(PrismError::contract("comparison needs at least 2 selectors"));
    }
    if seeds.len() < 5 {
        return Err(PrismError::contract("comparison needs at least 5 seeds"));
    }
    let mut per_selector: Vec<Vec<SelectionMetrics>> = vec![Vec::new(); selectors.len()];
    for &seed in seeds {
        let world = generate(&config.with_seed(seed))?;
        for (spec, out) in selectors.iter().zip(per_selector.iter_mut()) {
            let spec = SelectorSpec {
                seed: spec.seed.or(Some(seed)),
                ..*spec
            };
            let result = spec.run(&world.handle, tau)?;
            out.push(evaluate_selection(&result, &world.truth)?);
        }
    }
    let rows = selectors
        .iter()
        .zip(per_selector)
        .map(|(spec, metrics)| {
            let coverage: Vec<f64> = metrics.iter().map(|m| m.cluster_coverage).collect();
            let share: Vec<f64> = metrics.iter().map(|m| m.min_cluster_share).collect();
            let prune: Option<Vec<f64>> =
                metrics.iter().map(|m| m.duplicate_prune_rate).collect();
            SelectorSummary {
                selector: spec.kind.name().to_string(),
                cluster_coverage: MeanStd::of(&coverage),
                min_cluster_share: MeanStd::of(&share),
                duplicate_prune_rate: prune.map(|p| MeanStd::of(&p)),
            }
        })
        .collect();
    Ok(ComparisonTable {
        tau,
        seeds: seeds.to_vec(),
        rows,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn small(seed: u64) -> SynthConfig {
        SynthConfig {
            n_samples: 300,
            dim: 32,
            n_clusters: 3,
            drift_ratio_target: 5.0,
            cluster_spread: 1.0,
            residual_sigma: 0.2,
            duplicate_fraction: 0.2,
            seed,
            cluster_imbalance: 1.0,
            scale_jitter: 0.0,
            duplicate_group_size: 1,
        }
    }

    #[test]
    fn apportion_sums() {
        assert_eq!(apportion(10, &[1.0, 1.0]), vec![5, 5]);
        let parts = apportion(100, &[1.0, 0.5, 0.25]);
        assert_eq!(parts.iter().sum::<usize>(), 100);
        assert!(parts[0] > parts[1] && parts[1] > parts[2]);
        assert_eq!(apportion(3, &[1.0, 1e-9, 1e-9]), vec![1, 1, 1]);
    }

    #[test]
    fn centers_are_orthonormal_and_zero_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let cs = orthonormal_centers(&mut rng, 16, 5);
        for (a, ca) in cs.iter().enumerate() {
            assert!(ca.iter().sum::<f64>().abs() < 1e-12);
            for (b, cb) in cs.iter().enumerate() {
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((dot(ca, cb) - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn duplicates_are_exact_copies() {
        let world = generate(&small(1)).unwrap();
        assert_eq!(world.truth.duplicates_of.len(), 60);
        let m = world.handle.matrix();
        for (&dup, &orig) in &world.truth.duplicates_of {
            assert!(orig < dup);
            assert_eq!(m.row(dup), m.row(orig));
            assert_eq!(world.truth.cluster_of[dup], world.truth.cluster_of[orig]);
        }
    }

    #[test]
    fn deterministic_per_seed() {
        let a = generate(&small(9)).unwrap();
        let b = generate(&small(9)).unwrap();
        assert_eq!(a.handle, b.handle);
        assert_eq!(a.truth, b.truth);
        let c = generate(&small(10)).unwrap();
        assert_ne!(a.handle.matrix(), c.handle.matrix());
    }

    #[test]
    fn config_validation() {
        let mut c = small(0);
        c.dim = 3;
        assert!(generate(&c).is_err());
        let mut c = small(0);
        c.duplicate_fraction = 1.0;
        assert!(generate(&c).is_err());
        let mut c = small(0);
        c.n_clusters = 0;
        assert!(generate(&c).is_err());
        assert!(SynthConfig::preset("nope").is_err());
    }

    #[test]
    fn config_json_defaults() {
        let json = r#"{"n_samples":10,"dim":4,"n_clusters":2,"drift_ratio_target":1.0,
            "cluster_spread":1.0,"residual_sigma":0.1,"duplicate_fraction":0.0,"seed":3}"#;
        let c: SynthConfig = serde_json::from_str(json).unwrap();
        assert_eq!(c.cluster_imbalance, 1.0);
        assert_eq!(c.duplicate_group_size, 1);
        assert!(serde_json::from_str::<SynthConfig>(r#"{"n_samples":1,"bogus":2}"#).is_err());
    }

    #[test]
    fn evaluate_full_and_one_per_cluster() {
        let world = generate(&small(2)).unwrap();
        let n = world.handle.n_samples();
        let full = SelectionResult {
            selected: (0..n).collect(),
            selected_ids: vec![],
            tau_percent: 100.0,
            threshold_value: None,
            selector_name: "all".into(),
            seed: None,
        };
        let m = evaluate_selection(&full, &world.truth).unwrap();
        assert_eq!(m.cluster_coverage, 1.0);
        assert_eq!(m.min_cluster_share, 1.0);
        assert_eq!(m.duplicate_prune_rate, Some(0.0));

        let mut one_each = Vec::new();
        for c in 0..3 {
            one_each.push(world.truth.cluster_of.iter().position(|&x| x == c).unwrap());
        }
        let r = SelectionResult {
            selected: one_each,
            ..full.clone()
        };
        assert_eq!(evaluate_selection(&r, &world.truth).unwrap().cluster_coverage, 1.0);

        let bad = SelectionResult {
            selected: vec![n + 5],
            ..full
        };
        assert!(evaluate_selection(&bad, &world.truth).is_err());
    }
}

//! Reference selectors that work in the raw (uncentered) embedding space.

use std::fmt;
use std::str::FromStr;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{PrismError, Result};
use crate::feature_store::DatasetHandle;
use crate::geometry::normalize_into;
use crate::redundancy::{
    budget, build_result, mean_similarity_scores, redundancy_scores, select, select_by_score,
    validate_tau, Direction, SelectionResult,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum SelectorKind {
    Prism,
    Random,
    Fps,
    CosineRedundancy,
}

impl SelectorKind {
    pub const ALL: [SelectorKind; 4] = [
        SelectorKind::Prism,
        SelectorKind::Random,
        SelectorKind::Fps,
        SelectorKind::CosineRedundancy,
    ];

    pub fn name(self) -> &'static str {
        match self {
            SelectorKind::Prism => "prism",
            SelectorKind::Random => "random",
            SelectorKind::Fps => "fps",
            SelectorKind::CosineRedundancy => "cosine",
        }
    }

    pub fn uses_seed(self) -> bool {
        matches!(self, SelectorKind::Random | SelectorKind::Fps)
    }
}

impl fmt::Display for SelectorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for SelectorKind {
    type Err = PrismError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "prism" => Ok(SelectorKind::Prism),
            "random" => Ok(SelectorKind::Random),
            "fps" => Ok(SelectorKind::Fps),
            "cosine" | "cosine_redundancy" => Ok(SelectorKind::CosineRedundancy),
            other => Err(PrismError::contract(format!("unknown selector {other:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum FpsMetric {
    #[default]
    Cosine,
    Euclidean,
}

impl FpsMetric {
    pub fn name(self) -> &'static str {
        match self {
            FpsMetric::Cosine => "cosine",
            FpsMetric::Euclidean => "euclidean",
        }
    }
}

impl FromStr for FpsMetric {
    type Err = PrismError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "cosine" => Ok(FpsMetric::Cosine),
            "euclidean" => Ok(FpsMetric::Euclidean),
            other => Err(PrismError::contract(format!("unknown FPS metric {other:?}"))),
        }
    }
}

/// A fully specified selector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SelectorSpec {
    pub kind: SelectorKind,
    pub seed: Option<u64>,
    pub metric: FpsMetric,
}

impl SelectorSpec {
    pub fn new(kind: SelectorKind, seed: Option<u64>) -> Self {
        SelectorSpec {
            kind,
            seed,
            metric: FpsMetric::default(),
        }
    }

    pub fn with_metric(mut self, metric: FpsMetric) -> Self {
        self.metric = metric;
        self
    }

    fn require_seed(&self) -> Result<u64> {
        self.seed
            .ok_or_else(|| PrismError::contract(format!("selector {} needs a seed", self.kind)))
    }

    pub fn run(&self, handle: &DatasetHandle, tau: f64) -> Result<SelectionResult> {
        match self.kind {
            SelectorKind::Prism => select(&redundancy_scores(handle)?, handle.manifest(), tau),
            SelectorKind::Random => random_select(handle, tau, self.require_seed()?),
            SelectorKind::Fps => {
                farthest_point_select(handle, tau, self.metric, self.require_seed()?)
            }
            SelectorKind::CosineRedundancy => cosine_redundancy_select(handle, tau),
        }
    }
}

/// Uniform sample without replacement, reproducible per seed.
pub fn random_select(handle: &DatasetHandle, tau: f64, seed: u64) -> Result<SelectionResult> {
    validate_tau(tau)?;
    let n = handle.n_samples();
    let k = budget(n, tau);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut chosen = rand::seq::index::sample(&mut rng, n, k).into_vec();
    chosen.sort_unstable();
    Ok(build_result(handle.manifest(), chosen, tau, None, "random", Some(seed)))
}

/// Greedy max-min (farthest point) selection from a seed-chosen start.
///
/// `threshold_value` reports the max-min distance at the last pick.
pub fn farthest_point_select(
    handle: &DatasetHandle,
    tau: f64,
    metric: FpsMetric,
    seed: u64,
) -> Result<SelectionResult> {
    validate_tau(tau)?;
    let (n, d) = (handle.n_samples(), handle.dim());
    if n < 2 {
        return Err(PrismError::contract("farthest point sampling needs at least 2 samples"));
    }
    let k = budget(n, tau);

    let mut points = vec![0.0f64; n * d];
    for (i, (row, out)) in handle
        .matrix()
        .rows()
        .zip(points.chunks_exact_mut(d))
        .enumerate()
    {
        match metric {
            FpsMetric::Euclidean => {
                for (o, &x) in out.iter_mut().zip(row) {
                    *o = x as f64;
                }
            }
            FpsMetric::Cosine => {
                if !normalize_into(row, out) {
                    return Err(PrismError::DegenerateInput(format!(
                        "row {i} has zero norm; cosine distance undefined"
                    )));
                }
            }
        }
    }
    let distance = |a: &[f64], b: &[f64]| -> f64 {
        match metric {
            FpsMetric::Euclidean => a
                .iter()
                .zip(b)
                .map(|(x, y)| (x - y) * (x - y))
                .sum::<f64>()
                .sqrt(),
            FpsMetric::Cosine => {
                let c: f64 = a.iter().zip(b).map(|(x, y)| x * y).sum();
                1.0 - c.clamp(-1.0, 1.0)
            }
        }
    };

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let start = rand::Rng::random_range(&mut rng, 0..n);
    let mut chosen = Vec::with_capacity(k);
    let mut min_dist = vec![f64::INFINITY; n];
    let mut last_radius = None;
    let mut current = start;
    loop {
        chosen.push(current);
        min_dist[current] = f64::NEG_INFINITY;
        if chosen.len() == k {
            break;
        }
        let anchor = &points[current * d..(current + 1) * d];
        min_dist
            .par_iter_mut()
            .zip(points.par_chunks(d))
            .for_each(|(m, p)| {
                if *m != f64::NEG_INFINITY {
                    *m = m.min(distance(anchor, p));
                }
            });
        // First index wins ties.
        let (next, radius) = min_dist
            .iter()
            .enumerate()
            .fold((usize::MAX, f64::NEG_INFINITY), |best, (i, &m)| {
                if m > best.1 {
                    (i, m)
                } else {
                    best
                }
            });
        current = next;
        last_radius = Some(radius);
    }
    chosen.sort_unstable();
    Ok(build_result(handle.manifest(), chosen, tau, last_radius, "fps", Some(seed)))
}

/// Mean raw cosine of each sample against all others; keeps the lowest.
pub fn cosine_redundancy_scores(handle: &DatasetHandle) -> Result<Vec<f64>> {
    let (scores, zero_rows) = mean_similarity_scores(handle.matrix(), Direction::Raw)?;
    if let Some(&i) = zero_rows.first() {
        return Err(PrismError::DegenerateInput(format!(
            "row {i} has zero norm; cosine undefined"
        )));
    }
    Ok(scores)
}

pub fn cosine_redundancy_select(handle: &DatasetHandle, tau: f64) -> Result<SelectionResult> {
    validate_tau(tau)?;
    let scores = cosine_redundancy_scores(handle)?;
    select_by_score(&scores, handle.manifest(), tau, "cosine")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::feature_store::FeatureMatrix;

    fn handle(rows: &[&[f64]]) -> DatasetHandle {
        DatasetHandle::anonymous(FeatureMatrix::from_rows(rows).unwrap())
    }

    #[test]
    fn random_full_and_reproducible() {
        let rows: Vec<Vec<f64>> = (0..20).map(|i| vec![i as f64, 1.0]).collect();
        let h = DatasetHandle::anonymous(FeatureMatrix::from_rows(&rows).unwrap());
        assert_eq!(random_select(&h, 100.0, 3).unwrap().selected.len(), 20);
        let a = random_select(&h, 30.0, 11).unwrap();
        let b = random_select(&h, 30.0, 11).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.selected.len(), 6);
        assert_eq!(a.seed, Some(11));
    }

    #[test]
    fn fps_square_picks_diagonal() {
        let h = handle(&[&[0.0, 0.0], &[1.0, 0.0], &[1.0, 1.0], &[0.0, 1.0]]);
        for seed in 0..8 {
            let r = farthest_point_select(&h, 50.0, FpsMetric::Euclidean, seed).unwrap();
            assert!(
                r.selected == vec![0, 2] || r.selected == vec![1, 3],
                "{:?}",
                r.selected
            );
            assert!((r.threshold_value.unwrap() - 2f64.sqrt()).abs() < 1e-12);
        }
    }

    #[test]
    fn fps_identical_points() {
        let h = handle(&[&[1.0, 2.0][..]; 5]);
        let r = farthest_point_select(&h, 60.0, FpsMetric::Euclidean, 1).unwrap();
        assert_eq!(r.selected.len(), 3);
        assert_eq!(r.threshold_value, Some(0.0));
        let all = farthest_point_select(&h, 100.0, FpsMetric::Cosine, 1).unwrap();
        assert_eq!(all.selected, vec![0, 1, 2, 3, 4]);
    }

    #[test]
    fn fps_cosine_rejects_zero_rows() {
        let h = handle(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(matches!(
            farthest_point_select(&h, 50.0, FpsMetric::Cosine, 0),
            Err(PrismError::DegenerateInput(_))
        ));
    }

    #[test]
    fn cosine_scores_examples() {
        let same = handle(&[&[1.0, 2.0, 3.0][..]; 4]);
        for s in cosine_redundancy_scores(&same).unwrap() {
            assert!((s - 1.0).abs() < 1e-12);
        }
        let ortho = handle(&[&[2.0, 0.0, 0.0], &[0.0, 1.0, 0.0], &[0.0, 0.0, 5.0]]);
        for s in cosine_redundancy_scores(&ortho).unwrap() {
            assert!(s.abs() < 1e-12);
        }
        let zero = handle(&[&[0.0, 0.0], &[1.0, 0.0]]);
        assert!(cosine_redundancy_select(&zero, 50.0).is_err());
    }

    #[test]
    fn selector_names_round_trip() {
        for kind in SelectorKind::ALL {
            assert_eq!(kind.name().parse::<SelectorKind>().unwrap(), kind);
        }
        assert!("kmeans".parse::<SelectorKind>().is_err());
        assert!("manhattan".parse::<FpsMetric>().is_err());
    }

    #[test]
    fn seedless_random_is_contract_error() {
        let h = handle(&[&[1.0, 0.0], &[0.0, 1.0]]);
        let spec = SelectorSpec::new(SelectorKind::Random, None);
        assert!(matches!(spec.run(&h, 50.0), Err(PrismError::Contract(_))));
    }
}

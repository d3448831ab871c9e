mod common;

use prism_core::baselines::{SelectorKind, SelectorSpec};
use prism_core::diagnostics::drift_ratio;
use prism_core::feature_store::encode_pfm;
use prism_core::redundancy::redundancy_scores;
use prism_core::synthlab::{compare_selectors, generate, verify_theorem1, SynthConfig};

fn base(n: usize, d: usize, k: usize, r: f64, seed: u64) -> SynthConfig {
    SynthConfig {
        n_samples: n,
        dim: d,
        n_clusters: k,
        drift_ratio_target: r,
        cluster_spread: 1.0,
        residual_sigma: 1.0 / (d as f64).sqrt(),
        duplicate_fraction: 0.0,
        seed,
        cluster_imbalance: 1.0,
        scale_jitter: 0.0,
        duplicate_group_size: 1,
    }
}

fn all_selectors() -> Vec<SelectorSpec> {
    SelectorKind::ALL
        .iter()
        .map(|&k| SelectorSpec::new(k, None))
        .collect()
}

#[test]
fn duplicate_rows_are_byte_identical() {
    let mut c = base(1000, 16, 3, 5.0, 1);
    c.duplicate_fraction = 0.2;
    let world = generate(&c).unwrap();
    assert_eq!(world.truth.duplicates_of.len(), 200);
    let m = world.handle.matrix();
    for (&dup, &orig) in &world.truth.duplicates_of {
        let a: Vec<u32> = m.row(dup).iter().map(|v| v.to_bits()).collect();
        let b: Vec<u32> = m.row(orig).iter().map(|v| v.to_bits()).collect();
        assert_eq!(a, b);
    }
}

#[test]
fn same_seed_same_bytes() {
    let c = SynthConfig::preset("corollary1").unwrap().with_seed(17);
    let a = generate(&c).unwrap();
    let b = generate(&c).unwrap();
    assert_eq!(encode_pfm(a.handle.matrix()), encode_pfm(b.handle.matrix()));
    assert_eq!(a.handle.manifest(), b.handle.manifest());
    assert_eq!(a.truth, b.truth);
}

#[test]
fn realized_drift_ratio_tracks_target() {
    for (i, r) in [0.5, 1.0, 2.0, 5.0, 10.0, 20.0].into_iter().enumerate() {
        let mut c = base(1000, 64, 4, r, i as u64);
        c.duplicate_fraction = 0.1;
        c.scale_jitter = 0.3;
        let world = generate(&c).unwrap();
        let measured = drift_ratio(world.handle.matrix());
        assert!((measured - r).abs() <= 0.1 * r, "target {r}, got {measured}");
        assert!((world.truth.realized_drift_ratio - measured).abs() < 1e-12);
    }
}

#[test]
fn no_drift_single_cluster_is_isotropic() {
    let world = generate(&base(5000, 64, 1, 0.0, 3)).unwrap();
    let r = drift_ratio(world.handle.matrix());
    assert!(r < 0.2, "{r}");
}

#[test]
fn raw_cosine_rises_with_drift() {
    let cos: Vec<f64> = [1.0, 2.0, 5.0, 10.0, 20.0]
        .iter()
        .map(|&r| {
            verify_theorem1(&base(1000, 128, 4, r, 5), 500)
                .unwrap()
                .mean_raw_cosine
        })
        .collect();
    let inversions: Vec<f64> = cos
        .windows(2)
        .filter(|w| w[1] < w[0])
        .map(|w| w[0] - w[1])
        .collect();
    assert!(inversions.len() <= 1 && inversions.iter().all(|&d| d <= 0.005), "{cos:?}");
}

#[test]
fn approximation_error_falls_when_drift_doubles() {
    for r in [2.5, 5.0, 10.0] {
        let lo = verify_theorem1(&base(1000, 128, 4, r, 6), 400).unwrap();
        let hi = verify_theorem1(&base(1000, 128, 4, 2.0 * r, 6), 400).unwrap();
        assert!(hi.mean_approx_error < lo.mean_approx_error, "r = {r}");
    }
}

#[test]
fn duplicates_score_above_the_median() {
    for seed in 0..5 {
        let world = generate(&SynthConfig::preset("corollary1").unwrap().with_seed(seed)).unwrap();
        let scores = redundancy_scores(&world.handle).unwrap().scores;
        let mut sorted = scores.clone();
        sorted.sort_by(f64::total_cmp);
        let n = sorted.len();
        let median = 0.5 * (sorted[n / 2 - 1] + sorted[n / 2]);
        let duplicated = world
            .truth
            .duplicates_of
            .iter()
            .flat_map(|(&d, &o)| [d, o]);
        for i in duplicated {
            assert!(scores[i] > median, "seed {seed}: row {i} scores {} <= {median}", scores[i]);
        }
    }
}

#[test]
fn full_budget_makes_selectors_indistinguishable() {
    let mut c = base(300, 16, 3, 10.0, 0);
    c.duplicate_fraction = 0.2;
    let table = compare_selectors(&c, 100.0, &[0, 1, 2, 3, 4], &all_selectors()).unwrap();
    let first = &table.rows[0];
    for row in &table.rows[1..] {
        assert_eq!(row.cluster_coverage, first.cluster_coverage);
        assert_eq!(row.min_cluster_share, first.min_cluster_share);
        assert_eq!(row.duplicate_prune_rate, first.duplicate_prune_rate);
    }
    assert_eq!(first.duplicate_prune_rate.unwrap().mean, 0.0);
}

#[test]
fn prism_separates_from_raw_space_selectors() {
    let config = SynthConfig::preset("corollary1").unwrap();
    let seeds: Vec<u64> = (0..20).collect();
    let table = compare_selectors(&config, 30.0, &seeds, &all_selectors()).unwrap();
    let prism = table.row(SelectorKind::Prism).unwrap();
    let random = table.row(SelectorKind::Random).unwrap();
    let cosine = table.row(SelectorKind::CosineRedundancy).unwrap();

    assert!(prism.cluster_coverage.mean > cosine.cluster_coverage.mean);
    let prune = |r: &prism_core::synthlab::SelectorSummary| r.duplicate_prune_rate.unwrap().mean;
    assert!(prune(prism) >= 0.9);
    assert!(prune(prism) > prune(random));
}

#[test]
fn comparison_rejects_thin_inputs() {
    let c = base(100, 8, 2, 5.0, 0);
    assert!(compare_selectors(&c, 30.0, &[1, 2, 3], &all_selectors()).is_err());
    assert!(compare_selectors(&c, 30.0, &[1, 2, 3, 4, 5], &all_selectors()[..1]).is_err());
}

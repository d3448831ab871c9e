mod common;

use prism_core::geometry::{cosine, decompose, drift_cosine_approx, pearson};
use prism_core::FeatureMatrix;
use rand::Rng;

const N: usize = 50;
const D: usize = 8;
/// Entries are multiples of 2^-10, so `x * 1024` is an exact integer.
const GRID: f64 = 1024.0;

#[test]
fn decompose_matches_exact_integer_arithmetic() {
    let mut rng = common::rng(50);
    for _ in 0..20 {
        let ints: Vec<i64> = (0..N * D).map(|_| rng.random_range(-4_000_000..4_000_000)).collect();
        let values: Vec<f32> = ints.iter().map(|&v| (v as f64 / GRID) as f32).collect();
        assert!(ints.iter().zip(&values).all(|(&i, &v)| v as f64 * GRID == i as f64));
        let m = FeatureMatrix::new(N, D, values.clone()).unwrap();
        let dec = decompose(&m);
        let max_abs = values.iter().fold(0.0f64, |a, &v| a.max((v as f64).abs()));

        for c in 0..D {
            let col_sum: i128 = (0..N).map(|r| ints[r * D + c] as i128).sum();
            let exact_mu = col_sum as f64 / (N as f64 * GRID);
            assert!((dec.mu[c] - exact_mu).abs() <= f64::EPSILON * exact_mu.abs());

            let mut residual_mean = 0.0;
            for r in 0..N {
                // (N x - S) / (N * GRID), numerator exact in i128.
                let num = N as i128 * ints[r * D + c] as i128 - col_sum;
                let exact = num as f64 / (N as f64 * GRID);
                let got = dec.residual(r)[c];
                assert!(
                    (got - exact).abs() <= 2.0 * f64::EPSILON * max_abs,
                    "row {r} col {c}: {got} vs {exact}"
                );
                residual_mean += got;
            }
            residual_mean /= N as f64;
            assert!(residual_mean.abs() <= 1e-12 * max_abs, "{residual_mean}");
        }

        for r in 0..N {
            for c in 0..D {
                let back = dec.mu[c] + dec.residual(r)[c];
                let x = values[r * D + c] as f64;
                assert!((back - x).abs() <= f64::EPSILON * x.abs().max(dec.mu[c].abs()));
            }
        }
    }
}

#[test]
fn hand_values() {
    assert_eq!(cosine(&[1.0, 1.0], &[1.0, 0.0]).unwrap(), 0.7071067811865475);
    let p = pearson(&[1.0, 0.0, 0.0], &[0.0, 1.0, 0.0]).unwrap();
    assert!((p + 0.5).abs() < 1e-15);
    assert!((pearson(&[1.0, 2.0, 3.0], &[6.0, 7.0, 8.0]).unwrap() - 1.0).abs() < 1e-15);
}

fn random_unit(rng: &mut rand_chacha::ChaCha8Rng, d: usize) -> Vec<f64> {
    let v = &common::gaussian_rows(rng, 1, d, 1.0)[0];
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / n).collect()
}

/// Isotropic residuals with `E||delta|| = 1` around a mean of length `r`.
fn pair_cosines(seed: u64, r: f64, pairs: usize) -> Vec<(f64, f64)> {
    let d = 128;
    let mut rng = common::rng(seed);
    let mu: Vec<f64> = random_unit(&mut rng, d).iter().map(|x| x * r).collect();
    let scale = 1.0 / (d as f64).sqrt();
    (0..pairs)
        .map(|_| {
            let ds = common::gaussian_rows(&mut rng, 2, d, scale);
            let a = drift_cosine_approx(&mu, &ds[0], &ds[1]).unwrap();
            (a.exact, a.residual_error)
        })
        .collect()
}

#[test]
fn raw_cosine_collapses_with_drift() {
    for r in [5.0, 7.5, 10.0, 20.0] {
        let pairs = pair_cosines(r as u64, r, 500);
        let mean = pairs.iter().map(|p| p.0).sum::<f64>() / pairs.len() as f64;
        assert!(mean >= 1.0 - 3.0 / (r * r), "r = {r}: mean cosine {mean}");
    }
}

#[test]
fn approximation_error_shrinks_tenfold_with_tenfold_drift() {
    // Individual pairs can sit near a zero of the leading error term, so the
    // comparison is between Monte Carlo means over the same deltas.
    let d = 64;
    let mut rng = common::rng(10);
    for _ in 0..10 {
        let mu = random_unit(&mut rng, d);
        let big: Vec<f64> = mu.iter().map(|x| x * 10.0).collect();
        let (mut near, mut far) = (0.0, 0.0);
        for _ in 0..200 {
            let ds = common::gaussian_rows(&mut rng, 2, d, 0.2 / (d as f64).sqrt());
            near += drift_cosine_approx(&mu, &ds[0], &ds[1]).unwrap().residual_error;
            far += drift_cosine_approx(&big, &ds[0], &ds[1]).unwrap().residual_error;
        }
        assert!(far * 10.0 <= near, "{far} vs {near}");
    }
}

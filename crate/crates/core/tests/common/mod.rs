//! Shared fixtures and independent oracles for the integration suites.

#![allow(dead_code)]

use prism_core::{DatasetHandle, FeatureMatrix, ManifestEntry, SampleManifest};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn gaussian_rows(rng: &mut ChaCha8Rng, n: usize, d: usize, scale: f64) -> Vec<Vec<f64>> {
    (0..n)
        .map(|_| {
            (0..d)
                .map(|_| scale * rng.sample::<f64, _>(StandardNormal))
                .collect()
        })
        .collect()
}

pub fn matrix(rows: &[Vec<f64>]) -> FeatureMatrix {
    FeatureMatrix::from_rows(rows).unwrap()
}

pub fn handle_with_sources(rows: &[Vec<f64>], sources: &[&str]) -> DatasetHandle {
    let entries = (0..rows.len())
        .map(|i| ManifestEntry {
            sample_id: format!("s{i:05}"),
            source_tag: sources[i % sources.len()].to_string(),
        })
        .collect();
    DatasetHandle::new(matrix(rows), SampleManifest::new(entries).unwrap()).unwrap()
}

pub fn handle(rows: &[Vec<f64>]) -> DatasetHandle {
    handle_with_sources(rows, &["src"])
}

/// Pearson correlation written out from its definition, in f64.
pub fn naive_pearson(a: &[f32], b: &[f32]) -> Option<f64> {
    let d = a.len() as f64;
    let ma = a.iter().map(|&x| x as f64).sum::<f64>() / d;
    let mb = b.iter().map(|&x| x as f64).sum::<f64>() / d;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (&x, &y) in a.iter().zip(b) {
        let (x, y) = (x as f64 - ma, y as f64 - mb);
        num += x * y;
        va += x * x;
        vb += y * y;
    }
    let eps = 1e-12 * d.sqrt();
    if va.sqrt() < eps || vb.sqrt() < eps {
        None
    } else {
        Some(num / (va.sqrt() * vb.sqrt()))
    }
}

/// Mean pairwise correlation over all `j != i`, by the double loop. Pairs
/// with a constant row contribute zero; constant rows themselves score 1.
pub fn naive_scores(m: &FeatureMatrix) -> Vec<f64> {
    let n = m.n_samples();
    (0..n)
        .map(|i| {
            if naive_pearson(m.row(i), m.row(i)).is_none() {
                return 1.0;
            }
            let mut sum = 0.0;
            for j in 0..n {
                if j != i {
                    sum += naive_pearson(m.row(i), m.row(j)).unwrap_or(0.0);
                }
            }
            sum / (n - 1) as f64
        })
        .collect()
}

fn ranks(v: &[f64]) -> Vec<f64> {
    let mut order: Vec<usize> = (0..v.len()).collect();
    order.sort_by(|&a, &b| v[a].total_cmp(&v[b]));
    let mut r = vec![0.0; v.len()];
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && v[order[j + 1]] == v[order[i]] {
            j += 1;
        }
        let avg = (i + j) as f64 / 2.0;
        for &k in &order[i..=j] {
            r[k] = avg;
        }
        i = j + 1;
    }
    r
}

pub fn spearman(a: &[f64], b: &[f64]) -> f64 {
    let (ra, rb) = (ranks(a), ranks(b));
    let n = a.len() as f64;
    let m = (n - 1.0) / 2.0;
    let (mut num, mut va, mut vb) = (0.0, 0.0, 0.0);
    for (x, y) in ra.iter().zip(&rb) {
        num += (x - m) * (y - m);
        va += (x - m) * (x - m);
        vb += (y - m) * (y - m);
    }
    num / (va * vb).sqrt()
}

/// A valid feature file followed by ten ways of breaking its header or length.
pub fn corrupted_corpus(valid: &[u8]) -> Vec<(&'static str, Vec<u8>)> {
    let patch = |at: usize, bytes: &[u8]| {
        let mut v = valid.to_vec();
        v[at..at + bytes.len()].copy_from_slice(bytes);
        v
    };
    vec![
        ("bad magic", patch(0, b"PFM2")),
        ("lowercase magic", patch(0, b"pfm1")),
        ("version 0", patch(4, &0u32.to_le_bytes())),
        ("version 2", patch(4, &2u32.to_le_bytes())),
        ("zero samples", patch(8, &0u64.to_le_bytes())),
        ("dim 1", patch(16, &1u32.to_le_bytes())),
        ("dtype 1", patch(20, &[1])),
        ("reserved byte set", patch(27, &[0xff])),
        ("header cut short", valid[..20].to_vec()),
        ("payload cut short", valid[..valid.len() - 3].to_vec()),
    ]
}

pub fn prism(args: &[&str]) -> std::process::Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_prism"))
        .args(args)
        .env_remove("PRISM_THREADS")
        .output()
        .expect("spawn prism")
}

/// Runs every subcommand against fixtures in `dir` with `--threads threads`
/// and returns each output file's bytes, keyed by a short name.
pub fn run_all_subcommands(dir: &std::path::Path, threads: usize) -> Vec<(String, Vec<u8>)> {
    let features = dir.join("world.pfm");
    if !features.exists() {
        let mut config = prism_core::synthlab::SynthConfig::preset("corollary1").unwrap();
        config.n_samples = 1200;
        let world = prism_core::synthlab::generate(&config).unwrap();
        prism_core::feature_store::write_features(&world.handle, &features).unwrap();
        std::fs::write(
            dir.join("records.json"),
            r#"[{"label":"PRISM","perf_full":100,"perf_sub":101.7,"t_select":1.5,"t_tune_sub":28,"t_tune_full":94},
                {"label":"TIVE","perf_full":100,"perf_sub":100.6,"t_select":87,"t_tune_sub":14,"t_tune_full":94}]"#,
        )
        .unwrap();
    }
    let f = features.to_str().unwrap();
    let records = dir.join("records.json");
    let t = threads.to_string();
    let out = |name: &str| dir.join(format!("{name}.t{threads}.out"));
    let emitted = dir.join(format!("emitted.t{threads}.pfm"));

    let runs: Vec<(&str, Vec<String>)> = vec![
        ("diagnose", vec!["diagnose".into(), f.into(), "--k".into(), "8".into()]),
        ("diagnose-table", vec!["diagnose".into(), f.into(), "--format".into(), "table".into()]),
        ("score", vec!["score".into(), f.into()]),
        ("select-prism", vec!["select".into(), f.into(), "--tau".into(), "30".into()]),
        ("select-random", vec!["select".into(), f.into(), "--tau".into(), "30".into(), "--selector".into(), "random".into(), "--seed".into(), "5".into()]),
        ("select-fps", vec!["select".into(), f.into(), "--tau".into(), "10".into(), "--selector".into(), "fps".into(), "--seed".into(), "5".into(), "--metric".into(), "euclidean".into()]),
        ("select-cosine", vec!["select".into(), f.into(), "--tau".into(), "20".into(), "--selector".into(), "cosine".into()]),
        ("simulate", vec![
            "simulate".into(), "--preset".into(), "corollary1".into(), "--seed".into(), "3".into(),
            "--compare".into(), "prism,random,fps,cosine".into(), "--taus".into(), "10,30".into(),
            "--seeds".into(), "5".into(), "--emit".into(), emitted.to_str().unwrap().into(),
        ]),
        ("osc", vec!["osc".into(), "--perf-full".into(), "100".into(), "--perf-sub".into(), "101.7".into(),
            "--t-select".into(), "1.5".into(), "--t-tune-sub".into(), "28".into(), "--t-tune-full".into(), "94".into()]),
        ("osc-records", vec!["osc".into(), "--records".into(), records.to_str().unwrap().into()]),
    ];

    let mut files = Vec::new();
    for (name, mut args) in runs {
        let path = out(name);
        args.extend(["--out".into(), path.to_str().unwrap().into(), "--threads".into(), t.clone(), "-q".into()]);
        let argv: Vec<&str> = args.iter().map(String::as_str).collect();
        let o = prism(&argv);
        assert!(o.status.success(), "{name}: {}", String::from_utf8_lossy(&o.stderr));
        assert!(o.stdout.is_empty() && o.stderr.is_empty(), "{name} wrote to a stream");
        files.push((name.to_string(), std::fs::read(&path).unwrap()));
    }
    files.push(("emitted.pfm".into(), std::fs::read(&emitted).unwrap()));
    let sidecar = prism_core::feature_store::manifest_path(&emitted);
    files.push(("emitted.manifest".into(), std::fs::read(sidecar).unwrap()));
    files
}

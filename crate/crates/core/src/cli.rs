//! The `prism` command line.
//!
//! Exit codes: 0 success, 1 usage error, 2 data or format error, 3 contract
//! violation. Payloads go to `--out` (or stdout for `-`), diagnostics to
//! stderr.

use std::collections::BTreeMap;
use std::ffi::OsString;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::baselines::{FpsMetric, SelectorKind, SelectorSpec};
use crate::diagnostics::{anisotropy_report, mean_stats_table};
use crate::error::{PrismError, Result};
use crate::feature_store::{read_features, read_matrix, write_features};
use crate::io::write_atomic;
use crate::osc::{compare_records, osc, OscRecord};
use crate::redundancy::{per_source_counts, redundancy_scores};
use crate::synthlab::{
    compare_selectors, generate, theorem1_on, ComparisonTable, SynthConfig, Theorem1Check,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_USAGE: i32 = 1;
pub const EXIT_DATA: i32 = 2;
pub const EXIT_CONTRACT: i32 = 3;

const VERSION: &str = concat!(env!("CARGO_PKG_VERSION"), " (PFM format version 1)");

#[derive(Debug, Parser)]
#[command(name = "prism", version = VERSION, about = "Training-free data selection for embedding sets")]
struct Cli {
    /// Worker threads; defaults to PRISM_THREADS, then to the number of cores.
    #[arg(long, global = true, value_parser = clap::value_parser!(u16).range(1..))]
    threads: Option<u16>,

    /// Suppress progress messages on stderr.
    #[arg(long, short, global = true)]
    quiet: bool,

    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report per-dimension mean statistics, the singular spectrum and the drift ratio.
    Diagnose(DiagnoseArgs),
    /// Write per-sample redundancy scores as CSV.
    Score(ScoreArgs),
    /// Keep the least redundant tau percent of samples.
    Select(SelectArgs),
    /// Generate a synthetic world and check the theory on it.
    Simulate(SimulateArgs),
    /// Overall selection cost of a pipeline.
    Osc(OscArgs),
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum ReportFormat {
    Json,
    Table,
}

#[derive(Debug, Args)]
struct DiagnoseArgs {
    features: PathBuf,
    /// Number of leading singular values to report (default: min(10, N, d)).
    #[arg(long)]
    k: Option<usize>,
    #[arg(long, value_enum, default_value = "json")]
    format: ReportFormat,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug, Args)]
struct ScoreArgs {
    features: PathBuf,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug, Args)]
struct SelectArgs {
    features: PathBuf,
    /// Budget in percent, in (0, 100].
    #[arg(long, value_parser = parse_tau)]
    tau: f64,
    #[arg(long, default_value = "prism", value_parser = parse_selector)]
    selector: SelectorKind,
    #[arg(long)]
    seed: Option<u64>,
    /// Distance used by fps.
    #[arg(long, default_value = "cosine", value_parser = parse_metric)]
    metric: FpsMetric,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug, Args)]
struct SimulateArgs {
    /// Named configuration: theorem1 or corollary1.
    #[arg(long, conflicts_with = "config", required_unless_present = "config")]
    preset: Option<String>,
    /// JSON file with SynthConfig fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Overrides the configuration seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Random pairs used for the cosine-collapse measurement.
    #[arg(long, default_value_t = 1000)]
    pairs: usize,
    /// Comma-separated selectors to compare.
    #[arg(long, value_delimiter = ',', value_parser = parse_selector)]
    compare: Vec<SelectorKind>,
    /// Comma-separated budgets for the comparison.
    #[arg(long, value_delimiter = ',', value_parser = parse_tau, default_value = "30")]
    taus: Vec<f64>,
    /// Number of worlds per comparison, seeded consecutively from the base seed.
    #[arg(long, default_value_t = 20)]
    seeds: u64,
    /// Also write the generated world as a feature file with manifest.
    #[arg(long)]
    emit: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    out: String,
}

#[derive(Debug, Args)]
struct OscArgs {
    #[arg(long, required_unless_present = "records", conflicts_with = "records")]
    perf_full: Option<f64>,
    #[arg(long, required_unless_present = "records")]
    perf_sub: Option<f64>,
    /// Selection time in hours.
    #[arg(long, required_unless_present = "records")]
    t_select: Option<f64>,
    #[arg(long, required_unless_present = "records")]
    t_tune_sub: Option<f64>,
    #[arg(long, required_unless_present = "records")]
    t_tune_full: Option<f64>,
    #[arg(long, default_value = "run")]
    label: String,
    /// JSON list of records to rank.
    #[arg(long, conflicts_with_all = ["perf_sub", "t_select", "t_tune_sub", "t_tune_full"])]
    records: Option<PathBuf>,
    #[arg(long, default_value = "-")]
    out: String,
}

fn parse_tau(s: &str) -> std::result::Result<f64, String> {
    let tau: f64 = s.parse().map_err(|_| format!("{s:?} is not a number"))?;
    if tau.is_finite() && tau > 0.0 && tau <= 100.0 {
        Ok(tau)
    } else {
        Err(format!("tau must be in (0, 100], got {s}"))
    }
}

fn parse_selector(s: &str) -> std::result::Result<SelectorKind, String> {
    s.parse().map_err(|e: PrismError| e.to_string())
}

fn parse_metric(s: &str) -> std::result::Result<FpsMetric, String> {
    s.parse().map_err(|e: PrismError| e.to_string())
}

/// Parses `argv` (program name first), runs the subcommand and returns the
/// process exit code.
pub fn run<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_OK,
                _ => EXIT_USAGE,
            };
        }
    };

    let threads = match thread_count(cli.threads) {
        Ok(t) => t,
        Err(msg) => {
            eprintln!("error: {msg}");
            return EXIT_USAGE;
        }
    };
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(t) = threads {
        builder = builder.num_threads(t);
    }
    let pool = match builder.build() {
        Ok(p) => p,
        Err(e) => {
            eprintln!("error: cannot start worker pool: {e}");
            return EXIT_CONTRACT;
        }
    };

    let quiet = cli.quiet;
    match pool.install(|| dispatch(cli.command, quiet)) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("error: {e}");
            if e.is_data_error() {
                EXIT_DATA
            } else {
                EXIT_CONTRACT
            }
        }
    }
}

fn thread_count(flag: Option<u16>) -> std::result::Result<Option<usize>, String> {
    if let Some(t) = flag {
        return Ok(Some(t as usize));
    }
    match std::env::var("PRISM_THREADS") {
        Ok(v) if !v.trim().is_empty() => match v.trim().parse::<usize>() {
            Ok(t) if t > 0 => Ok(Some(t)),
            _ => Err(format!("PRISM_THREADS={v:?} is not a positive integer")),
        },
        _ => Ok(None),
    }
}

fn dispatch(command: Command, quiet: bool) -> Result<()> {
    let progress = |msg: String| {
        if !quiet {
            eprintln!("{msg}");
        }
    };
    match command {
        Command::Diagnose(a) => diagnose(a, progress),
        Command::Score(a) => score(a, progress),
        Command::Select(a) => select_cmd(a, progress),
        Command::Simulate(a) => simulate(a, progress),
        Command::Osc(a) => osc_cmd(a),
    }
}

fn emit(out: &str, bytes: &[u8]) -> Result<()> {
    if out == "-" {
        let mut stdout = std::io::stdout().lock();
        match stdout.write_all(bytes).and_then(|_| stdout.flush()) {
            // A closed reader (e.g. `| head`) is not a failure of ours.
            Err(e) if e.kind() == std::io::ErrorKind::BrokenPipe => Ok(()),
            other => other.map_err(|e| PrismError::io("<stdout>", e)),
        }
    } else {
        write_atomic(out, bytes)
    }
}

fn emit_json<T: Serialize>(out: &str, value: &T) -> Result<()> {
    let mut bytes = serde_json::to_vec_pretty(value)?;
    bytes.push(b'\n');
    emit(out, &bytes)
}

fn label_of(path: &Path) -> String {
    path.file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_else(|| path.display().to_string())
}

fn diagnose(a: DiagnoseArgs, progress: impl Fn(String)) -> Result<()> {
    let matrix = read_matrix(&a.features)?;
    let side = matrix.n_samples().min(matrix.dim());
    let k = a.k.unwrap_or(side.min(10));
    progress(format!(
        "diagnosing {} samples x {} dims",
        matrix.n_samples(),
        matrix.dim()
    ));
    let report = anisotropy_report(&matrix, k)?;
    match a.format {
        ReportFormat::Json => emit_json(&a.out, &report),
        ReportFormat::Table => {
            let table = mean_stats_table(&[(&label_of(&a.features), report.mean_stats)]);
            emit(&a.out, table.as_bytes())
        }
    }
}

fn score(a: ScoreArgs, progress: impl Fn(String)) -> Result<()> {
    let handle = read_features(&a.features)?;
    progress(format!("scoring {} samples", handle.n_samples()));
    let scores = redundancy_scores(&handle)?;
    let mut writer = csv::Writer::from_writer(Vec::new());
    let csv_err = |e: csv::Error| PrismError::Data(format!("csv encoding: {e}"));
    writer
        .write_record(["sample_id", "score", "degenerate"])
        .map_err(csv_err)?;
    for (i, s) in scores.scores.iter().enumerate() {
        let flag = if scores.is_degenerate(i) { "1" } else { "0" };
        writer
            .write_record([handle.manifest().id(i), &s.to_string(), flag])
            .map_err(csv_err)?;
    }
    let bytes = writer
        .into_inner()
        .map_err(|e| PrismError::Data(format!("csv encoding: {e}")))?;
    emit(&a.out, &bytes)
}

#[derive(Serialize)]
struct SelectionReport<'a> {
    tau: f64,
    threshold: Option<f64>,
    selected: &'a [String],
    per_source: BTreeMap<String, usize>,
    selector: &'a str,
    #[serde(skip_serializing_if = "Option::is_none")]
    seed: Option<u64>,
}

fn select_cmd(a: SelectArgs, progress: impl Fn(String)) -> Result<()> {
    let handle = read_features(&a.features)?;
    if a.seed.is_some() && !a.selector.uses_seed() {
        progress(format!("note: selector {} ignores --seed", a.selector));
    }
    let spec = SelectorSpec::new(a.selector, a.seed).with_metric(a.metric);
    progress(format!(
        "selecting {}% of {} samples with {}",
        a.tau,
        handle.n_samples(),
        a.selector
    ));
    let result = spec.run(&handle, a.tau)?;
    let report = SelectionReport {
        tau: result.tau_percent,
        threshold: result.threshold_value,
        selected: &result.selected_ids,
        per_source: per_source_counts(&result, handle.manifest())?,
        selector: &result.selector_name,
        seed: result.seed,
    };
    emit_json(&a.out, &report)
}

#[derive(Serialize)]
struct SimulationReport {
    config: SynthConfig,
    realized_drift_ratio: f64,
    cluster_sizes: Vec<usize>,
    n_duplicates: usize,
    theorem1: Theorem1Check,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    comparisons: Vec<ComparisonTable>,
}

fn simulate(a: SimulateArgs, progress: impl Fn(String)) -> Result<()> {
    let mut config = match (&a.preset, &a.config) {
        (Some(name), _) => SynthConfig::preset(name)?,
        (None, Some(path)) => {
            let text = std::fs::read_to_string(path).map_err(|e| PrismError::io(path, e))?;
            serde_json::from_str(&text)?
        }
        (None, None) => unreachable!("clap requires --preset or --config"),
    };
    if let Some(seed) = a.seed {
        config.seed = seed;
    }
    progress(format!(
        "generating {} x {} world, seed {}",
        config.n_samples, config.dim, config.seed
    ));
    let world = generate(&config)?;
    if let Some(path) = &a.emit {
        write_features(&world.handle, path)?;
    }
    let theorem1 = theorem1_on(&world, a.pairs, config.seed)?;

    let mut comparisons = Vec::new();
    if !a.compare.is_empty() {
        let seeds: Vec<u64> = (0..a.seeds).map(|i| config.seed.wrapping_add(i)).collect();
        let selectors: Vec<SelectorSpec> = a
            .compare
            .iter()
            .map(|&kind| SelectorSpec::new(kind, None))
            .collect();
        for &tau in &a.taus {
            progress(format!("comparing selectors at tau {tau} over {} seeds", seeds.len()));
            comparisons.push(compare_selectors(&config, tau, &seeds, &selectors)?);
        }
    }

    let report = SimulationReport {
        realized_drift_ratio: world.truth.realized_drift_ratio,
        cluster_sizes: world.truth.cluster_sizes(),
        n_duplicates: world.truth.duplicates_of.len(),
        config,
        theorem1,
        comparisons,
    };
    emit_json(&a.out, &report)
}

fn osc_cmd(a: OscArgs) -> Result<()> {
    if let Some(path) = &a.records {
        let text = std::fs::read_to_string(path).map_err(|e| PrismError::io(path, e))?;
        let records: Vec<OscRecord> = serde_json::from_str(&text)?;
        return emit_json(&a.out, &compare_records(&records)?);
    }
    let record = OscRecord {
        label: a.label,
        perf_full: a.perf_full.expect("clap enforces"),
        perf_sub: a.perf_sub.expect("clap enforces"),
        t_select: a.t_select.expect("clap enforces"),
        t_tune_sub: a.t_tune_sub.expect("clap enforces"),
        t_tune_full: a.t_tune_full.expect("clap enforces"),
    };
    emit_json(&a.out, &osc(&record)?)
}

//! C ABI over `prism-core`.
//!
//! Conventions:
//! * every fallible function returns a [`PrismStatus`]; on failure a message
//!   is available from [`prism_last_error_message`] on the same thread;
//! * datasets are opaque [`PrismDataset`] handles released with
//!   [`prism_dataset_free`];
//! * output buffers are caller-allocated, with their capacity passed in;
//! * panics never cross the boundary and surface as `PRISM_STATUS_PANIC`.

use std::cell::RefCell;
use std::ffi::{c_char, CStr, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};

use prism_core::baselines::{FpsMetric, SelectorKind, SelectorSpec};
use prism_core::diagnostics::anisotropy_report;
use prism_core::feature_store::{read_features, write_features, FORMAT_VERSION};
use prism_core::osc::{osc, OscRecord};
use prism_core::redundancy::{budget, redundancy_scores};
use prism_core::{DatasetHandle, FeatureMatrix, PrismError, SampleManifest};

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrismStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidUtf8 = 2,
    Io = 3,
    Format = 4,
    Data = 5,
    Manifest = 6,
    Degenerate = 7,
    Contract = 8,
    BufferTooSmall = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrismSelector {
    Prism = 0,
    Random = 1,
    Fps = 2,
    Cosine = 3,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PrismMetric {
    Cosine = 0,
    Euclidean = 1,
}

/// Opaque dataset: a feature matrix plus its manifest.
pub struct PrismDataset {
    inner: DatasetHandle,
}

/// Summary of an anisotropy diagnosis. `drift_ratio` is `INFINITY` when all
/// rows are identical.
#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrismAnisotropy {
    pub mean_min: f64,
    pub mean_p25: f64,
    pub mean_p75: f64,
    pub mean_p99: f64,
    pub mean_max: f64,
    pub mean_abs: f64,
    pub k: usize,
    pub energy_topk: f64,
    pub effective_rank: f64,
    pub drift_ratio: f64,
}

#[repr(C)]
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct PrismOscResult {
    pub score: f64,
    pub performance_ratio: f64,
    pub time_ratio: f64,
    pub viable: bool,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

struct Failure {
    status: PrismStatus,
    message: String,
}

impl Failure {
    fn new(status: PrismStatus, message: impl Into<String>) -> Self {
        Failure {
            status,
            message: message.into(),
        }
    }
}

impl From<PrismError> for Failure {
    fn from(e: PrismError) -> Self {
        let status = match &e {
            PrismError::Format(_) | PrismError::Truncated { .. } | PrismError::Json(_) => {
                PrismStatus::Format
            }
            PrismError::Data(_) => PrismStatus::Data,
            PrismError::Manifest(_) => PrismStatus::Manifest,
            PrismError::Contract(_) => PrismStatus::Contract,
            PrismError::DegenerateInput(_) => PrismStatus::Degenerate,
            PrismError::Io { .. } => PrismStatus::Io,
        };
        Failure::new(status, e.to_string())
    }
}

fn set_last_error(message: &str) {
    let c = CString::new(message.replace('\0', " ")).unwrap_or_default();
    LAST_ERROR.with(|slot| *slot.borrow_mut() = Some(c));
}

fn guard(f: impl FnOnce() -> Result<(), Failure>) -> PrismStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => {
            LAST_ERROR.with(|slot| *slot.borrow_mut() = None);
            PrismStatus::Ok
        }
        Ok(Err(failure)) => {
            set_last_error(&failure.message);
            failure.status
        }
        Err(payload) => {
            let msg = payload
                .downcast_ref::<&str>()
                .map(|s| s.to_string())
                .or_else(|| payload.downcast_ref::<String>().cloned())
                .unwrap_or_else(|| "unknown panic".into());
            set_last_error(&format!("panic: {msg}"));
            PrismStatus::Panic
        }
    }
}

fn non_null<T>(p: *const T, name: &str) -> Result<(), Failure> {
    if p.is_null() {
        Err(Failure::new(PrismStatus::NullPointer, format!("{name} is NULL")))
    } else {
        Ok(())
    }
}

/// # Safety
/// `ds` must be NULL or a live handle from this library.
unsafe fn dataset<'a>(ds: *const PrismDataset) -> Result<&'a DatasetHandle, Failure> {
    non_null(ds, "dataset")?;
    Ok(&(*ds).inner)
}

/// # Safety
/// `s` must be NULL or a NUL-terminated string.
unsafe fn path_arg<'a>(s: *const c_char, name: &str) -> Result<&'a str, Failure> {
    non_null(s, name)?;
    CStr::from_ptr(s)
        .to_str()
        .map_err(|_| Failure::new(PrismStatus::InvalidUtf8, format!("{name} is not UTF-8")))
}

/// Message describing the last failure on the calling thread, or NULL after
/// a success. Valid until the next library call on this thread.
#[no_mangle]
pub extern "C" fn prism_last_error_message() -> *const c_char {
    LAST_ERROR.with(|slot| {
        slot.borrow()
            .as_ref()
            .map_or(std::ptr::null(), |c| c.as_ptr())
    })
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn prism_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

#[no_mangle]
pub extern "C" fn prism_format_version() -> u32 {
    FORMAT_VERSION
}

/// Number of samples kept at `tau` percent of `n`, or 0 if `tau` is outside
/// (0, 100].
#[no_mangle]
pub extern "C" fn prism_budget(n: usize, tau: f64) -> usize {
    if n == 0 || prism_core::redundancy::validate_tau(tau).is_err() {
        0
    } else {
        budget(n, tau)
    }
}

/// Reads a feature file and its manifest sidecar.
///
/// # Safety
/// `path` must be a NUL-terminated string and `out` a writable pointer.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_read(
    path: *const c_char,
    out: *mut *mut PrismDataset,
) -> PrismStatus {
    guard(|| {
        non_null(out, "out")?;
        let path = path_arg(path, "path")?;
        let inner = read_features(path)?;
        *out = Box::into_raw(Box::new(PrismDataset { inner }));
        Ok(())
    })
}

/// Builds a dataset from `n * dim` row-major floats. Samples get ids
/// `"0"`, `"1"`, ... and the source tag `source` (or `"default"` when NULL).
///
/// # Safety
/// `values` must point to `n * dim` readable floats, `source` must be NULL
/// or NUL-terminated, and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_from_raw(
    values: *const f32,
    n: usize,
    dim: usize,
    source: *const c_char,
    out: *mut *mut PrismDataset,
) -> PrismStatus {
    guard(|| {
        non_null(out, "out")?;
        non_null(values, "values")?;
        let len = n
            .checked_mul(dim)
            .ok_or_else(|| Failure::new(PrismStatus::Contract, "n * dim overflows"))?;
        let source = if source.is_null() {
            "default"
        } else {
            path_arg(source, "source")?
        };
        let data = std::slice::from_raw_parts(values, len).to_vec();
        let matrix = FeatureMatrix::new(n, dim, data)?;
        let inner = DatasetHandle::new(matrix, SampleManifest::sequential(n, source))?;
        *out = Box::into_raw(Box::new(PrismDataset { inner }));
        Ok(())
    })
}

/// Writes the dataset as a feature file plus manifest sidecar.
///
/// # Safety
/// `ds` must be a live handle and `path` NUL-terminated.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_write(
    ds: *const PrismDataset,
    path: *const c_char,
) -> PrismStatus {
    guard(|| {
        let h = dataset(ds)?;
        write_features(h, path_arg(path, "path")?)?;
        Ok(())
    })
}

/// Releases a handle. NULL is ignored.
///
/// # Safety
/// `ds` must be NULL or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_free(ds: *mut PrismDataset) {
    if !ds.is_null() {
        drop(Box::from_raw(ds));
    }
}

/// # Safety
/// `ds` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_n_samples(ds: *const PrismDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.n_samples())
}

/// # Safety
/// `ds` must be NULL or a live handle. Returns 0 for NULL.
#[no_mangle]
pub unsafe extern "C" fn prism_dataset_dim(ds: *const PrismDataset) -> usize {
    ds.as_ref().map_or(0, |d| d.inner.dim())
}

/// Redundancy score of every sample. `scores` needs room for `capacity >=
/// n_samples` values; `degenerate` may be NULL, otherwise it receives 1 for
/// constant rows and 0 elsewhere.
///
/// # Safety
/// Buffers must be writable for `capacity` elements.
#[no_mangle]
pub unsafe extern "C" fn prism_redundancy_scores(
    ds: *const PrismDataset,
    scores: *mut f64,
    degenerate: *mut u8,
    capacity: usize,
) -> PrismStatus {
    guard(|| {
        let h = dataset(ds)?;
        non_null(scores, "scores")?;
        let n = h.n_samples();
        if capacity < n {
            return Err(Failure::new(
                PrismStatus::BufferTooSmall,
                format!("need {n} slots, got {capacity}"),
            ));
        }
        let result = redundancy_scores(h)?;
        std::slice::from_raw_parts_mut(scores, n).copy_from_slice(&result.scores);
        if !degenerate.is_null() {
            let flags = std::slice::from_raw_parts_mut(degenerate, n);
            for (i, f) in flags.iter_mut().enumerate() {
                *f = result.is_degenerate(i) as u8;
            }
        }
        Ok(())
    })
}

/// Selects `prism_budget(n, tau)` sample indices, ascending, into `indices`.
/// `seed` may be NULL for selectors that do not use one. `threshold` may be
/// NULL; it receives the selection threshold or NAN when the selector has
/// none.
///
/// # Safety
/// `indices` must be writable for `capacity` elements; `count` writable;
/// `seed` and `threshold` NULL or valid.
#[no_mangle]
#[allow(clippy::too_many_arguments)]
pub unsafe extern "C" fn prism_select(
    ds: *const PrismDataset,
    tau: f64,
    selector: PrismSelector,
    metric: PrismMetric,
    seed: *const u64,
    indices: *mut usize,
    capacity: usize,
    count: *mut usize,
    threshold: *mut f64,
) -> PrismStatus {
    guard(|| {
        let h = dataset(ds)?;
        non_null(indices, "indices")?;
        non_null(count, "count")?;
        let kind = match selector {
            PrismSelector::Prism => SelectorKind::Prism,
            PrismSelector::Random => SelectorKind::Random,
            PrismSelector::Fps => SelectorKind::Fps,
            PrismSelector::Cosine => SelectorKind::CosineRedundancy,
        };
        let metric = match metric {
            PrismMetric::Cosine => FpsMetric::Cosine,
            PrismMetric::Euclidean => FpsMetric::Euclidean,
        };
        let seed = seed.as_ref().copied();
        let result = SelectorSpec::new(kind, seed)
            .with_metric(metric)
            .run(h, tau)?;
        let k = result.selected.len();
        *count = k;
        if capacity < k {
            return Err(Failure::new(
                PrismStatus::BufferTooSmall,
                format!("need {k} slots, got {capacity}"),
            ));
        }
        std::slice::from_raw_parts_mut(indices, k).copy_from_slice(&result.selected);
        if !threshold.is_null() {
            *threshold = result.threshold_value.unwrap_or(f64::NAN);
        }
        Ok(())
    })
}

/// Anisotropy summary with the top `k` singular values written to
/// `singular_values` (which may be NULL).
///
/// # Safety
/// `out` must be writable; `singular_values` NULL or writable for `k` values.
#[no_mangle]
pub unsafe extern "C" fn prism_anisotropy(
    ds: *const PrismDataset,
    k: usize,
    out: *mut PrismAnisotropy,
    singular_values: *mut f64,
) -> PrismStatus {
    guard(|| {
        let h = dataset(ds)?;
        non_null(out, "out")?;
        let r = anisotropy_report(h.matrix(), k)?;
        let s = r.mean_stats;
        *out = PrismAnisotropy {
            mean_min: s.min,
            mean_p25: s.p25,
            mean_p75: s.p75,
            mean_p99: s.p99,
            mean_max: s.max,
            mean_abs: s.mean_abs,
            k: r.spectrum.k,
            energy_topk: r.spectrum.energy_topk,
            effective_rank: r.spectrum.effective_rank,
            drift_ratio: r.drift_ratio,
        };
        if !singular_values.is_null() {
            std::slice::from_raw_parts_mut(singular_values, k)
                .copy_from_slice(&r.spectrum.singular_values);
        }
        Ok(())
    })
}

/// Overall selection cost; times in hours.
///
/// # Safety
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn prism_osc(
    perf_full: f64,
    perf_sub: f64,
    t_select: f64,
    t_tune_sub: f64,
    t_tune_full: f64,
    out: *mut PrismOscResult,
) -> PrismStatus {
    guard(|| {
        non_null(out, "out")?;
        let r = osc(&OscRecord {
            label: "ffi".into(),
            perf_full,
            perf_sub,
            t_select,
            t_tune_sub,
            t_tune_full,
        })?;
        *out = PrismOscResult {
            score: r.score,
            performance_ratio: r.performance_ratio,
            time_ratio: r.time_ratio,
            viable: r.viable,
        };
        Ok(())
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn panics_become_status() {
        let st = guard(|| panic!("boom"));
        assert_eq!(st, PrismStatus::Panic);
        let msg = unsafe { CStr::from_ptr(prism_last_error_message()) };
        assert_eq!(msg.to_str().unwrap(), "panic: boom");
        assert_eq!(guard(|| Ok(())), PrismStatus::Ok);
        assert!(prism_last_error_message().is_null());
    }
}

//! Sample embeddings on disk and in memory.
//!
//! A dataset is a dense row-major `f32` matrix (`.pfm` file) paired with a
//! JSON sidecar manifest (`<stem>.manifest.json`) that names each row. The
//! binary layout is:
//!
//! | bytes  | field                                   |
//! |--------|-----------------------------------------|
//! | 0..4   | magic `PFM1`                            |
//! | 4..8   | version, `u32` LE, always 1             |
//! | 8..16  | `n_samples`, `u64` LE                   |
//! | 16..20 | `dim`, `u32` LE                         |
//! | 20     | dtype code (0 = `f32` LE)               |
//! | 21..32 | reserved, zero                          |
//! | 32..   | `n_samples * dim` values, row-major     |

use std::collections::HashSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{PrismError, Result};
use crate::io::write_atomic;

pub const MAGIC: [u8; 4] = *b"PFM1";
pub const FORMAT_VERSION: u32 = 1;
pub const HEADER_LEN: usize = 32;
pub const DTYPE_F32: u8 = 0;

/// Dense `n_samples x dim` embedding matrix stored as `f32`.
///
/// Construction guarantees `n_samples >= 1`, `dim >= 2` and that every value
/// is finite.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    n_samples: usize,
    dim: usize,
    values: Vec<f32>,
}

impl FeatureMatrix {
    pub fn new(n_samples: usize, dim: usize, values: Vec<f32>) -> Result<Self> {
        if n_samples == 0 {
            return Err(PrismError::contract("feature matrix needs at least one sample"));
        }
        if dim < 2 {
            return Err(PrismError::contract(format!(
                "feature dimension must be at least 2, got {dim}"
            )));
        }
        if n_samples.checked_mul(dim) != Some(values.len()) {
            return Err(PrismError::contract(format!(
                "{} values cannot fill a {n_samples}x{dim} matrix",
                values.len()
            )));
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(PrismError::Data(format!(
                "non-finite value {} at row {}, column {}",
                values[pos],
                pos / dim,
                pos % dim
            )));
        }
        Ok(FeatureMatrix {
            n_samples,
            dim,
            values,
        })
    }

    /// Builds a matrix from `f64` rows, rounding to storage precision.
    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(PrismError::contract(format!(
                    "row {i} has length {}, expected {dim}",
                    row.len()
                )));
            }
            values.extend(row.iter().map(|&v| v as f32));
        }
        FeatureMatrix::new(rows.len(), dim, values)
    }

    pub fn n_samples(&self) -> usize {
        self.n_samples
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, f32> {
        self.values.chunks_exact(self.dim)
    }

    /// Applies `f` to every row, returning a new matrix.
    pub fn map_rows(&self, mut f: impl FnMut(usize, &[f32], &mut [f32])) -> Result<Self> {
        let mut values = vec![0.0f32; self.values.len()];
        for (i, (src, dst)) in self
            .rows()
            .zip(values.chunks_exact_mut(self.dim))
            .enumerate()
        {
            f(i, src, dst);
        }
        FeatureMatrix::new(self.n_samples, self.dim, values)
    }

    /// Selects rows by index, in the given order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Self> {
        let mut values = Vec::with_capacity(indices.len() * self.dim);
        for &i in indices {
            if i >= self.n_samples {
                return Err(PrismError::contract(format!("row index {i} out of range")));
            }
            values.extend_from_slice(self.row(i));
        }
        FeatureMatrix::new(indices.len(), self.dim, values)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ManifestEntry {
    #[serde(rename = "id")]
    pub sample_id: String,
    #[serde(rename = "source")]
    pub source_tag: String,
}

/// Ordered identities of the rows of a feature matrix.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SampleManifest {
    #[serde(rename = "samples")]
    pub entries: Vec<ManifestEntry>,
}

impl SampleManifest {
    pub fn new(entries: Vec<ManifestEntry>) -> Result<Self> {
        let manifest = SampleManifest { entries };
        manifest.check_unique()?;
        Ok(manifest)
    }

    /// Manifest with ids `"0"`, `"1"`, ... all tagged with `source`.
    pub fn sequential(n: usize, source: &str) -> Self {
        SampleManifest {
            entries: (0..n)
                .map(|i| ManifestEntry {
                    sample_id: i.to_string(),
                    source_tag: source.to_string(),
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn id(&self, i: usize) -> &str {
        &self.entries[i].sample_id
    }

    fn check_unique(&self) -> Result<()> {
        let mut seen = HashSet::with_capacity(self.entries.len());
        for e in &self.entries {
            if !seen.insert(e.sample_id.as_str()) {
                return Err(PrismError::contract(format!(
                    "duplicate sample id {:?} in manifest",
                    e.sample_id
                )));
            }
        }
        Ok(())
    }
}

/// A feature matrix together with its manifest. Immutable once built.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetHandle {
    matrix: FeatureMatrix,
    manifest: SampleManifest,
}

impl DatasetHandle {
    pub fn new(matrix: FeatureMatrix, manifest: SampleManifest) -> Result<Self> {
        if manifest.len() != matrix.n_samples() {
            return Err(PrismError::contract(format!(
                "manifest has {} entries but matrix has {} rows",
                manifest.len(),
                matrix.n_samples()
            )));
        }
        manifest.check_unique()?;
        Ok(DatasetHandle { matrix, manifest })
    }

    /// Wraps a matrix with sequential ids under a single source tag.
    pub fn anonymous(matrix: FeatureMatrix) -> Self {
        let manifest = SampleManifest::sequential(matrix.n_samples(), "default");
        DatasetHandle { matrix, manifest }
    }

    pub fn matrix(&self) -> &FeatureMatrix {
        &self.matrix
    }

    pub fn manifest(&self) -> &SampleManifest {
        &self.manifest
    }

    pub fn n_samples(&self) -> usize {
        self.matrix.n_samples()
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

pub fn encode_pfm(matrix: &FeatureMatrix) -> Vec<u8> {
    let mut out = Vec::with_capacity(HEADER_LEN + matrix.values.len() * 4);
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    out.extend_from_slice(&(matrix.n_samples as u64).to_le_bytes());
    out.extend_from_slice(&(matrix.dim as u32).to_le_bytes());
    out.push(DTYPE_F32);
    out.extend_from_slice(&[0u8; 11]);
    for v in &matrix.values {
        out.extend_from_slice(&v.to_le_bytes());
    }
    out
}

pub fn decode_pfm(bytes: &[u8]) -> Result<FeatureMatrix> {
    if bytes.len() < HEADER_LEN {
        return Err(PrismError::Truncated {
            expected: HEADER_LEN as u64,
            found: bytes.len() as u64,
        });
    }
    if bytes[0..4] != MAGIC {
        return Err(PrismError::Format(format!(
            "bad magic {:?}",
            String::from_utf8_lossy(&bytes[0..4])
        )));
    }
    let version = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
    if version != FORMAT_VERSION {
        return Err(PrismError::Format(format!("unsupported version {version}")));
    }
    let n_samples = u64::from_le_bytes(bytes[8..16].try_into().unwrap());
    let dim = u32::from_le_bytes(bytes[16..20].try_into().unwrap());
    if bytes[20] != DTYPE_F32 {
        return Err(PrismError::Format(format!("unknown dtype code {}", bytes[20])));
    }
    if bytes[21..HEADER_LEN].iter().any(|&b| b != 0) {
        return Err(PrismError::Format("reserved header bytes are not zero".into()));
    }
    if n_samples == 0 {
        return Err(PrismError::Format("header declares zero samples".into()));
    }
    if dim < 2 {
        return Err(PrismError::Format(format!("header declares dim {dim} < 2")));
    }
    let payload_len = n_samples
        .checked_mul(dim as u64)
        .and_then(|n| n.checked_mul(4))
        .ok_or_else(|| PrismError::Format("header dimensions overflow".into()))?;
    let found = (bytes.len() - HEADER_LEN) as u64;
    if found < payload_len {
        return Err(PrismError::Truncated {
            expected: payload_len,
            found,
        });
    }
    if found > payload_len {
        return Err(PrismError::Format(format!(
            "{} trailing bytes after payload",
            found - payload_len
        )));
    }
    let values = bytes[HEADER_LEN..]
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
        .collect();
    FeatureMatrix::new(n_samples as usize, dim as usize, values)
}

/// Location of the manifest sidecar for a feature file: `dir/stem.pfm` maps
/// to `dir/stem.manifest.json`.
pub fn manifest_path(features: &Path) -> PathBuf {
    let stem = features
        .file_stem()
        .map(|s| s.to_string_lossy().into_owned())
        .unwrap_or_default();
    features.with_file_name(format!("{stem}.manifest.json"))
}

/// Reads a feature file without its manifest.
pub fn read_matrix(path: impl AsRef<Path>) -> Result<FeatureMatrix> {
    let path = path.as_ref();
    let bytes = std::fs::read(path).map_err(|e| PrismError::io(path, e))?;
    decode_pfm(&bytes)
}

pub fn read_features(path: impl AsRef<Path>) -> Result<DatasetHandle> {
    let path = path.as_ref();
    let matrix = read_matrix(path)?;

    let sidecar = manifest_path(path);
    let text = std::fs::read_to_string(&sidecar).map_err(|e| {
        PrismError::Manifest(format!("cannot read {}: {e}", sidecar.display()))
    })?;
    let manifest: SampleManifest = serde_json::from_str(&text)
        .map_err(|e| PrismError::Manifest(format!("{}: {e}", sidecar.display())))?;
    if manifest.len() != matrix.n_samples() {
        return Err(PrismError::Manifest(format!(
            "{} lists {} samples, feature file has {}",
            sidecar.display(),
            manifest.len(),
            matrix.n_samples()
        )));
    }
    manifest
        .check_unique()
        .map_err(|e| PrismError::Manifest(e.to_string()))?;
    Ok(DatasetHandle { matrix, manifest })
}

/// Writes the feature file and its manifest sidecar, each atomically.
pub fn write_features(handle: &DatasetHandle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    // Handles built through `DatasetHandle::new` already satisfy this; the
    // check guards the FFI and deserialization routes.
    if handle.manifest.len() != handle.matrix.n_samples() {
        return Err(PrismError::contract("manifest and matrix lengths differ"));
    }
    handle.manifest.check_unique()?;

    write_atomic(path, &encode_pfm(&handle.matrix))?;
    let mut json = serde_json::to_vec_pretty(&handle.manifest)?;
    json.push(b'\n');
    write_atomic(manifest_path(path), &json)
}

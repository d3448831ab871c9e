//! Training-free data selection for embedding datasets.
//!
//! Samples are scored by their mean Pearson correlation with the rest of the
//! corpus. Per-vector re-centering cancels the shared offset that makes raw
//! cosine similarity collapse toward 1 in anisotropic embedding spaces. The
//! least redundant `tau` percent of samples are kept.
//!
//! Modules:
//! * [`feature_store`]: `.pfm` feature files and their JSON manifests;
//! * [`geometry`]: cosine, re-centered correlation, drift decomposition;
//! * [`diagnostics`]: per-dimension mean statistics, spectrum, drift ratio;
//! * [`redundancy`]: `O(N d)` redundancy scores and budgeted selection;
//! * [`baselines`]: random, farthest-point and raw-cosine selectors;
//! * [`synthlab`]: synthetic anisotropic worlds with ground truth;
//! * [`osc`]: the overall selection cost of a pipeline;
//! * [`cli`]: the `prism` command line.

pub mod baselines;
pub mod cli;
pub mod diagnostics;
pub mod error;
pub mod feature_store;
pub mod geometry;
pub mod io;
pub mod linalg;
pub mod osc;
pub mod redundancy;
pub mod reduce;
pub mod synthlab;

pub use error::{PrismError, Result};
pub use feature_store::{DatasetHandle, FeatureMatrix, ManifestEntry, SampleManifest};
pub use redundancy::{RedundancyScores, SelectionResult};

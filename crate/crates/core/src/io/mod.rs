//! Dataset files, result tables and run configuration.
//!
//! Native CSV: header `id,circuit,freq,zreal,zimag`; array cells hold
//! `;`-joined decimal literals, `circuit` is empty for unlabeled spectra.
//! Native JSONL: one object per line with the same keys (`circuit` may be
//! `null`). Floats are written in shortest round-trip form.

mod config;
mod dataset;
mod tables;

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::circuit::CircuitError;

pub use config::{FeatureConfig, GridConfig, RunConfig, SplitConfig};
pub use dataset::{read_dataset, read_dataset_from, write_dataset, write_dataset_to, ColumnMapping, DatasetFormat};
pub use tables::{
    read_feature_matrix, write_confusion_csv, write_feature_matrix, write_filter_report, write_fit_results,
    write_relevance, FitRecord,
};

#[derive(Debug, Error)]
pub enum IoError {
    #[error("{path}: {source}")]
    File {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("line {line}, column {column}: {message}")]
    Parse { line: u64, column: usize, message: String },
    #[error("record `{id}`: freq, zreal and zimag lengths differ")]
    LengthMismatch { id: String },
    #[error("record `{id}`: {source}")]
    Spectrum {
        id: String,
        #[source]
        source: CircuitError,
    },
    #[error("{0}")]
    Format(String),
}

impl IoError {
    pub fn file(path: &Path, source: std::io::Error) -> Self {
        IoError::File {
            path: path.to_path_buf(),
            source,
        }
    }
}

/// Shortest round-trip decimal, switching to exponent notation for very
/// small or very large magnitudes.
pub fn format_float(v: f64) -> String {
    let a = v.abs();
    if v == 0.0 || (1e-4..1e15).contains(&a) || !v.is_finite() {
        format!("{v}")
    } else {
        format!("{v:e}")
    }
}

pub(crate) fn join_floats(v: impl IntoIterator<Item = f64>) -> String {
    v.into_iter().map(format_float).collect::<Vec<_>>().join(";")
}

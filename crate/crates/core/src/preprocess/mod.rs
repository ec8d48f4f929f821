//! Spectrum filtering, common-grid interpolation and normalization.

mod filter;
mod interp;
mod matrix;
mod normalize;

pub use filter::{
    drop_positive_imag, failed_criteria, filter_dataset, filter_spectrum, FilterConfig, FilterDecision,
    FilterRecord, FilterReport, PairMode, RejectReason,
};
pub use interp::{interpolate, interpolate_dataset, CommonGrid, Interpolated};
pub use matrix::{raw_matrix, FeatureMatrix};
pub use normalize::{normalize_max_real, normalize_minmax, MinMaxNormalized};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum PreprocessError {
    #[error("spectrum `{id}` has {n} points; at least 2 are required")]
    TooFewPoints { id: String, n: usize },
    #[error("row {row} has non-positive maximum real part")]
    NonPositiveMaxReal { row: usize },
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
}

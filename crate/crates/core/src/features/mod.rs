//! Engineered features of interpolated spectra, treating log-frequency as time.

mod bank;
pub mod select;
pub mod series;

pub use bank::{
    default_bank, extract_features, featurize, reference_features, Channel, FeatureDef, FeatureKind, FeatureVector,
    TrendAttr,
};
pub use select::{benjamini_yekutieli, mann_whitney_u, select_relevant, RelevanceTable};
pub use series::{
    agg_linear_trend_rvalue, ar_coefficients, chunk_bounds, energy_ratio_by_chunks, minimum, number_peaks, Agg,
};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum FeatureError {
    #[error("series too short: need {needed}, got {got}")]
    TooShort { needed: usize, got: usize },
    #[error("empty series")]
    Empty,
    #[error("degenerate labels: {0}")]
    DegenerateLabels(String),
    #[error("FDR level must lie in (0, 1), got {0}")]
    InvalidLevel(f64),
}

//! Equivalent-circuit toolkit for impedance spectra: circuit simulation,
//! synthetic dataset generation, spectrum filtering and resampling,
//! time-series features with relevance selection, tree-ensemble
//! classification and Levenberg-Marquardt parameter fitting.
//!
//! Numeric cores are generic over [`Scalar`] (`f32` or `f64`); the aliases
//! below fix the scalar to `f64`, the `*32` ones to `f32`.

// `!(x > 0)` comparisons are deliberate: they also reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod circuit;
pub mod cli;
pub mod datagen;
pub mod dataset;
pub mod error;
pub mod features;
pub mod fit;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod model;
pub mod plot;
pub mod preprocess;
pub mod scalar;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Spectrum = circuit::Spectrum<f64>;
pub type Spectrum32 = circuit::Spectrum<f32>;
pub type FitResult = fit::FitResult<f64>;
pub type FitResult32 = fit::FitResult<f32>;
pub type Interpolated = preprocess::Interpolated<f64>;
pub type CommonGrid = preprocess::CommonGrid<f64>;
pub type FeatureVector = features::FeatureVector<f64>;

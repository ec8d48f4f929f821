use thiserror::Error;

use crate::circuit::CircuitError;
use crate::datagen::DatagenError;
use crate::features::FeatureError;
use crate::fit::FitError;
use crate::io::IoError;
use crate::metrics::MetricsError;
use crate::model::ModelError;
use crate::plot::PlotError;
use crate::preprocess::PreprocessError;

/// Crate-level error wrapping the per-module errors.
#[derive(Debug, Error)]
pub enum Error {
    #[error(transparent)]
    Circuit(#[from] CircuitError),
    #[error(transparent)]
    Datagen(#[from] DatagenError),
    #[error(transparent)]
    Preprocess(#[from] PreprocessError),
    #[error(transparent)]
    Features(#[from] FeatureError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Fit(#[from] FitError),
    #[error(transparent)]
    Io(#[from] IoError),
    #[error(transparent)]
    Plot(#[from] PlotError),
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

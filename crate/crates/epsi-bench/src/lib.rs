//! Experiment harness behind the `epsi-bench` binary: configuration parsing,
//! matrix loading/generation, solver dispatch, metric evaluation against
//! dense references, and atomic CSV trace emission.

mod config;
mod runner;

pub use config::{
    ConfigFile, ExperimentConfig, MatrixSource, Method, ReferenceMode, ShiftSpec,
    DENSE_REFERENCE_CAP,
};
pub use runner::{build_matrix, run_experiment, sketch_info, RunSummary, SketchInfo};

pub use epsi_core::metrics::compute_metrics;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Matrix(#[from] epsi_core::MatrixError),

    #[error(transparent)]
    Sketch(#[from] epsi_core::SketchError),

    #[error(transparent)]
    Solve(#[from] epsi_core::SolveError),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

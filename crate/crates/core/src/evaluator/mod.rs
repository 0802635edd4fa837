//! Embedding quality (mean rank), the sweep harness, and prediction metrics.

mod metrics;
mod rank;
mod sweep;

use thiserror::Error;

use crate::manifold::GeometryError;
use crate::trainer::TrainError;

pub(crate) use metrics::stable_sum;
pub use metrics::{auroc, auroc_scores, calibration_eavg, Prediction, ProbPredictionSet};
pub use rank::{mean_rank, CandidatePolicy, RankReport};
pub use sweep::{
    run_sweep, GridCell, GridSpec, SweepOptions, SweepReport, SweepRow, SWEEP_CSV_HEADER,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("embedding table lacks {} graph node(s): {}", .0.len(), .0.join(", "))]
    MissingNodes(Vec<String>),
    #[error("graph has no edges to evaluate")]
    NoEdges,
    #[error("undefined metric: {0}")]
    UndefinedMetric(String),
    #[error("prediction {index} has probability {value} outside [0, 1]")]
    InvalidPrediction { index: usize, value: f64 },
    #[error("length mismatch: {0} scores vs {1} labels")]
    LengthMismatch(usize, usize),
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

pub type Result<T, E = EvalError> = std::result::Result<T, E>;

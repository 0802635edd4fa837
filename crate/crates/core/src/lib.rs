//! Poincaré-ball embeddings of concept taxonomies.
//!
//! The crate is organised bottom-up:
//!
//! - [`graph`]: edge-list parsing, the concept hierarchy and ancestral subtree extraction.
//! - [`manifold`]: hyperbolic geometry on the unit ball (distance, metric, gradients,
//!   projection, log map at the origin).
//! - [`trainer`]: negative-sampling softmax loss minimised with Riemannian SGD.
//! - [`evaluator`]: mean rank, the hyperparameter sweep harness, AUROC and E_avg.
//! - [`features`]: tangent-space features for downstream predictive models.
//!
//! Data-parallel loops (mean rank over edges, sweep cells, asynchronous training) use
//! rayon when the default `parallel` feature is enabled. Without it every entry point
//! runs sequentially and thread counts are ignored.

pub mod digest;
pub mod evaluator;
mod exec;
pub mod features;
pub mod graph;
pub mod manifold;
pub mod synthetic;
pub mod trainer;

pub use evaluator::{
    auroc, auroc_scores, calibration_eavg, mean_rank, run_sweep, CandidatePolicy, GridSpec,
    Prediction, ProbPredictionSet, RankReport, SweepOptions, SweepReport, SweepRow,
};
pub use features::{
    AveragingDomain, FeatureSpace, LinearProbe, PatientRecord, ProbeOptions, SequenceFeatures,
};
pub use graph::{ConceptId, GraphBuilder, KnowledgeGraph, ObservedSet};
pub use manifold::{PoincareBall, PoincareVector, TangentVector, DEFAULT_EPSILON};
pub use trainer::{EmbeddingTable, EpochReport, TrainingConfig};

//! Hyperparameter sweep over embedding dimension, burn-in length, negative count and
//! directedness, one trained embedding per grid cell.

use std::io::{self, Write};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{mean_rank, CandidatePolicy, EvalError, Result};
use crate::exec;
use crate::graph::KnowledgeGraph;
use crate::trainer::{train, TrainingConfig};

/// Axes of the grid. Missing `directed` defaults to `[true]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub dims: Vec<usize>,
    pub burn_in_epochs: Vec<usize>,
    pub negatives_k: Vec<usize>,
    #[serde(default = "default_directed")]
    pub directed: Vec<bool>,
}

fn default_directed() -> Vec<bool> {
    vec![true]
}

/// One point of the grid.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct GridCell {
    pub dim: usize,
    pub burn_in_epochs: usize,
    pub negatives_k: usize,
    pub directed: bool,
}

impl GridSpec {
    /// 4 dimensions × 2 burn-ins × 3 negative counts × both directedness modes.
    pub fn standard() -> Self {
        Self {
            dims: vec![3, 10, 30, 100],
            burn_in_epochs: vec![10, 100],
            negatives_k: vec![10, 50, 100],
            directed: vec![true, false],
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| EvalError::InvalidGrid(e.to_string()))
    }

    pub fn len(&self) -> usize {
        self.dims.len() * self.burn_in_epochs.len() * self.negatives_k.len() * self.directed.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Cells with directedness outermost, then dimension, burn-in and negative count.
    pub fn cells(&self) -> Vec<GridCell> {
        let mut cells = Vec::with_capacity(self.len());
        for &directed in &self.directed {
            for &dim in &self.dims {
                for &burn_in_epochs in &self.burn_in_epochs {
                    for &negatives_k in &self.negatives_k {
                        cells.push(GridCell {
                            dim,
                            burn_in_epochs,
                            negatives_k,
                            directed,
                        });
                    }
                }
            }
        }
        cells
    }
}

impl GridCell {
    pub fn apply(&self, base: &TrainingConfig) -> TrainingConfig {
        TrainingConfig {
            dim: self.dim,
            burn_in_epochs: self.burn_in_epochs,
            negatives_k: self.negatives_k,
            directed: self.directed,
            ..base.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub dim: usize,
    pub burn_in_epochs: usize,
    pub negatives_k: usize,
    pub directed: bool,
    /// `None` when the cell failed; see `error`.
    pub mean_rank: Option<f64>,
    pub wall_time_s: f64,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub candidate_policy: CandidatePolicy,
}

pub const SWEEP_CSV_HEADER: &str = "dim,burn_in_epochs,negatives_k,directed,mean_rank,wall_time_s";

impl SweepReport {
    /// Writes the CSV interface; failed cells carry `NaN` as mean rank.
    pub fn write_csv<W: Write>(&self, mut out: W) -> io::Result<()> {
        writeln!(out, "{SWEEP_CSV_HEADER}")?;
        for r in &self.rows {
            writeln!(
                out,
                "{},{},{},{},{},{:.6}",
                r.dim,
                r.burn_in_epochs,
                r.negatives_k,
                r.directed,
                r.mean_rank.unwrap_or(f64::NAN),
                r.wall_time_s
            )?;
        }
        Ok(())
    }

    pub fn failures(&self) -> impl Iterator<Item = &SweepRow> {
        self.rows.iter().filter(|r| r.error.is_some())
    }

    pub fn row(&self, dim: usize, burn_in: usize, k: usize, directed: bool) -> Option<&SweepRow> {
        self.rows.iter().find(|r| {
            r.dim == dim
                && r.burn_in_epochs == burn_in
                && r.negatives_k == k
                && r.directed == directed
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct SweepOptions {
    pub candidate_policy: CandidatePolicy,
    /// Cells run concurrently on this many workers; each cell trains single-threaded
    /// with the base seed, so rows do not depend on it (wall times aside).
    pub threads: usize,
}

/// Trains and ranks one embedding per cell. Cell failures are recorded in their row.
pub fn run_sweep(
    graph: &KnowledgeGraph,
    grid: &GridSpec,
    base: &TrainingConfig,
    options: SweepOptions,
) -> Result<SweepReport> {
    if grid.is_empty() {
        return Err(EvalError::InvalidGrid("grid has no cells".into()));
    }
    let cells = grid.cells();
    let rows = exec::map_ordered(&cells, options.threads, |_, cell| {
        let start = Instant::now();
        let outcome = run_cell(graph, &cell.apply(base), options.candidate_policy);
        let wall_time_s = start.elapsed().as_secs_f64();
        if let Err(e) = &outcome {
            log::warn!("sweep cell {cell:?} failed: {e}");
        }
        SweepRow {
            dim: cell.dim,
            burn_in_epochs: cell.burn_in_epochs,
            negatives_k: cell.negatives_k,
            directed: cell.directed,
            mean_rank: outcome.as_ref().ok().copied(),
            wall_time_s,
            error: outcome.err().map(|e| e.to_string()),
        }
    });
    Ok(SweepReport {
        rows,
        candidate_policy: options.candidate_policy,
    })
}

fn run_cell(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    policy: CandidatePolicy,
) -> Result<f64> {
    let table = train(graph, config, &mut |_| {})?;
    let ball = config.ball()?;
    Ok(mean_rank(&ball, graph, &table, policy, 1)?.mean_rank)
}

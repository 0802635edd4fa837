//! Riemannian SGD on the negative-sampling softmax loss.
//!
//! For every positive edge `(u, v)` the trainer draws `k` nodes not connected to `u`
//! and minimises the cross-entropy of `v` against that candidate set, with logits
//! `−d(u, ·)`:
//!
//! ```text
//! loss = −ln( e^{−d(u,v)} / (e^{−d(u,v)} + Σ_w e^{−d(u,w)}) )
//! ```
//!
//! Euclidean gradients are rescaled by the inverse metric and the step is retracted
//! into the ball by radial projection. The first `burn_in_epochs` epochs run at a tenth
//! of the learning rate.

#[cfg(feature = "parallel")]
mod hogwild;
mod table;

use rand::seq::index;
use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::graph::{ConceptId, KnowledgeGraph};
use crate::manifold::{GeometryError, PoincareBall, DEFAULT_EPSILON};

pub use table::{EmbeddingTable, TableError, TableMetadata};

/// Factor by which the learning rate is divided during burn-in.
pub const BURN_IN_DIVISOR: f64 = 10.0;

#[derive(Debug, Error)]
pub enum TrainError {
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("graph has no edges to train on")]
    NoEdges,
    #[error("concept {0} has no eligible negatives")]
    DegenerateGraph(String),
    #[error("edge ({0}, {0}) pairs a concept with itself")]
    InvalidEdge(ConceptId),
    #[error("non-finite gradient for concept {node}{}", epoch.map(|e| format!(" in epoch {e}")).unwrap_or_default())]
    NonFiniteGradient {
        node: ConceptId,
        epoch: Option<usize>,
    },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
}

pub type Result<T, E = TrainError> = std::result::Result<T, E>;

/// Hyperparameters of one training run. Key names are the JSON interface.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainingConfig {
    pub dim: usize,
    pub epochs: usize,
    pub burn_in_epochs: usize,
    pub learning_rate: f64,
    pub negatives_k: usize,
    pub directed: bool,
    pub seed: u64,
    pub init_range: f64,
    pub epsilon: f64,
    /// Adds the anchor itself (distance 0) as a constant softmax competitor.
    pub include_self_in_denominator: bool,
}

impl Default for TrainingConfig {
    fn default() -> Self {
        Self {
            dim: 10,
            epochs: 300,
            burn_in_epochs: 10,
            learning_rate: 0.3,
            negatives_k: 50,
            directed: true,
            seed: 0,
            init_range: 1e-3,
            epsilon: DEFAULT_EPSILON,
            include_self_in_denominator: false,
        }
    }
}

impl TrainingConfig {
    /// Parses and validates a JSON config. Unknown keys are rejected by name.
    pub fn from_json(text: &str) -> Result<Self> {
        let config: Self =
            serde_json::from_str(text).map_err(|e| TrainError::InvalidConfig(e.to_string()))?;
        config.validate()?;
        Ok(config)
    }

    pub fn validate(&self) -> Result<()> {
        let fail = |msg: String| Err(TrainError::InvalidConfig(msg));
        if self.dim < 2 {
            return fail(format!("dim must be at least 2, got {}", self.dim));
        }
        if self.epochs == 0 {
            return fail("epochs must be positive".into());
        }
        if self.burn_in_epochs > self.epochs {
            return fail(format!(
                "burn_in_epochs ({}) exceeds epochs ({})",
                self.burn_in_epochs, self.epochs
            ));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return fail(format!(
                "learning_rate must be positive, got {}",
                self.learning_rate
            ));
        }
        if self.negatives_k == 0 {
            return fail("negatives_k must be at least 1".into());
        }
        if !(self.init_range > 0.0 && self.init_range < 0.1) {
            return fail(format!(
                "init_range must lie in (0, 0.1), got {}",
                self.init_range
            ));
        }
        if !(self.epsilon > 0.0 && self.epsilon < 0.5) {
            return fail(format!(
                "epsilon must lie in (0, 0.5), got {}",
                self.epsilon
            ));
        }
        Ok(())
    }

    /// Learning rate used in `epoch` (0-based).
    pub fn learning_rate_at(&self, epoch: usize) -> f64 {
        if epoch < self.burn_in_epochs {
            self.learning_rate / BURN_IN_DIVISOR
        } else {
            self.learning_rate
        }
    }

    pub fn ball(&self) -> Result<PoincareBall> {
        Ok(PoincareBall::new(self.epsilon)?)
    }
}

/// Per-epoch progress record.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct EpochReport {
    pub epoch: usize,
    pub learning_rate: f64,
    pub mean_loss: f64,
    /// Largest vector norm observed right after any update in this epoch.
    pub max_norm: f64,
}

/// Negatives drawn for one anchor.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct NegativeSample {
    pub anchor: ConceptId,
    pub sampled: Vec<ConceptId>,
}

/// Loss of one positive edge and the Euclidean gradients of every involved vector.
#[derive(Debug, Clone, PartialEq)]
pub struct PairLoss {
    pub loss: f64,
    pub grad_anchor: Vec<f64>,
    pub grad_positive: Vec<f64>,
    /// Row-major, one row per negative in sample order.
    pub grad_negatives: Vec<f64>,
}

impl PairLoss {
    pub fn grad_negative(&self, i: usize) -> &[f64] {
        let dim = self.grad_anchor.len();
        &self.grad_negatives[i * dim..(i + 1) * dim]
    }
}

/// Table with every coordinate uniform in `[-init_range, init_range]`.
pub fn init_embeddings(graph: &KnowledgeGraph, config: &TrainingConfig) -> Result<EmbeddingTable> {
    config.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    init_with_rng(graph, config, &mut rng)
}

fn init_with_rng(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    rng: &mut ChaCha8Rng,
) -> Result<EmbeddingTable> {
    let ball = config.ball()?;
    let mut table = EmbeddingTable::uniform(
        &ball,
        graph.codes().to_vec(),
        config.dim,
        config.init_range,
        rng,
    );
    table.metadata.config = Some(config.clone());
    table.metadata.graph_digest = Some(graph.digest());
    Ok(table)
}

/// Draws up to `negatives_k` distinct nodes `w ≠ u` with `u` and `w` unconnected.
///
/// In directed mode only `u -> w` counts as a connection, so a parent of `u` is an
/// eligible negative. When fewer than `negatives_k` nodes are eligible all of them are
/// returned.
pub fn sample_negatives<R: Rng + ?Sized>(
    graph: &KnowledgeGraph,
    u: ConceptId,
    config: &TrainingConfig,
    rng: &mut R,
) -> Result<NegativeSample> {
    sample_eligible(graph, u, config.negatives_k, config.directed, rng)
}

pub(crate) fn sample_eligible<R: Rng + ?Sized>(
    graph: &KnowledgeGraph,
    u: ConceptId,
    k: usize,
    directed: bool,
    rng: &mut R,
) -> Result<NegativeSample> {
    let n = graph.node_count();
    let eligible = n - 1 - graph.neighbor_count(u, directed);
    if eligible == 0 {
        return Err(TrainError::DegenerateGraph(
            graph.code(u).unwrap_or("?").to_owned(),
        ));
    }
    let is_eligible = |w: ConceptId| w != u && !graph.connected_unchecked(u, w, directed);
    let sampled = if 2 * k >= eligible {
        let pool: Vec<ConceptId> = graph.nodes().filter(|&w| is_eligible(w)).collect();
        if k >= eligible {
            pool
        } else {
            index::sample(rng, eligible, k)
                .into_iter()
                .map(|i| pool[i])
                .collect()
        }
    } else {
        // Eligible nodes are at least half of what is asked for twice over; rejection
        // sampling terminates quickly.
        let mut out = Vec::with_capacity(k);
        while out.len() < k {
            let w = ConceptId(rng.gen_range(0..n as u32));
            if is_eligible(w) && !out.contains(&w) {
                out.push(w);
            }
        }
        out
    };
    Ok(NegativeSample { anchor: u, sampled })
}

/// Cross-entropy of the positive `v` against the sampled negatives of `u`.
pub fn pair_loss(
    ball: &PoincareBall,
    table: &EmbeddingTable,
    v: ConceptId,
    negatives: &NegativeSample,
    include_self: bool,
) -> Result<PairLoss> {
    let u = negatives.anchor;
    if u == v {
        return Err(TrainError::InvalidEdge(u));
    }
    let negs: Vec<&[f64]> = negatives.sampled.iter().map(|&w| table.vector(w)).collect();
    pair_loss_from_vectors(ball, table.vector(u), table.vector(v), &negs, include_self)
}

/// [`pair_loss`] on raw vectors. Terms whose points coincide contribute no gradient.
pub fn pair_loss_from_vectors(
    ball: &PoincareBall,
    anchor: &[f64],
    positive: &[f64],
    negatives: &[&[f64]],
    include_self: bool,
) -> Result<PairLoss> {
    let dim = anchor.len();
    let d_pos = ball.distance(anchor, positive)?;
    let d_neg = negatives
        .iter()
        .map(|w| ball.distance(anchor, w))
        .collect::<std::result::Result<Vec<_>, _>>()?;

    // Logits are −d; the self term, when present, has logit 0.
    let mut max_logit = -d_pos;
    for &d in &d_neg {
        max_logit = max_logit.max(-d);
    }
    if include_self {
        max_logit = max_logit.max(0.0);
    }
    let mut sum = (-d_pos - max_logit).exp();
    sum += d_neg.iter().map(|d| (-d - max_logit).exp()).sum::<f64>();
    if include_self {
        sum += (-max_logit).exp();
    }
    let log_norm = max_logit + sum.ln();
    let loss = d_pos + log_norm;

    let mut out = PairLoss {
        loss,
        grad_anchor: vec![0.0; dim],
        grad_positive: vec![0.0; dim],
        grad_negatives: vec![0.0; dim * negatives.len()],
    };
    let p_pos = (-d_pos - log_norm).exp();
    accumulate(
        ball,
        anchor,
        positive,
        1.0 - p_pos,
        &mut out.grad_anchor,
        &mut out.grad_positive,
    )?;
    for (i, (w, d)) in negatives.iter().zip(&d_neg).enumerate() {
        let p = (-d - log_norm).exp();
        accumulate(
            ball,
            anchor,
            w,
            -p,
            &mut out.grad_anchor,
            &mut out.grad_negatives[i * dim..(i + 1) * dim],
        )?;
    }
    Ok(out)
}

fn accumulate(
    ball: &PoincareBall,
    u: &[f64],
    v: &[f64],
    scale: f64,
    gu: &mut [f64],
    gv: &mut [f64],
) -> Result<()> {
    match ball.distance_and_grad_into(u, v, scale, gu, gv) {
        Ok(_) | Err(GeometryError::CoincidentPoints) => Ok(()),
        Err(e) => Err(e.into()),
    }
}

/// One retraction step on a raw vector; returns the new norm.
pub(crate) fn rsgd_update(
    ball: &PoincareBall,
    x: &mut [f64],
    euclidean_grad: &[f64],
    lr: f64,
) -> std::result::Result<f64, GeometryError> {
    if euclidean_grad.iter().any(|g| !g.is_finite()) {
        return Err(GeometryError::NonFinite);
    }
    let a = 1.0 - ball.check(x)?;
    let step = lr * a * a / 4.0;
    for (xi, gi) in x.iter_mut().zip(euclidean_grad) {
        *xi -= step * gi;
    }
    let norm = ball.project_in_place(x)?;
    debug_assert!(ball.contains(x), "update left the ball: norm {norm}");
    Ok(norm)
}

/// `x ← project(x − lr · rescale(x, grad))` for `node`; returns the new norm.
pub fn rsgd_step(
    ball: &PoincareBall,
    table: &mut EmbeddingTable,
    node: ConceptId,
    euclidean_grad: &[f64],
    lr: f64,
) -> Result<f64> {
    rsgd_update(ball, table.row_mut(node.index()), euclidean_grad, lr).map_err(|e| match e {
        GeometryError::NonFinite => TrainError::NonFiniteGradient { node, epoch: None },
        other => other.into(),
    })
}

/// Deterministic single-threaded training.
pub fn train(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    progress: &mut dyn FnMut(&EpochReport),
) -> Result<EmbeddingTable> {
    train_with_threads(graph, config, 1, progress)
}

/// Trains with `threads` workers. `threads == 1` is bit-reproducible; any other value
/// runs lock-free asynchronous updates (when the `parallel` feature is enabled) whose
/// result depends on scheduling. `0` uses all available cores.
pub fn train_with_threads(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    threads: usize,
    progress: &mut dyn FnMut(&EpochReport),
) -> Result<EmbeddingTable> {
    config.validate()?;
    if graph.edge_count() == 0 {
        return Err(TrainError::NoEdges);
    }
    let ball = config.ball()?;
    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
    let mut table = init_with_rng(graph, config, &mut rng)?;

    #[cfg(feature = "parallel")]
    if crate::exec::is_parallel(threads) {
        let final_loss = hogwild::train(
            graph, config, &ball, &mut table, &mut rng, threads, progress,
        )?;
        table.metadata.final_loss = Some(final_loss);
        table.metadata.epochs = config.epochs;
        return Ok(table);
    }
    if threads != 1 {
        log::debug!("built without the `parallel` feature; training sequentially");
    }

    let edges = graph.edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut final_loss = f64::NAN;
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(&mut rng);
        let mut total = 0.0;
        let mut max_norm: f64 = 0.0;
        for &e in &order {
            let (u, v) = edges[e];
            let negatives = sample_negatives(graph, u, config, &mut rng)?;
            let pl = pair_loss(
                &ball,
                &table,
                v,
                &negatives,
                config.include_self_in_denominator,
            )?;
            let with_epoch = |err: TrainError| match err {
                TrainError::NonFiniteGradient { node, .. } => TrainError::NonFiniteGradient {
                    node,
                    epoch: Some(epoch),
                },
                other => other,
            };
            let mut step = |node, grad: &[f64]| -> Result<()> {
                let norm = rsgd_step(&ball, &mut table, node, grad, lr).map_err(with_epoch)?;
                max_norm = max_norm.max(norm);
                Ok(())
            };
            step(u, &pl.grad_anchor)?;
            step(v, &pl.grad_positive)?;
            for (i, &w) in negatives.sampled.iter().enumerate() {
                step(w, pl.grad_negative(i))?;
            }
            total += pl.loss;
        }
        final_loss = total / edges.len() as f64;
        progress(&EpochReport {
            epoch,
            learning_rate: lr,
            mean_loss: final_loss,
            max_norm,
        });
    }
    table.metadata.final_loss = Some(final_loss);
    table.metadata.epochs = config.epochs;
    Ok(table)
}

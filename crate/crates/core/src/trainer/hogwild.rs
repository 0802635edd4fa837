//! Lock-free asynchronous training.
//!
//! Each epoch's shuffled edge order is split into chunks processed by rayon workers.
//! Workers read and write table rows through relaxed atomics with no locking, so
//! concurrent updates to the same row may interleave. Rows touched by one edge are a
//! vanishing fraction of the table, which keeps conflicts rare. Output depends on
//! scheduling and is not reproducible across runs.

use std::sync::atomic::{AtomicU64, Ordering};

use rand::seq::SliceRandom;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::{
    pair_loss_from_vectors, rsgd_update, sample_negatives, EmbeddingTable, EpochReport, Result,
    TrainError, TrainingConfig,
};
use crate::graph::{ConceptId, KnowledgeGraph};
use crate::manifold::{GeometryError, PoincareBall};

struct SharedRows {
    dim: usize,
    cells: Vec<AtomicU64>,
}

impl SharedRows {
    fn new(table: &EmbeddingTable) -> Self {
        Self {
            dim: table.dim(),
            cells: table
                .data()
                .iter()
                .map(|x| AtomicU64::new(x.to_bits()))
                .collect(),
        }
    }

    fn load(&self, node: ConceptId, out: &mut [f64]) {
        let base = node.index() * self.dim;
        for (o, cell) in out.iter_mut().zip(&self.cells[base..base + self.dim]) {
            *o = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }

    fn store(&self, node: ConceptId, src: &[f64]) {
        let base = node.index() * self.dim;
        for (s, cell) in src.iter().zip(&self.cells[base..base + self.dim]) {
            cell.store(s.to_bits(), Ordering::Relaxed);
        }
    }

    fn write_back(&self, table: &mut EmbeddingTable) {
        for (x, cell) in table.data_mut().iter_mut().zip(&self.cells) {
            *x = f64::from_bits(cell.load(Ordering::Relaxed));
        }
    }
}

#[derive(Default, Clone, Copy)]
struct ChunkStats {
    loss: f64,
    max_norm: f64,
}

pub(super) fn train(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    ball: &PoincareBall,
    table: &mut EmbeddingTable,
    rng: &mut ChaCha8Rng,
    threads: usize,
    progress: &mut dyn FnMut(&EpochReport),
) -> Result<f64> {
    let shared = SharedRows::new(table);
    let edges = graph.edges();
    let mut order: Vec<usize> = (0..edges.len()).collect();
    let mut final_loss = f64::NAN;

    let pool = crate::exec::build_pool(threads);
    let workers = pool
        .as_ref()
        .map_or_else(rayon::current_num_threads, |p| p.current_num_threads())
        .max(1);
    let chunk = edges.len().div_ceil(workers * 4).max(1);
    for epoch in 0..config.epochs {
        let lr = config.learning_rate_at(epoch);
        order.shuffle(rng);
        let job = || {
            order
                .par_chunks(chunk)
                .enumerate()
                .map(|(ci, chunk)| {
                    let mut rng = ChaCha8Rng::seed_from_u64(config.seed);
                    rng.set_stream(((epoch as u64) << 32) | ci as u64);
                    run_chunk(graph, config, ball, &shared, chunk, lr, &mut rng).map_err(
                        |e| match e {
                            TrainError::NonFiniteGradient { node, .. } => {
                                TrainError::NonFiniteGradient {
                                    node,
                                    epoch: Some(epoch),
                                }
                            }
                            other => other,
                        },
                    )
                })
                .try_reduce(ChunkStats::default, |a, b| {
                    Ok(ChunkStats {
                        loss: a.loss + b.loss,
                        max_norm: a.max_norm.max(b.max_norm),
                    })
                })
        };
        let stats = match &pool {
            Some(p) => p.install(job),
            None => job(),
        }?;
        final_loss = stats.loss / edges.len() as f64;
        progress(&EpochReport {
            epoch,
            learning_rate: lr,
            mean_loss: final_loss,
            max_norm: stats.max_norm,
        });
    }

    shared.write_back(table);
    Ok(final_loss)
}

fn run_chunk(
    graph: &KnowledgeGraph,
    config: &TrainingConfig,
    ball: &PoincareBall,
    shared: &SharedRows,
    chunk: &[usize],
    lr: f64,
    rng: &mut ChaCha8Rng,
) -> Result<ChunkStats> {
    let dim = config.dim;
    let mut stats = ChunkStats::default();
    let mut u_buf = vec![0.0; dim];
    let mut v_buf = vec![0.0; dim];
    let mut neg_buf: Vec<f64> = Vec::new();
    for &e in chunk {
        let (u, v) = graph.edges()[e];
        let negatives = sample_negatives(graph, u, config, rng)?;
        shared.load(u, &mut u_buf);
        shared.load(v, &mut v_buf);
        neg_buf.resize(dim * negatives.sampled.len(), 0.0);
        for (row, &w) in neg_buf.chunks_mut(dim).zip(&negatives.sampled) {
            shared.load(w, row);
        }
        // A row read while another worker writes it may mix two admissible versions
        // component-wise and land just outside the ball.
        for row in [&mut u_buf[..], &mut v_buf[..]]
            .into_iter()
            .chain(neg_buf.chunks_mut(dim))
        {
            ball.project_in_place(row)?;
        }
        let negs: Vec<&[f64]> = neg_buf.chunks(dim).collect();
        let pl = pair_loss_from_vectors(
            ball,
            &u_buf,
            &v_buf,
            &negs,
            config.include_self_in_denominator,
        )?;
        stats.loss += pl.loss;

        let mut apply = |node: ConceptId, x: &mut [f64], grad: &[f64]| -> Result<()> {
            let norm = rsgd_update(ball, x, grad, lr).map_err(|e| match e {
                GeometryError::NonFinite => TrainError::NonFiniteGradient { node, epoch: None },
                other => other.into(),
            })?;
            stats.max_norm = stats.max_norm.max(norm);
            shared.store(node, x);
            Ok(())
        };
        apply(u, &mut u_buf, &pl.grad_anchor)?;
        apply(v, &mut v_buf, &pl.grad_positive)?;
        for (i, (row, &w)) in neg_buf.chunks_mut(dim).zip(&negatives.sampled).enumerate() {
            apply(w, row, pl.grad_negative(i))?;
        }
    }
    Ok(stats)
}

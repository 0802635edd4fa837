use std::fmt;
use std::str::FromStr;

use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{EvalError, Result};
use crate::exec;
use crate::graph::{ConceptId, KnowledgeGraph};
use crate::manifold::PoincareBall;
use crate::trainer::{sample_eligible, EmbeddingTable};

/// Which nodes compete with the true child when ranking an edge.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", tag = "kind")]
pub enum CandidatePolicy {
    #[default]
    /// Every node not connected to the anchor in either direction.
    AllNonNeighbors,
    /// `k` non-neighbors drawn per edge; edge `i` uses stream `i` of `seed`.
    Sampled { k: usize, seed: u64 },
}

impl CandidatePolicy {
    pub fn with_seed(self, seed: u64) -> Self {
        match self {
            Self::Sampled { k, .. } => Self::Sampled { k, seed },
            other => other,
        }
    }
}

impl FromStr for CandidatePolicy {
    type Err = String;

    /// `all` or `sampled:<k>`.
    fn from_str(s: &str) -> std::result::Result<Self, String> {
        match s {
            "all" | "all-non-neighbors" => Ok(Self::AllNonNeighbors),
            _ => {
                let k = s
                    .strip_prefix("sampled:")
                    .ok_or_else(|| format!("unknown candidate policy `{s}`"))?;
                let k: usize = k
                    .parse()
                    .map_err(|_| format!("invalid sample size `{k}`"))?;
                if k == 0 {
                    return Err("sample size must be positive".into());
                }
                Ok(Self::Sampled { k, seed: 0 })
            }
        }
    }
}

impl fmt::Display for CandidatePolicy {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::AllNonNeighbors => write!(f, "all"),
            Self::Sampled { k, .. } => write!(f, "sampled:{k}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankReport {
    pub mean_rank: f64,
    pub ranks: Vec<u32>,
    pub evaluated_edges: usize,
    pub candidate_policy: CandidatePolicy,
}

/// Maps every graph node to its table row, reporting all uncovered codes.
pub(crate) fn rows_for_graph(graph: &KnowledgeGraph, table: &EmbeddingTable) -> Result<Vec<usize>> {
    let mut rows = Vec::with_capacity(graph.node_count());
    let mut missing = Vec::new();
    for code in graph.codes() {
        match table.row_of(code) {
            Some(r) => rows.push(r),
            None => missing.push(code.clone()),
        }
    }
    if missing.is_empty() {
        Ok(rows)
    } else {
        Err(EvalError::MissingNodes(missing))
    }
}

/// Mean rank of each true child among its anchor's candidates.
///
/// Connectivity is undirected: a node linked to the anchor in either direction is never
/// a candidate. A candidate at distance equal to the true child's is counted ahead of
/// it, so ties make the rank worse. Results do not depend on `threads`.
pub fn mean_rank(
    ball: &PoincareBall,
    graph: &KnowledgeGraph,
    table: &EmbeddingTable,
    policy: CandidatePolicy,
    threads: usize,
) -> Result<RankReport> {
    if graph.edge_count() == 0 {
        return Err(EvalError::NoEdges);
    }
    let rows = rows_for_graph(graph, table)?;
    let vec_of = |id: ConceptId| table.row(rows[id.index()]);

    let ranks = exec::map_ordered(graph.edges(), threads, |i, &(u, v)| -> Result<u32> {
        let anchor = vec_of(u);
        let d_true = ball.distance(anchor, vec_of(v))?;
        let mut ahead = 0u32;
        let mut consider = |w: ConceptId| -> Result<()> {
            if ball.distance(anchor, vec_of(w))? <= d_true {
                ahead += 1;
            }
            Ok(())
        };
        match policy {
            CandidatePolicy::AllNonNeighbors => {
                for w in graph.nodes() {
                    if w != u && !graph.connected_unchecked(u, w, false) {
                        consider(w)?;
                    }
                }
            }
            CandidatePolicy::Sampled { k, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(i as u64);
                // An anchor connected to everything has no competitors.
                if let Ok(sample) = sample_eligible(graph, u, k, false, &mut rng) {
                    for w in sample.sampled {
                        consider(w)?;
                    }
                }
            }
        }
        Ok(1 + ahead)
    })
    .into_iter()
    .collect::<Result<Vec<u32>>>()?;

    let mean_rank = ranks.iter().map(|&r| r as f64).sum::<f64>() / ranks.len() as f64;
    Ok(RankReport {
        mean_rank,
        evaluated_edges: ranks.len(),
        ranks,
        candidate_policy: policy,
    })
}

//! Synthetic hierarchies for tests, benchmarks and desk-scale experiments.

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::graph::{GraphBuilder, KnowledgeGraph};

/// Complete tree with `depth` levels below the root, nodes `n0, n1, …` in
/// breadth-first order. Branching 3 and depth 5 give 364 nodes.
pub fn balanced_tree(branching: usize, depth: usize) -> KnowledgeGraph {
    let mut b = GraphBuilder::new();
    b.add_node("n0");
    let mut level = vec![0usize];
    let mut next_id = 1usize;
    for _ in 0..depth {
        let mut next = Vec::with_capacity(level.len() * branching);
        for &p in &level {
            for _ in 0..branching {
                b.add_edge(&format!("n{p}"), &format!("n{next_id}"))
                    .expect("tree edges are never self-loops");
                next.push(next_id);
                next_id += 1;
            }
        }
        level = next;
    }
    b.build().expect("a tree is acyclic")
}

/// Random DAG on `nodes` nodes: node `i > 0` gets a parent among `0..i` and, with
/// probability `extra_parent_prob`, a second distinct one.
pub fn random_dag(nodes: usize, extra_parent_prob: f64, seed: u64) -> KnowledgeGraph {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut b = GraphBuilder::new();
    if nodes > 0 {
        b.add_node("n0");
    }
    for i in 1..nodes {
        let child = format!("n{i}");
        let p = rng.gen_range(0..i);
        b.add_edge(&format!("n{p}"), &child).expect("p < i");
        if i > 1 && rng.gen_bool(extra_parent_prob) {
            let q = rng.gen_range(0..i);
            if q != p {
                b.add_edge(&format!("n{q}"), &child).expect("q < i");
            }
        }
    }
    b.build().expect("edges point from lower to higher index")
}

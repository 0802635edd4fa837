//! Acceptance criteria, one line each. Exits nonzero if any criterion fails.

use std::fs;
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use poincare_core::evaluator::SweepOptions;
use poincare_core::features::{synthetic_cohort, AveragingDomain, FeatureSpace};
use poincare_core::graph::{ConceptId, KnowledgeGraph, ObservedSet};
use poincare_core::synthetic::{balanced_tree, random_dag};
use poincare_core::trainer::{self, pair_loss_from_vectors, EmbeddingTable, TrainingConfig};
use poincare_core::{
    auroc_scores, calibration_eavg, mean_rank, run_sweep, CandidatePolicy, GridSpec, LinearProbe,
    PoincareBall, ProbPredictionSet, ProbeOptions,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);
type SubtreeCase<'a> = (
    &'a KnowledgeGraph,
    &'a str,
    &'a [&'a str],
    &'a [(&'a str, &'a str)],
);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn within(started: Instant, limit: Duration) -> Result<(), String> {
    let elapsed = started.elapsed();
    ensure(elapsed < limit, || {
        format!("took {elapsed:.2?}, limit {limit:?}")
    })
}

fn random_point(rng: &mut impl Rng, dim: usize, max_norm: f64) -> Vec<f64> {
    let v: Vec<f64> = (0..dim).map(|_| rng.gen_range(-1.0..1.0)).collect();
    let n = v.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-12);
    let r = max_norm * rng.gen::<f64>().powf(1.0 / dim as f64);
    v.into_iter().map(|x| x / n * r).collect()
}

fn random_table(
    ball: &PoincareBall,
    graph: &KnowledgeGraph,
    dim: usize,
    seed: u64,
) -> EmbeddingTable {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let data = (0..graph.node_count())
        .flat_map(|_| random_point(&mut rng, dim, 0.95))
        .collect();
    EmbeddingTable::from_rows(ball, graph.codes().to_vec(), dim, data).unwrap()
}

fn tree_config(dim: usize, seed: u64) -> TrainingConfig {
    TrainingConfig {
        dim,
        negatives_k: 50,
        burn_in_epochs: 10,
        seed,
        ..TrainingConfig::default()
    }
}

fn geometry_suite() -> Outcome {
    let started = Instant::now();
    let ball = PoincareBall::default();
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let n = 10_000;
    let points: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            let dim = 2 + i % 9;
            // Every tenth point sits within 1e-4 of the admissible boundary.
            if i % 10 == 0 {
                let p = random_point(&mut rng, dim, 1.0);
                let norm = p.iter().map(|x| x * x).sum::<f64>().sqrt();
                let target = ball.max_norm() - rng.gen_range(0.0..1e-4);
                p.iter().map(|x| x / norm * target).collect()
            } else {
                random_point(&mut rng, dim, ball.max_norm())
            }
        })
        .collect();
    let by_dim = |i: usize, j: usize| points[i].len() == points[j].len();
    let mut triangles = 0;
    let mut worst_sym = 0.0f64;
    let mut worst_log = 0.0f64;
    for i in 0..n {
        let x = &points[i];
        let d_xx = ball.distance(x, x).unwrap();
        ensure(d_xx == 0.0, || format!("d(x, x) = {d_xx}"))?;
        let origin = vec![0.0; x.len()];
        let log_norm = ball.log_map_origin(x).unwrap().norm();
        worst_log = worst_log.max((log_norm - ball.distance(&origin, x).unwrap()).abs());
        // Same-dimension partners are 9 and 18 positions ahead.
        let (j, k) = ((i + 9) % n, (i + 18) % n);
        if by_dim(i, j) && by_dim(i, k) {
            let (y, z) = (&points[j], &points[k]);
            let dxy = ball.distance(x, y).unwrap();
            worst_sym = worst_sym.max((dxy - ball.distance(y, x).unwrap()).abs());
            let dxz = ball.distance(x, z).unwrap();
            let dyz = ball.distance(y, z).unwrap();
            ensure(dxz <= dxy + dyz + 1e-9, || {
                format!("triangle violated at {i}")
            })?;
            triangles += 1;
        }
    }
    ensure(worst_sym <= 1e-12, || format!("symmetry gap {worst_sym:e}"))?;
    ensure(worst_log <= 1e-9, || {
        format!("log-map norm gap {worst_log:e}")
    })?;
    within(started, Duration::from_secs(5))?;
    Ok(format!(
        "{n} points, {triangles} triangles, max symmetry gap {worst_sym:e}, max log-map gap {worst_log:e}, {:.2?}",
        started.elapsed()
    ))
}

fn central_diff(f: impl Fn(&[f64]) -> f64, x: &[f64]) -> Vec<f64> {
    let h = 1e-6;
    (0..x.len())
        .map(|i| {
            let (mut p, mut m) = (x.to_vec(), x.to_vec());
            p[i] += h;
            m[i] -= h;
            (f(&p) - f(&m)) / (2.0 * h)
        })
        .collect()
}

fn rel_err(a: &[f64], b: &[f64]) -> f64 {
    let diff = a
        .iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt();
    diff / a.iter().map(|x| x * x).sum::<f64>().sqrt().max(1e-6)
}

fn gradient_suite() -> Outcome {
    let started = Instant::now();
    let ball = PoincareBall::default();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let mut worst = 0.0f64;
    for case in 0..100 {
        let dim = rng.gen_range(2..=10);
        let u = random_point(&mut rng, dim, 0.9);
        let v = random_point(&mut rng, dim, 0.9);
        let (gu, gv) = ball.distance_grad(&u, &v).unwrap();
        worst = worst.max(rel_err(
            &gu,
            &central_diff(|x| ball.distance(x, &v).unwrap(), &u),
        ));
        worst = worst.max(rel_err(
            &gv,
            &central_diff(|x| ball.distance(&u, x).unwrap(), &v),
        ));

        let negs: Vec<Vec<f64>> = (0..rng.gen_range(1..=5))
            .map(|_| random_point(&mut rng, dim, 0.9))
            .collect();
        let include_self = case % 2 == 1;
        let loss = |u: &[f64], v: &[f64], negs: &[Vec<f64>]| {
            let refs: Vec<&[f64]> = negs.iter().map(Vec::as_slice).collect();
            pair_loss_from_vectors(&ball, u, v, &refs, include_self).unwrap()
        };
        let pl = loss(&u, &v, &negs);
        worst = worst.max(rel_err(
            &pl.grad_anchor,
            &central_diff(|x| loss(x, &v, &negs).loss, &u),
        ));
        worst = worst.max(rel_err(
            &pl.grad_positive,
            &central_diff(|x| loss(&u, x, &negs).loss, &v),
        ));
        for i in 0..negs.len() {
            let fd = central_diff(
                |x| {
                    let mut n = negs.clone();
                    n[i] = x.to_vec();
                    loss(&u, &v, &n).loss
                },
                &negs[i],
            );
            worst = worst.max(rel_err(pl.grad_negative(i), &fd));
        }
    }
    ensure(worst < 1e-5, || format!("max relative error {worst:e}"))?;
    within(started, Duration::from_secs(5))?;
    Ok(format!(
        "100 configurations, max relative error {worst:e}, {:.2?}",
        started.elapsed()
    ))
}

fn training_soundness() -> Outcome {
    let started = Instant::now();
    let graph = balanced_tree(3, 5);
    ensure(graph.node_count() == 364, || {
        format!("{} nodes", graph.node_count())
    })?;
    let config = tree_config(10, 0);
    let ball = config.ball().unwrap();
    let mut losses = Vec::new();
    let mut max_norm = 0.0f64;
    let table = trainer::train(&graph, &config, &mut |r| {
        losses.push(r.mean_loss);
        max_norm = max_norm.max(r.max_norm);
    })
    .map_err(|e| e.to_string())?;
    let (first, last) = (losses[0], *losses.last().unwrap());
    ensure(last < first, || format!("loss {first} -> {last}"))?;
    ensure(max_norm <= ball.max_norm(), || {
        format!("an update reached norm {max_norm}")
    })?;
    ensure(table.rows().all(|(_, r)| ball.contains(r)), || {
        "final row outside the ball".into()
    })?;
    let rank = mean_rank(&ball, &graph, &table, CandidatePolicy::AllNonNeighbors, 0)
        .map_err(|e| e.to_string())?
        .mean_rank;
    ensure(rank <= 2.0, || format!("mean rank {rank}"))?;

    // Uniform-random baseline: each edge's rank is uniform over its candidate count.
    let analytic = graph
        .edges()
        .iter()
        .map(|&(u, _)| {
            let unrelated = graph
                .nodes()
                .filter(|&w| w != u && !graph.is_connected(u, w, false).unwrap())
                .count();
            (unrelated as f64 + 2.0) / 2.0
        })
        .sum::<f64>()
        / graph.edge_count() as f64;
    let trials = 20;
    let monte_carlo = (0..trials)
        .map(|s| {
            let t = random_table(&ball, &graph, 10, 1000 + s);
            mean_rank(&ball, &graph, &t, CandidatePolicy::AllNonNeighbors, 0)
                .unwrap()
                .mean_rank
        })
        .sum::<f64>()
        / trials as f64;
    ensure((monte_carlo - analytic).abs() < 0.05 * analytic, || {
        format!("random baseline {monte_carlo} vs analytic {analytic}")
    })?;
    within(started, Duration::from_secs(120))?;
    Ok(format!(
        "loss {first:.3} -> {last:.3}, max norm {max_norm:.7}, mean rank {rank:.3}, random baseline {monte_carlo:.1} (analytic {analytic:.1}), {:.2?}",
        started.elapsed()
    ))
}

fn dimension_trend() -> Outcome {
    let graph = balanced_tree(3, 5);
    let ball = PoincareBall::default();
    let rank = |dim: usize, seed: u64| -> f64 {
        let table = trainer::train(&graph, &tree_config(dim, seed), &mut |_| {}).unwrap();
        mean_rank(&ball, &graph, &table, CandidatePolicy::AllNonNeighbors, 0)
            .unwrap()
            .mean_rank
    };
    let mut parts = Vec::new();
    for seed in 0..3 {
        let (low, high) = (rank(3, seed), rank(30, seed));
        parts.push(format!("seed {seed}: dim 3 {low:.3}, dim 30 {high:.3}"));
        ensure(high <= low, || parts.join("; "))?;
    }
    Ok(parts.join("; "))
}

fn run_cli(dir: &Path, args: &[&str]) -> Result<(), String> {
    let out = Command::new(env!("CARGO_BIN_EXE_poincare"))
        .current_dir(dir)
        .args(args)
        .output()
        .map_err(|e| e.to_string())?;
    ensure(out.status.success(), || {
        format!("{args:?}: {}", String::from_utf8_lossy(&out.stderr))
    })
}

fn sweep_shape() -> Outcome {
    let started = Instant::now();
    let graph = random_dag(50, 0.1, 5);
    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let mut edges = Vec::new();
    graph.write_edge_list(&mut edges).unwrap();
    fs::write(dir.path().join("g.tsv"), edges).unwrap();
    fs::write(
        dir.path().join("grid.json"),
        r#"{"dims": [3, 10, 30, 100], "burn_in_epochs": [10, 100], "negatives_k": [10, 50, 100], "directed": [true, false]}"#,
    )
    .unwrap();
    run_cli(
        dir.path(),
        &[
            "sweep",
            "g.tsv",
            "grid.json",
            "--threads",
            "0",
            "--out",
            "s.csv",
        ],
    )?;
    let csv = fs::read_to_string(dir.path().join("s.csv")).unwrap();
    let rows: Vec<&str> = csv.lines().skip(1).collect();
    ensure(rows.len() == 48, || format!("{} rows", rows.len()))?;

    let mut expected = Vec::new();
    for directed in [true, false] {
        for dim in [3, 10, 30, 100] {
            for burn in [10, 100] {
                for k in [10, 50, 100] {
                    expected.push(format!("{dim},{burn},{k},{directed},"));
                }
            }
        }
    }
    for (row, key) in rows.iter().zip(&expected) {
        ensure(row.starts_with(key.as_str()), || {
            format!("row `{row}` where `{key}` expected")
        })?;
        ensure(!row.contains("NaN"), || format!("failed cell `{row}`"))?;
    }

    // Rows do not depend on how many cells run at once.
    let again = run_sweep(
        &graph,
        &GridSpec::standard(),
        &TrainingConfig::default(),
        SweepOptions {
            candidate_policy: CandidatePolicy::AllNonNeighbors,
            threads: 1,
        },
    )
    .map_err(|e| e.to_string())?;
    for (row, line) in again.rows.iter().zip(&rows) {
        let rank: f64 = line.split(',').nth(4).unwrap().parse().unwrap();
        ensure(row.mean_rank == Some(rank), || {
            format!("sequential {:?} vs {rank}", row.mean_rank)
        })?;
    }
    within(started, Duration::from_secs(300))?;
    Ok(format!(
        "48 rows in grid order, sequential rerun identical, {:.2?}",
        started.elapsed()
    ))
}

fn brute_force_ranks(
    ball: &PoincareBall,
    graph: &KnowledgeGraph,
    table: &EmbeddingTable,
) -> Vec<u32> {
    let vec_of = |id: ConceptId| table.get(graph.code(id).unwrap()).unwrap();
    let linked = |a: ConceptId, b: ConceptId| {
        graph
            .edges()
            .iter()
            .any(|&(p, c)| (p == a && c == b) || (p == b && c == a))
    };
    graph
        .edges()
        .iter()
        .map(|&(u, v)| {
            let d_true = ball.distance(vec_of(u), vec_of(v)).unwrap();
            let ahead = graph
                .nodes()
                .filter(|&w| w != u && w != v && !linked(u, w))
                .filter(|&w| ball.distance(vec_of(u), vec_of(w)).unwrap() <= d_true)
                .count();
            1 + ahead as u32
        })
        .collect()
}

fn oracle_equivalence() -> Outcome {
    let ball = PoincareBall::default();
    let mut graphs = vec![
        KnowledgeGraph::parse_str("a\tb\nb\tc\n").unwrap(),
        KnowledgeGraph::parse_str("a\tb\na\tc\nb\td\nc\td\n").unwrap(),
        balanced_tree(2, 4),
        balanced_tree(3, 3),
    ];
    graphs.extend((0..8).map(|s| random_dag(6 * (s as usize + 1), 0.15, s)));
    let mut tables = 0;
    for (gi, graph) in graphs.iter().enumerate() {
        for seed in 0..3 {
            let table = random_table(&ball, graph, 2 + seed as usize, 31 * gi as u64 + seed);
            let report = mean_rank(&ball, graph, &table, CandidatePolicy::AllNonNeighbors, 0)
                .map_err(|e| e.to_string())?;
            let expected = brute_force_ranks(&ball, graph, &table);
            let mean = expected.iter().map(|&r| f64::from(r)).sum::<f64>() / expected.len() as f64;
            ensure(report.ranks == expected && report.mean_rank == mean, || {
                format!("graph {gi} seed {seed}: {:?} vs {expected:?}", report.ranks)
            })?;
            tables += 1;
        }
    }

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    for _ in 0..100 {
        let n = rng.gen_range(2..=200);
        let scores: Vec<f64> = (0..n).map(|_| rng.gen_range(0..25) as f64 / 24.0).collect();
        let mut labels: Vec<bool> = (0..n).map(|_| rng.gen_bool(0.5)).collect();
        labels[0] = !labels[1];
        let (mut wins, mut pairs) = (0.0, 0.0);
        for i in (0..n).filter(|&i| labels[i]) {
            for j in (0..n).filter(|&j| !labels[j]) {
                pairs += 1.0;
                wins += match scores[i].partial_cmp(&scores[j]).unwrap() {
                    std::cmp::Ordering::Greater => 1.0,
                    std::cmp::Ordering::Equal => 0.5,
                    std::cmp::Ordering::Less => 0.0,
                };
            }
        }
        let got = auroc_scores(&scores, &labels).map_err(|e| e.to_string())?;
        ensure(got == wins / pairs, || {
            format!("auroc {got} vs {}", wins / pairs)
        })?;
    }

    let single = ProbPredictionSet::from_pairs(&[0.8; 4], &[true, false, true, false]).unwrap();
    let e = calibration_eavg(&single, 1).unwrap();
    ensure(e == 0.8 - 0.5, || format!("single bin {e}"))?;
    let probs = [0.25, 0.5, 0.75, 1.0];
    let labels = [true, false, false, true];
    let per_point = ProbPredictionSet::from_pairs(&probs, &labels).unwrap();
    let e = calibration_eavg(&per_point, 4).unwrap();
    let hand = (0.75 + 0.5 + 0.75 + 0.0) / 4.0;
    ensure(e == hand, || format!("per-point bins {e} vs {hand}"))?;
    Ok(format!(
        "{tables} rank tables over {} graphs, 100 AUROC sets, E_avg single-bin and per-point exact",
        graphs.len()
    ))
}

fn subtree_extraction() -> Outcome {
    let chain = KnowledgeGraph::parse_str("a\tb\nb\tc\n").unwrap();
    let diamond = KnowledgeGraph::parse_str("a\tb\na\tc\nb\td\nc\td\n").unwrap();
    let cases: [SubtreeCase; 3] = [
        (&chain, "c", &["a", "b", "c"], &[("a", "b"), ("b", "c")]),
        (&chain, "b", &["a", "b"], &[("a", "b")]),
        (
            &diamond,
            "d",
            &["a", "b", "c", "d"],
            &[("a", "b"), ("a", "c"), ("b", "d"), ("c", "d")],
        ),
    ];
    for (graph, observed, nodes, edges) in cases {
        let obs = ObservedSet::resolve(graph, [observed]).observed;
        let sub = graph
            .extract_ancestral_subtree(&obs)
            .map_err(|e| e.to_string())?;
        let mut got_nodes: Vec<&str> = sub.codes().iter().map(String::as_str).collect();
        got_nodes.sort_unstable();
        let mut got_edges: Vec<(&str, &str)> = sub
            .edges()
            .iter()
            .map(|&(p, c)| (sub.code(p).unwrap(), sub.code(c).unwrap()))
            .collect();
        got_edges.sort_unstable();
        ensure(got_nodes == nodes && got_edges == edges, || {
            format!("observed {observed}: {got_nodes:?} {got_edges:?}")
        })?;
        let again = sub
            .extract_ancestral_subtree(&ObservedSet::resolve(&sub, [observed]).observed)
            .unwrap();
        ensure(again.digest() == sub.digest(), || {
            format!("observed {observed}: not idempotent")
        })?;
    }
    Ok("chain {c}, chain {b}, diamond {d} exact and idempotent".into())
}

fn train_determinism() -> Outcome {
    let mut edges = Vec::new();
    balanced_tree(3, 3).write_edge_list(&mut edges).unwrap();
    let config = r#"{"dim": 5, "epochs": 50, "burn_in_epochs": 10, "negatives_k": 10, "seed": 42}"#;
    let mut runs = Vec::new();
    for _ in 0..2 {
        let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
        fs::write(dir.path().join("g.tsv"), &edges).unwrap();
        fs::write(dir.path().join("cfg.json"), config).unwrap();
        run_cli(
            dir.path(),
            &["train", "g.tsv", "--config", "cfg.json", "--out", "emb.tsv"],
        )?;
        let read = |name: &str| fs::read(dir.path().join(name)).unwrap();
        runs.push((
            read("emb.tsv"),
            read("emb.tsv.meta.json"),
            read("emb.tsv.manifest.json"),
        ));
    }
    ensure(runs[0].0 == runs[1].0, || "embedding files differ".into())?;
    ensure(runs[0].1 == runs[1].1, || "metadata files differ".into())?;
    ensure(runs[0].2 == runs[1].2, || "manifests differ".into())?;
    Ok(format!(
        "two runs in separate directories: embedding ({} bytes), metadata and manifest identical",
        runs[0].0.len()
    ))
}

fn held_out_auroc(features: &[Vec<f64>], labels: &[bool]) -> f64 {
    let split = features.len() * 2 / 3;
    let probe = LinearProbe::fit(
        &features[..split],
        &labels[..split],
        ProbeOptions::default(),
    )
    .unwrap();
    auroc_scores(&probe.predict_all(&features[split..]), &labels[split..]).unwrap()
}

fn feature_quality() -> Outcome {
    let started = Instant::now();
    let graph = balanced_tree(3, 5);
    let ball = PoincareBall::default();
    let seeds = 5;
    let (mut trained_total, mut random_total) = (0.0, 0.0);
    for seed in 0..seeds {
        let trained = trainer::train(&graph, &tree_config(10, seed), &mut |_| {}).unwrap();
        let random =
            EmbeddingTable::uniform_seeded(&ball, graph.codes().to_vec(), 10, 0.5, 500 + seed);
        // Labels: whether most of a patient's concepts fall under the first child of the root.
        let cohort =
            synthetic_cohort(&graph, "n1", 600, 6, 0.05, seed).map_err(|e| e.to_string())?;
        let labels: Vec<bool> = cohort.iter().map(|p| p.label).collect();
        let score = |table: &EmbeddingTable| {
            let space = FeatureSpace::build(&ball, table, &[], 0, seed).unwrap();
            let xs: Vec<Vec<f64>> = cohort
                .iter()
                .map(|p| {
                    space
                        .average_patient_vector(p, AveragingDomain::Tangent)
                        .values
                })
                .collect();
            held_out_auroc(&xs, &labels)
        };
        trained_total += score(&trained);
        random_total += score(&random);
    }
    let (trained, random) = (trained_total / seeds as f64, random_total / seeds as f64);
    ensure(trained - random >= 0.05, || {
        format!("trained {trained:.3} vs random {random:.3}")
    })?;
    within(started, Duration::from_secs(300))?;
    Ok(format!(
        "held-out AUROC trained {trained:.3} vs random {random:.3} over {seeds} seeds, {:.2?}",
        started.elapsed()
    ))
}

fn burn_in_schedule() -> Outcome {
    let graph = balanced_tree(2, 3);
    let config = TrainingConfig {
        dim: 3,
        epochs: 25,
        burn_in_epochs: 10,
        learning_rate: 0.2,
        negatives_k: 3,
        ..TrainingConfig::default()
    };
    let mut trace = Vec::new();
    trainer::train(&graph, &config, &mut |r| trace.push(r.learning_rate))
        .map_err(|e| e.to_string())?;
    let expected: Vec<f64> = (0..25)
        .map(|e| if e < 10 { 0.2 / 10.0 } else { 0.2 })
        .collect();
    ensure(trace == expected, || format!("trace {trace:?}"))?;
    Ok("10 epochs at 0.02 then 15 at 0.2".into())
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("geometry suite", geometry_suite),
        ("gradient suite", gradient_suite),
        ("training soundness", training_soundness),
        ("dimension trend", dimension_trend),
        ("sweep shape", sweep_shape),
        ("oracle equivalence", oracle_equivalence),
        ("subtree extraction", subtree_extraction),
        ("train determinism", train_determinism),
        ("feature quality", feature_quality),
        ("burn-in schedule", burn_in_schedule),
    ];
    let mut failed = 0;
    for (i, (name, check)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(AssertUnwindSafe(check)).unwrap_or_else(|panic| {
            let msg = panic
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| panic.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("criterion {:>2} PASS  {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("criterion {:>2} FAIL  {name}: {detail}", i + 1);
            }
        }
    }
    println!(
        "acceptance: {} passed, {failed} failed",
        criteria.len() - failed
    );
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

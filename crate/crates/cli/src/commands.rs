use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use anyhow::{bail, Context, Result};
use poincare_core::evaluator::{run_sweep, GridSpec, SweepOptions};
use poincare_core::features::{self, AveragingDomain, FeatureSpace};
use poincare_core::graph::{KnowledgeGraph, ObservedSet};
use poincare_core::trainer::{self, EmbeddingTable, TrainingConfig};
use poincare_core::{digest, mean_rank, CandidatePolicy, PoincareBall};
use serde::Serialize;

use crate::manifest::{sidecar, ManifestBuilder};
use crate::{Cli, Command, FeatureMode};

pub fn run(cli: &Cli) -> Result<()> {
    match &cli.command {
        Command::Extract {
            edge_list,
            observed,
            out,
        } => extract(cli, edge_list, observed, out),
        Command::Train {
            edge_list,
            config,
            out,
        } => train(cli, edge_list, config.as_deref(), out),
        Command::Sweep {
            edge_list,
            grid,
            config,
            out,
            candidate_policy,
        } => sweep(
            cli,
            edge_list,
            grid,
            config.as_deref(),
            out,
            *candidate_policy,
        ),
        Command::Eval {
            edge_list,
            embedding,
            out,
            candidate_policy,
            config,
        } => eval(
            cli,
            edge_list,
            embedding,
            out,
            *candidate_policy,
            config.as_deref(),
        ),
        Command::ExportTangent {
            embedding,
            out,
            config,
        } => export_tangent(cli, embedding, out, config.as_deref()),
        Command::Features {
            embedding,
            patients,
            mode,
            raw_average,
            euclidean_dim,
            out,
            config,
        } => features(
            cli,
            embedding,
            patients,
            *mode,
            *raw_average,
            *euclidean_dim,
            out,
            config.as_deref(),
        ),
    }
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    Ok(BufWriter::new(
        File::create(path).with_context(|| format!("creating {}", path.display()))?,
    ))
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn read_graph(path: &Path, manifest: &mut ManifestBuilder) -> Result<KnowledgeGraph> {
    manifest.input(path)?;
    KnowledgeGraph::parse_edge_list(open(path)?)
        .with_context(|| format!("parsing edge list {}", path.display()))
}

/// Config from file (or defaults) with the `--seed` override applied.
fn load_config(
    cli: &Cli,
    path: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<TrainingConfig> {
    let mut config = match path {
        Some(p) => {
            manifest.input(p)?;
            let text =
                std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            TrainingConfig::from_json(&text).with_context(|| format!("config {}", p.display()))?
        }
        None => TrainingConfig::default(),
    };
    if let Some(seed) = cli.seed {
        config.seed = seed;
    }
    config.validate()?;
    manifest.config(&config)?;
    manifest.seed(config.seed);
    Ok(config)
}

fn read_table(
    path: &Path,
    ball: &PoincareBall,
    manifest: &mut ManifestBuilder,
) -> Result<EmbeddingTable> {
    manifest.input(path)?;
    EmbeddingTable::read_tsv(ball, open(path)?)
        .with_context(|| format!("reading embedding {}", path.display()))
}

#[derive(Serialize)]
struct SubtreeMetadata {
    node_count: usize,
    edge_count: usize,
    observed_count: usize,
    unresolved_count: usize,
    input_digest: String,
    observed_digest: String,
}

fn extract(cli: &Cli, edge_list: &Path, observed: &Path, out: &Path) -> Result<()> {
    let mut manifest = ManifestBuilder::new("extract", cli.threads, cli.record_wall_time);
    let graph = read_graph(edge_list, &mut manifest)?;
    manifest.input(observed)?;
    let resolution = ObservedSet::read(&graph, open(observed)?)?;

    let unresolved_path = sidecar(out, "unresolved.txt");
    let mut w = create(&unresolved_path)?;
    for code in &resolution.unresolved {
        writeln!(w, "{code}")?;
    }
    w.flush()?;
    if !resolution.unresolved.is_empty() {
        manifest.warn(format!(
            "{} observed code(s) not in the hierarchy, listed in {}",
            resolution.unresolved.len(),
            unresolved_path.display()
        ));
    }
    if resolution.observed.is_empty() {
        bail!(
            "no observed concept resolves against {}; nothing to extract",
            edge_list.display()
        );
    }

    let subtree = graph.extract_ancestral_subtree(&resolution.observed)?;
    let mut w = create(out)?;
    subtree.write_edge_list(&mut w)?;
    w.flush()?;
    let index_path = sidecar(out, "index.tsv");
    let mut w = create(&index_path)?;
    subtree.write_code_index(&mut w)?;
    w.flush()?;
    let meta_path = sidecar(out, "meta.json");
    write_json(
        &meta_path,
        &SubtreeMetadata {
            node_count: subtree.node_count(),
            edge_count: subtree.edge_count(),
            observed_count: resolution.observed.len(),
            unresolved_count: resolution.unresolved.len(),
            input_digest: digest::file_sha256(edge_list)?,
            observed_digest: digest::file_sha256(observed)?,
        },
    )?;
    log::info!(
        "subtree: {} nodes, {} edges ({} observed)",
        subtree.node_count(),
        subtree.edge_count(),
        resolution.observed.len()
    );
    for p in [
        out,
        index_path.as_path(),
        meta_path.as_path(),
        unresolved_path.as_path(),
    ] {
        manifest.output(p)?;
    }
    manifest.finish(out)?;
    Ok(())
}

fn train(cli: &Cli, edge_list: &Path, config: Option<&Path>, out: &Path) -> Result<()> {
    let mut manifest = ManifestBuilder::new("train", cli.threads, cli.record_wall_time);
    let config = load_config(cli, config, &mut manifest)?;
    let graph = read_graph(edge_list, &mut manifest)?;
    if cli.threads != 1 {
        manifest.warn(format!(
            "training with {} threads is not bit-reproducible; use --threads 1 for that",
            cli.threads
        ));
    }
    let report_every = (config.epochs / 10).max(1);
    let table = trainer::train_with_threads(&graph, &config, cli.threads, &mut |r| {
        if r.epoch % report_every == 0 || r.epoch + 1 == config.epochs {
            log::info!(
                "epoch {:>5}  lr {:.4}  loss {:.6}",
                r.epoch,
                r.learning_rate,
                r.mean_loss
            );
        }
    })?;

    let mut w = create(out)?;
    table.write_tsv(&mut w)?;
    w.flush()?;
    let meta_path = sidecar(out, "meta.json");
    let mut w = create(&meta_path)?;
    table.write_metadata(&mut w)?;
    writeln!(w)?;
    w.flush()?;
    manifest.output(out)?;
    manifest.output(&meta_path)?;
    manifest.finish(out)?;
    Ok(())
}

fn sweep(
    cli: &Cli,
    edge_list: &Path,
    grid: &Path,
    config: Option<&Path>,
    out: &Path,
    policy: CandidatePolicy,
) -> Result<()> {
    let mut manifest = ManifestBuilder::new("sweep", cli.threads, cli.record_wall_time);
    let base = load_config(cli, config, &mut manifest)?;
    let graph = read_graph(edge_list, &mut manifest)?;
    manifest.input(grid)?;
    let grid_text =
        std::fs::read_to_string(grid).with_context(|| format!("reading {}", grid.display()))?;
    let grid = GridSpec::from_json(&grid_text)?;
    if grid.is_empty() {
        bail!("grid has no cells");
    }
    log::info!("sweeping {} cells", grid.len());
    let report = run_sweep(
        &graph,
        &grid,
        &base,
        SweepOptions {
            candidate_policy: policy.with_seed(base.seed),
            threads: cli.threads,
        },
    )?;
    for row in report.failures() {
        manifest.warn(format!(
            "cell dim={} burn_in={} k={} directed={} failed: {}",
            row.dim,
            row.burn_in_epochs,
            row.negatives_k,
            row.directed,
            row.error.as_deref().unwrap_or("")
        ));
    }
    let mut w = create(out)?;
    report.write_csv(&mut w)?;
    w.flush()?;
    manifest.output(out)?;
    manifest.finish(out)?;
    Ok(())
}

fn ball_from(
    cli: &Cli,
    config: Option<&Path>,
    manifest: &mut ManifestBuilder,
) -> Result<(PoincareBall, u64)> {
    let config = load_config(cli, config, manifest)?;
    Ok((config.ball()?, config.seed))
}

fn eval(
    cli: &Cli,
    edge_list: &Path,
    embedding: &Path,
    out: &Path,
    policy: CandidatePolicy,
    config: Option<&Path>,
) -> Result<()> {
    let mut manifest = ManifestBuilder::new("eval", cli.threads, cli.record_wall_time);
    let (ball, seed) = ball_from(cli, config, &mut manifest)?;
    let graph = read_graph(edge_list, &mut manifest)?;
    let table = read_table(embedding, &ball, &mut manifest)?;
    let report = mean_rank(&ball, &graph, &table, policy.with_seed(seed), cli.threads)?;
    log::info!(
        "mean rank {:.4} over {} edges ({})",
        report.mean_rank,
        report.evaluated_edges,
        report.candidate_policy
    );
    write_json(out, &report)?;
    manifest.output(out)?;
    manifest.finish(out)?;
    Ok(())
}

fn export_tangent(cli: &Cli, embedding: &Path, out: &Path, config: Option<&Path>) -> Result<()> {
    let mut manifest = ManifestBuilder::new("export-tangent", cli.threads, cli.record_wall_time);
    let (ball, _) = ball_from(cli, config, &mut manifest)?;
    let table = read_table(embedding, &ball, &mut manifest)?;
    let mut w = create(out)?;
    write!(w, "concept_id")?;
    for i in 0..table.dim() {
        write!(w, "\tv{i}")?;
    }
    writeln!(w)?;
    for (code, row) in table.rows() {
        let t = ball.log_map_origin(row)?;
        write!(w, "{code}")?;
        for x in t.iter() {
            write!(w, "\t{x}")?;
        }
        writeln!(w)?;
    }
    w.flush()?;
    manifest.output(out)?;
    manifest.finish(out)?;
    Ok(())
}

#[allow(clippy::too_many_arguments)]
fn features(
    cli: &Cli,
    embedding: &Path,
    patients: &Path,
    mode: FeatureMode,
    raw_average: bool,
    euclidean_dim: Option<usize>,
    out: &Path,
    config: Option<&Path>,
) -> Result<()> {
    let mut manifest = ManifestBuilder::new("features", cli.threads, cli.record_wall_time);
    let (ball, seed) = ball_from(cli, config, &mut manifest)?;
    let table = read_table(embedding, &ball, &mut manifest)?;
    manifest.input(patients)?;
    let records = features::read_patients(open(patients)?)
        .with_context(|| format!("reading patients {}", patients.display()))?;

    let mut covariates: Vec<String> = Vec::new();
    let mut seen = std::collections::HashSet::new();
    for r in &records {
        for c in &r.covariates {
            if table.row_of(c).is_none() && seen.insert(c.clone()) {
                covariates.push(c.clone());
            }
        }
    }
    let euclidean_dim = euclidean_dim.unwrap_or(match mode {
        FeatureMode::Average => features::AVERAGE_PATH_EUCLIDEAN_DIM,
        FeatureMode::Sequence => features::SEQUENCE_PATH_EUCLIDEAN_DIM,
    });
    let space = FeatureSpace::build(&ball, &table, &covariates, euclidean_dim, seed)?;

    let mut w = create(out)?;
    let stats = match mode {
        FeatureMode::Average => {
            let domain = if raw_average {
                AveragingDomain::RawBall
            } else {
                AveragingDomain::Tangent
            };
            features::write_average_tsv(&space, &records, domain, &mut w)?
        }
        FeatureMode::Sequence => features::write_sequence_tsv(&space, &records, &mut w)?,
    };
    w.flush()?;
    if !stats.skipped_codes.is_empty() {
        manifest.warn(format!(
            "{} unknown concept code(s) skipped: {}",
            stats.skipped_codes.len(),
            stats.skipped_codes.join(", ")
        ));
    }
    if stats.empty_patients > 0 {
        manifest.warn(format!(
            "{} patient(s) have no known taxonomy concept (zero feature vector)",
            stats.empty_patients
        ));
    }
    let stats_path = sidecar(out, "stats.json");
    write_json(&stats_path, &stats)?;
    manifest.output(out)?;
    manifest.output(&stats_path)?;
    manifest.finish(out)?;
    Ok(())
}

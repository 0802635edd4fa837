use std::collections::HashSet;
use std::io::BufRead;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{FeatureError, Result};
use crate::graph::{ConceptId, KnowledgeGraph};

/// One patient's observation-window data.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientRecord {
    pub patient_id: String,
    pub label: bool,
    /// Taxonomy concept codes, first occurrence order, no duplicates.
    pub concepts: Vec<String>,
    /// Covariates outside the taxonomy.
    pub covariates: Vec<String>,
    pub age: f64,
    pub sex: f64,
    pub cci: f64,
}

fn split_list(field: &str) -> Vec<String> {
    let mut seen = HashSet::new();
    field
        .split(';')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .filter(|s| seen.insert(*s))
        .map(str::to_owned)
        .collect()
}

/// Reads `patient_id,label,concepts,covariates,age,sex,cci` CSV, lists separated by
/// `;`. A first line starting with `patient_id` is taken as a header.
pub fn read_patients<R: BufRead>(reader: R) -> Result<Vec<PatientRecord>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let line = line.trim();
        if line.is_empty() || line.starts_with('#') || (i == 0 && line.starts_with("patient_id")) {
            continue;
        }
        let bad = |message: String| FeatureError::Format {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = line.split(',').map(str::trim).collect();
        if fields.len() != 7 {
            return Err(bad(format!("expected 7 fields, found {}", fields.len())));
        }
        let label = match fields[1] {
            "0" => false,
            "1" => true,
            other => return Err(bad(format!("label `{other}` is not 0 or 1"))),
        };
        let num = |s: &str, name: &str| -> Result<f64> {
            s.parse::<f64>()
                .ok()
                .filter(|x| x.is_finite())
                .ok_or_else(|| bad(format!("{name} `{s}` is not a finite number")))
        };
        out.push(PatientRecord {
            patient_id: fields[0].to_owned(),
            label,
            concepts: split_list(fields[2]),
            covariates: split_list(fields[3]),
            age: num(fields[4], "age")?,
            sex: num(fields[5], "sex")?,
            cci: num(fields[6], "cci")?,
        });
    }
    Ok(out)
}

/// Longest concept list in the cohort.
pub fn max_sequence_len(records: &[PatientRecord]) -> usize {
    records.iter().map(|r| r.concepts.len()).max().unwrap_or(0)
}

fn descendants(graph: &KnowledgeGraph, root: ConceptId) -> HashSet<ConceptId> {
    let mut seen = HashSet::from([root]);
    let mut stack = vec![root];
    while let Some(n) = stack.pop() {
        for &c in graph.children(n) {
            if seen.insert(c) {
                stack.push(c);
            }
        }
    }
    seen
}

/// Patients with 1–`max_concepts` distinct random concepts each. The label is whether
/// at least half of a patient's concepts lie in the subtree under `target`, flipped
/// with probability `label_noise`.
pub fn synthetic_cohort(
    graph: &KnowledgeGraph,
    target: &str,
    patients: usize,
    max_concepts: usize,
    label_noise: f64,
    seed: u64,
) -> Result<Vec<PatientRecord>> {
    let target_id = graph
        .id(target)
        .ok_or_else(|| FeatureError::UnknownConcept(target.to_owned()))?;
    let subtree = descendants(graph, target_id);
    let nodes: Vec<ConceptId> = graph.nodes().collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let max_concepts = max_concepts.clamp(1, nodes.len());
    let mut out = Vec::with_capacity(patients);
    for p in 0..patients {
        let m = rng.gen_range(1..=max_concepts);
        let chosen: Vec<ConceptId> = nodes.choose_multiple(&mut rng, m).copied().collect();
        let inside = chosen.iter().filter(|c| subtree.contains(c)).count();
        let mut label = 2 * inside >= m;
        if rng.gen_bool(label_noise) {
            label = !label;
        }
        out.push(PatientRecord {
            patient_id: format!("p{p}"),
            label,
            concepts: chosen
                .iter()
                .map(|&c| graph.code(c).expect("node of graph").to_owned())
                .collect(),
            covariates: Vec::new(),
            age: rng.gen_range(45.0..65.0f64).floor(),
            sex: f64::from(u8::from(rng.gen_bool(0.5))),
            cci: f64::from(rng.gen_range(0u8..5)),
        });
    }
    Ok(out)
}

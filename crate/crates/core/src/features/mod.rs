//! Downstream model inputs built from trained embeddings.
//!
//! Every taxonomy concept gets a frozen tangent vector `log₀(x)` plus a trainable
//! additive offset that starts at zero. Covariates outside the taxonomy (drug
//! prescriptions, for instance) get a randomly initialised Euclidean vector instead.
//! Patients become either one averaged vector or a zero-padded, masked token sequence.

mod cohort;
mod probe;

use std::collections::HashMap;
use std::io::{self, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use thiserror::Error;

use crate::digest::sha256_hex;
use crate::manifold::{GeometryError, PoincareBall};
use crate::trainer::EmbeddingTable;

pub use cohort::{max_sequence_len, read_patients, synthetic_cohort, PatientRecord};
pub use probe::{LinearProbe, ProbeOptions};

/// Default Euclidean width for the averaged-vector path.
pub const AVERAGE_PATH_EUCLIDEAN_DIM: usize = 256;
/// Default Euclidean width for the token-sequence path.
pub const SEQUENCE_PATH_EUCLIDEAN_DIM: usize = 192;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("unknown concept `{0}`")]
    UnknownConcept(String),
    #[error("`{0}` is both a taxonomy concept and a non-taxonomy covariate")]
    CodeCollision(String),
    #[error("record `{patient}` has {len} concepts but max_len is {max_len}")]
    SequenceTooLong {
        patient: String,
        len: usize,
        max_len: usize,
    },
    #[error("non-finite feature value")]
    NonFinite,
    #[error("probe training needs at least two examples of both classes")]
    NeedBothClasses,
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Io(#[from] io::Error),
}

pub type Result<T, E = FeatureError> = std::result::Result<T, E>;

/// Where a patient's concept vectors are averaged.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum AveragingDomain {
    /// Mean of effective embeddings (log-mapped vector plus offset).
    #[default]
    Tangent,
    /// Mean of raw ball coordinates; offsets are not applied.
    RawBall,
}

/// Averaged taxonomy vector for one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct PatientVector {
    pub values: Vec<f64>,
    /// No known taxonomy concept: `values` is the zero vector.
    pub empty: bool,
    /// Concept codes absent from the taxonomy table.
    pub skipped: Vec<String>,
}

/// Padded token sequence for one patient.
#[derive(Debug, Clone, PartialEq)]
pub struct SequenceFeatures {
    pub tokens: Vec<Vec<f64>>,
    pub mask: Vec<bool>,
    pub skipped: Vec<String>,
}

#[derive(Debug, Clone)]
struct Rows {
    dim: usize,
    index: HashMap<String, usize>,
    codes: Vec<String>,
    data: Vec<f64>,
}

impl Rows {
    fn row(&self, r: usize) -> &[f64] {
        &self.data[r * self.dim..(r + 1) * self.dim]
    }

    fn row_mut(&mut self, r: usize) -> &mut [f64] {
        &mut self.data[r * self.dim..(r + 1) * self.dim]
    }
}

#[derive(Debug, Clone)]
pub struct FeatureSpace {
    taxonomy: Rows,
    raw: Vec<f64>,
    frozen: Vec<f64>,
    offsets: Vec<f64>,
    euclidean: Rows,
}

impl FeatureSpace {
    /// Log-maps every table row into the frozen layer and draws Euclidean vectors for
    /// `non_taxonomy_ids` uniformly from `[-1/√d, 1/√d]` with the given seed.
    pub fn build(
        ball: &PoincareBall,
        table: &EmbeddingTable,
        non_taxonomy_ids: &[String],
        euclidean_dim: usize,
        seed: u64,
    ) -> Result<Self> {
        let dim = table.dim();
        if dim == 0 {
            return Err(FeatureError::DimensionMismatch(
                "embedding table has dimension 0".into(),
            ));
        }
        if !non_taxonomy_ids.is_empty() && euclidean_dim == 0 {
            return Err(FeatureError::DimensionMismatch(
                "Euclidean dimension must be positive".into(),
            ));
        }
        let mut frozen = Vec::with_capacity(table.len() * dim);
        let mut raw = Vec::with_capacity(table.len() * dim);
        for (_, row) in table.rows() {
            let t = ball.log_map_origin(row)?;
            if t.len() != dim {
                return Err(FeatureError::DimensionMismatch(format!(
                    "{} vs {dim}",
                    t.len()
                )));
            }
            frozen.extend_from_slice(&t);
            raw.extend_from_slice(row);
        }
        let codes = table.codes().to_vec();
        let index: HashMap<String, usize> = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();

        let mut e_codes: Vec<String> = Vec::new();
        let mut e_index = HashMap::new();
        for id in non_taxonomy_ids {
            if index.contains_key(id) {
                return Err(FeatureError::CodeCollision(id.clone()));
            }
            if !e_index.contains_key(id) {
                e_index.insert(id.clone(), e_codes.len());
                e_codes.push(id.clone());
            }
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let bound = 1.0 / (euclidean_dim.max(1) as f64).sqrt();
        let e_data = (0..e_codes.len() * euclidean_dim)
            .map(|_| rng.gen_range(-bound..=bound))
            .collect();

        Ok(Self {
            offsets: vec![0.0; frozen.len()],
            frozen,
            raw,
            taxonomy: Rows {
                dim,
                index,
                codes,
                data: Vec::new(),
            },
            euclidean: Rows {
                dim: euclidean_dim,
                index: e_index,
                codes: e_codes,
                data: e_data,
            },
        })
    }

    pub fn dim(&self) -> usize {
        self.taxonomy.dim
    }

    pub fn euclidean_dim(&self) -> usize {
        self.euclidean.dim
    }

    pub fn taxonomy_codes(&self) -> &[String] {
        &self.taxonomy.codes
    }

    pub fn euclidean_codes(&self) -> &[String] {
        &self.euclidean.codes
    }

    pub fn is_taxonomy(&self, code: &str) -> bool {
        self.taxonomy.index.contains_key(code)
    }

    fn tax_row(&self, code: &str) -> Result<usize> {
        self.taxonomy
            .index
            .get(code)
            .copied()
            .ok_or_else(|| FeatureError::UnknownConcept(code.to_owned()))
    }

    fn slice(data: &[f64], dim: usize, r: usize) -> &[f64] {
        &data[r * dim..(r + 1) * dim]
    }

    /// Frozen tangent vector of a taxonomy concept.
    pub fn frozen(&self, code: &str) -> Result<&[f64]> {
        let r = self.tax_row(code)?;
        Ok(Self::slice(&self.frozen, self.dim(), r))
    }

    pub fn offset(&self, code: &str) -> Result<&[f64]> {
        let r = self.tax_row(code)?;
        Ok(Self::slice(&self.offsets, self.dim(), r))
    }

    /// Trainable offset of a taxonomy concept.
    pub fn offset_mut(&mut self, code: &str) -> Result<&mut [f64]> {
        let r = self.tax_row(code)?;
        let dim = self.dim();
        Ok(&mut self.offsets[r * dim..(r + 1) * dim])
    }

    /// Trainable vector of a non-taxonomy covariate.
    pub fn euclidean_mut(&mut self, code: &str) -> Result<&mut [f64]> {
        let r = *self
            .euclidean
            .index
            .get(code)
            .ok_or_else(|| FeatureError::UnknownConcept(code.to_owned()))?;
        Ok(self.euclidean.row_mut(r))
    }

    /// Frozen tangent plus offset for taxonomy concepts, the Euclidean vector otherwise.
    pub fn effective_embedding(&self, code: &str) -> Result<Vec<f64>> {
        if let Some(&r) = self.taxonomy.index.get(code) {
            let dim = self.dim();
            let frozen = Self::slice(&self.frozen, dim, r);
            let offset = Self::slice(&self.offsets, dim, r);
            return Ok(frozen.iter().zip(offset).map(|(f, o)| f + o).collect());
        }
        match self.euclidean.index.get(code) {
            Some(&r) => Ok(self.euclidean.row(r).to_vec()),
            None => Err(FeatureError::UnknownConcept(code.to_owned())),
        }
    }

    /// Mean taxonomy vector of a patient; concepts outside the taxonomy table are
    /// skipped and reported.
    pub fn average_patient_vector(
        &self,
        record: &PatientRecord,
        domain: AveragingDomain,
    ) -> PatientVector {
        let dim = self.dim();
        let mut sums = vec![Vec::with_capacity(record.concepts.len()); dim];
        let mut skipped = Vec::new();
        for code in &record.concepts {
            let Some(&r) = self.taxonomy.index.get(code) else {
                skipped.push(code.clone());
                continue;
            };
            match domain {
                AveragingDomain::Tangent => {
                    let f = Self::slice(&self.frozen, dim, r);
                    let o = Self::slice(&self.offsets, dim, r);
                    for i in 0..dim {
                        sums[i].push(f[i] + o[i]);
                    }
                }
                AveragingDomain::RawBall => {
                    let x = Self::slice(&self.raw, dim, r);
                    for i in 0..dim {
                        sums[i].push(x[i]);
                    }
                }
            }
        }
        let count = record.concepts.len() - skipped.len();
        let values = if count == 0 {
            vec![0.0; dim]
        } else {
            sums.into_iter()
                .map(|s| crate::evaluator::stable_sum(s) / count as f64)
                .collect()
        };
        PatientVector {
            values,
            empty: count == 0,
            skipped,
        }
    }

    /// Mean Euclidean vector of the patient's non-taxonomy covariates (zero if none).
    pub fn average_covariate_vector(&self, record: &PatientRecord) -> (Vec<f64>, Vec<String>) {
        let dim = self.euclidean.dim;
        let mut acc = vec![0.0; dim];
        let mut skipped = Vec::new();
        let mut count = 0usize;
        for code in &record.covariates {
            match self.euclidean.index.get(code) {
                Some(&r) => {
                    count += 1;
                    acc.iter_mut()
                        .zip(self.euclidean.row(r))
                        .for_each(|(a, x)| *a += x);
                }
                None => skipped.push(code.clone()),
            }
        }
        if count > 0 {
            acc.iter_mut().for_each(|a| *a /= count as f64);
        }
        (acc, skipped)
    }

    /// Effective embeddings in record order, zero-padded to `max_len` with a mask that
    /// is true exactly on real tokens.
    pub fn padded_sequence(
        &self,
        record: &PatientRecord,
        max_len: usize,
    ) -> Result<SequenceFeatures> {
        if record.concepts.len() > max_len {
            return Err(FeatureError::SequenceTooLong {
                patient: record.patient_id.clone(),
                len: record.concepts.len(),
                max_len,
            });
        }
        let dim = self.dim();
        let mut tokens = Vec::with_capacity(max_len);
        let mut skipped = Vec::new();
        for code in &record.concepts {
            if self.is_taxonomy(code) {
                tokens.push(self.effective_embedding(code)?);
            } else {
                skipped.push(code.clone());
            }
        }
        let mut mask = vec![true; tokens.len()];
        mask.resize(max_len, false);
        tokens.resize(max_len, vec![0.0; dim]);
        Ok(SequenceFeatures {
            tokens,
            mask,
            skipped,
        })
    }

    /// SHA-256 over the frozen layer's bit patterns.
    pub fn frozen_digest(&self) -> String {
        let bytes: Vec<u8> = self.frozen.iter().flat_map(|x| x.to_le_bytes()).collect();
        sha256_hex(bytes)
    }
}

/// Counts gathered while exporting a cohort.
#[derive(Debug, Clone, Default, PartialEq, Eq, serde::Serialize)]
pub struct ExportStats {
    pub patients: usize,
    pub empty_patients: usize,
    pub skipped_codes: Vec<String>,
    pub max_len: usize,
}

impl ExportStats {
    fn skip(&mut self, codes: Vec<String>) {
        self.skipped_codes.extend(codes);
    }

    fn finish(mut self) -> Self {
        self.skipped_codes.sort();
        self.skipped_codes.dedup();
        self
    }
}

/// `patient_id, label, t0.., e0.., age, sex, cci` per patient.
pub fn write_average_tsv<W: Write>(
    space: &FeatureSpace,
    records: &[PatientRecord],
    domain: AveragingDomain,
    mut out: W,
) -> Result<ExportStats> {
    write!(out, "patient_id\tlabel")?;
    for i in 0..space.dim() {
        write!(out, "\tt{i}")?;
    }
    for i in 0..space.euclidean_dim() {
        write!(out, "\te{i}")?;
    }
    writeln!(out, "\tage\tsex\tcci")?;
    let mut stats = ExportStats::default();
    for r in records {
        let pv = space.average_patient_vector(r, domain);
        let (ev, e_skipped) = space.average_covariate_vector(r);
        stats.patients += 1;
        stats.empty_patients += usize::from(pv.empty);
        stats.skip(pv.skipped);
        stats.skip(e_skipped);
        write!(out, "{}\t{}", r.patient_id, u8::from(r.label))?;
        for x in pv.values.iter().chain(&ev) {
            write!(out, "\t{x}")?;
        }
        writeln!(out, "\t{}\t{}\t{}", r.age, r.sex, r.cci)?;
    }
    Ok(stats.finish())
}

/// `patient_id, position, mask, t0..` per token, padded to the cohort maximum.
pub fn write_sequence_tsv<W: Write>(
    space: &FeatureSpace,
    records: &[PatientRecord],
    mut out: W,
) -> Result<ExportStats> {
    let max_len = max_sequence_len(records);
    write!(out, "patient_id\tposition\tmask")?;
    for i in 0..space.dim() {
        write!(out, "\tt{i}")?;
    }
    writeln!(out)?;
    let mut stats = ExportStats {
        max_len,
        ..Default::default()
    };
    for r in records {
        let seq = space.padded_sequence(r, max_len)?;
        stats.patients += 1;
        stats.empty_patients += usize::from(!seq.mask.iter().any(|&m| m));
        stats.skip(seq.skipped);
        for (pos, (tok, m)) in seq.tokens.iter().zip(&seq.mask).enumerate() {
            write!(out, "{}\t{pos}\t{}", r.patient_id, u8::from(*m))?;
            for x in tok {
                write!(out, "\t{x}")?;
            }
            writeln!(out)?;
        }
    }
    Ok(stats.finish())
}

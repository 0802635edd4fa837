//! Row-major embedding storage and its TSV / JSON-sidecar file format.

use std::collections::HashMap;
use std::io::{self, BufRead, Write};

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use super::TrainingConfig;
use crate::digest::sha256_hex;
use crate::graph::ConceptId;
use crate::manifold::{GeometryError, PoincareBall};

#[derive(Debug, Error)]
pub enum TableError {
    #[error("line {line}: {message}")]
    Format { line: usize, message: String },
    #[error("row {row} (`{code}`): {source}")]
    Geometry {
        row: usize,
        code: String,
        source: GeometryError,
    },
    #[error("embedding file has no header row")]
    MissingHeader,
    #[error(transparent)]
    Io(#[from] io::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
}

/// Provenance stored in the JSON sidecar next to an embedding TSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TableMetadata {
    pub dim: usize,
    pub node_count: usize,
    pub config: Option<TrainingConfig>,
    pub final_loss: Option<f64>,
    pub epochs: usize,
    pub graph_digest: Option<String>,
}

/// One ball point per concept, stored contiguously.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable {
    dim: usize,
    codes: Vec<String>,
    index: HashMap<String, usize>,
    data: Vec<f64>,
    pub metadata: TableMetadata,
}

impl EmbeddingTable {
    /// Builds a table from explicit rows; each row must lie in `ball`.
    pub fn from_rows(
        ball: &PoincareBall,
        codes: Vec<String>,
        dim: usize,
        data: Vec<f64>,
    ) -> Result<Self, TableError> {
        if data.len() != codes.len() * dim {
            return Err(TableError::Format {
                line: 0,
                message: format!(
                    "{} values cannot fill {} rows of dimension {dim}",
                    data.len(),
                    codes.len()
                ),
            });
        }
        for (row, code) in codes.iter().enumerate() {
            ball.check(&data[row * dim..(row + 1) * dim])
                .map_err(|source| TableError::Geometry {
                    row,
                    code: code.clone(),
                    source,
                })?;
        }
        Ok(Self::new_unchecked(codes, dim, data))
    }

    pub(crate) fn new_unchecked(codes: Vec<String>, dim: usize, data: Vec<f64>) -> Self {
        let index = codes
            .iter()
            .enumerate()
            .map(|(i, c)| (c.clone(), i))
            .collect();
        let metadata = TableMetadata {
            dim,
            node_count: codes.len(),
            config: None,
            final_loss: None,
            epochs: 0,
            graph_digest: None,
        };
        Self {
            dim,
            codes,
            index,
            data,
            metadata,
        }
    }

    /// Coordinates drawn uniformly from `[-range, range]`, projected into the ball.
    pub fn uniform(
        ball: &PoincareBall,
        codes: Vec<String>,
        dim: usize,
        range: f64,
        rng: &mut impl Rng,
    ) -> Self {
        let mut data: Vec<f64> = (0..codes.len() * dim)
            .map(|_| rng.gen_range(-range..=range))
            .collect();
        if dim > 0 {
            for row in data.chunks_mut(dim) {
                ball.project_in_place(row)
                    .expect("uniform coordinates are finite");
            }
        }
        Self::new_unchecked(codes, dim, data)
    }

    /// Seeded variant of [`EmbeddingTable::uniform`].
    pub fn uniform_seeded(
        ball: &PoincareBall,
        codes: Vec<String>,
        dim: usize,
        range: f64,
        seed: u64,
    ) -> Self {
        Self::uniform(
            ball,
            codes,
            dim,
            range,
            &mut ChaCha8Rng::seed_from_u64(seed),
        )
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.codes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.codes.is_empty()
    }

    pub fn codes(&self) -> &[String] {
        &self.codes
    }

    pub fn row_of(&self, code: &str) -> Option<usize> {
        self.index.get(code).copied()
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.data[row * self.dim..(row + 1) * self.dim]
    }

    pub(crate) fn row_mut(&mut self, row: usize) -> &mut [f64] {
        &mut self.data[row * self.dim..(row + 1) * self.dim]
    }

    /// Vector of a graph node; tables produced by training share the graph's ids.
    pub fn vector(&self, id: ConceptId) -> &[f64] {
        self.row(id.index())
    }

    pub fn get(&self, code: &str) -> Option<&[f64]> {
        self.row_of(code).map(|r| self.row(r))
    }

    pub fn rows(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.codes
            .iter()
            .map(String::as_str)
            .zip(self.data.chunks(self.dim.max(1)))
    }

    /// Row-major coordinates.
    pub fn data(&self) -> &[f64] {
        &self.data
    }

    #[cfg(feature = "parallel")]
    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    /// Writes `concept_id<TAB>x0..x{dim-1}` with shortest round-trip float formatting.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> io::Result<()> {
        write!(out, "concept_id")?;
        for i in 0..self.dim {
            write!(out, "\tx{i}")?;
        }
        writeln!(out)?;
        for (code, row) in self.rows() {
            write!(out, "{code}")?;
            for x in row {
                write!(out, "\t{x}")?;
            }
            writeln!(out)?;
        }
        Ok(())
    }

    /// Parses the TSV format written by [`EmbeddingTable::write_tsv`]. Rows are
    /// validated against `ball`.
    pub fn read_tsv<R: BufRead>(ball: &PoincareBall, reader: R) -> Result<Self, TableError> {
        let mut lines = reader.lines().enumerate();
        let header = loop {
            match lines.next() {
                Some((_, line)) => {
                    let line = line?;
                    if !line.trim().is_empty() {
                        break line;
                    }
                }
                None => return Err(TableError::MissingHeader),
            }
        };
        let columns: Vec<&str> = header.trim_end_matches('\r').split('\t').collect();
        if columns.first() != Some(&"concept_id") {
            return Err(TableError::Format {
                line: 1,
                message: "header must start with `concept_id`".into(),
            });
        }
        let dim = columns.len() - 1;
        let mut codes = Vec::new();
        let mut data = Vec::new();
        for (i, line) in lines {
            let line = line?;
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != dim + 1 {
                return Err(TableError::Format {
                    line: i + 1,
                    message: format!("expected {} fields, found {}", dim + 1, fields.len()),
                });
            }
            codes.push(fields[0].to_owned());
            for f in &fields[1..] {
                let x: f64 = f.parse().map_err(|_| TableError::Format {
                    line: i + 1,
                    message: format!("`{f}` is not a number"),
                })?;
                data.push(x);
            }
        }
        Self::from_rows(ball, codes, dim, data)
    }

    pub fn write_metadata<W: Write>(&self, out: W) -> Result<(), TableError> {
        serde_json::to_writer_pretty(out, &self.metadata)?;
        Ok(())
    }

    /// SHA-256 of the TSV serialisation.
    pub fn digest(&self) -> String {
        let mut buf = Vec::new();
        self.write_tsv(&mut buf)
            .expect("writing to a Vec cannot fail");
        sha256_hex(buf)
    }
}

//! Title feature families: n-gram TF-IDF, embedding means, POS frequencies,
//! punctuation counts, and their block-wise concatenation.

mod embed;
mod pos;
mod text;
mod tfidf;

pub use embed::{embed_mean, load_embeddings, EmbeddingTable};
pub use pos::{identity_tags, load_pos_sidecar, pos_freq};
pub use text::{char_ngrams, punct_features, tokenize, tokenize_with, word_ngrams};
pub use tfidf::{fit_tfidf, transform_tfidf, Vocabulary};

use std::io::Write;

use serde::Serialize;
use thiserror::Error;

use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum FeatureError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("n-gram range invalid: lo={lo}, hi={hi}")]
    BadNgramRange { lo: usize, hi: usize },
    #[error("cannot fit TF-IDF on an empty corpus")]
    EmptyCorpus,
    #[error("embedding file line {line}: {detail}")]
    BadEmbeddingLine { line: usize, detail: String },
    #[error("unknown POS tag `{0}`")]
    UnknownTag(String),
    #[error("row count mismatch: block `{name}` has {got} rows, expected {expected}")]
    RowMismatch {
        name: String,
        got: usize,
        expected: usize,
    },
    #[error("no such feature block `{0}`")]
    NoSuchBlock(String),
    #[error("sparse index {index} out of dim {dim}")]
    IndexOutOfDim { index: usize, dim: usize },
}

/// Sparse vector with strictly increasing indices and no stored zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseVector<S> {
    indices: Vec<usize>,
    values: Vec<S>,
    dim: usize,
}

impl<S: Scalar> SparseVector<S> {
    /// Builds from (index, value) pairs; drops zeros, sorts, and checks range.
    pub fn new(mut pairs: Vec<(usize, S)>, dim: usize) -> Result<Self, FeatureError> {
        pairs.retain(|(_, v)| *v != S::zero());
        pairs.sort_by_key(|(i, _)| *i);
        let mut indices = Vec::with_capacity(pairs.len());
        let mut values = Vec::with_capacity(pairs.len());
        for (i, v) in pairs {
            if i >= dim {
                return Err(FeatureError::IndexOutOfDim { index: i, dim });
            }
            if indices.last() == Some(&i) {
                let last = values.len() - 1;
                values[last] += v;
            } else {
                indices.push(i);
                values.push(v);
            }
        }
        Ok(SparseVector { indices, values, dim })
    }

    pub fn zero(dim: usize) -> Self {
        SparseVector {
            indices: Vec::new(),
            values: Vec::new(),
            dim,
        }
    }

    pub fn from_dense(dense: &[S]) -> Self {
        let pairs = dense
            .iter()
            .enumerate()
            .filter(|(_, v)| **v != S::zero())
            .map(|(i, v)| (i, *v))
            .collect();
        SparseVector::new(pairs, dense.len()).expect("indices in range by construction")
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    /// True when no nonzero entries are stored; the flag for an all-OOV
    /// transform result.
    pub fn is_zero(&self) -> bool {
        self.indices.is_empty()
    }

    pub fn nnz(&self) -> usize {
        self.indices.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (usize, S)> + '_ {
        self.indices.iter().copied().zip(self.values.iter().copied())
    }

    pub fn get(&self, index: usize) -> S {
        match self.indices.binary_search(&index) {
            Ok(pos) => self.values[pos],
            Err(_) => S::zero(),
        }
    }

    pub fn l2_norm(&self) -> S {
        self.values.iter().map(|v| *v * *v).sum::<S>().sqrt()
    }

    pub fn scale(&mut self, factor: S) {
        for v in &mut self.values {
            *v *= factor;
        }
    }

    pub fn to_dense(&self) -> Vec<S> {
        let mut out = vec![S::zero(); self.dim];
        for (i, v) in self.iter() {
            out[i] = v;
        }
        out
    }

    pub fn dot_dense(&self, dense: &[S]) -> S {
        self.iter().map(|(i, v)| v * dense[i]).sum()
    }

    /// Same vector with indices shifted by `offset` inside a wider space.
    fn shifted(&self, offset: usize, new_dim: usize) -> Self {
        SparseVector {
            indices: self.indices.iter().map(|i| i + offset).collect(),
            values: self.values.clone(),
            dim: new_dim,
        }
    }
}

/// Name and width of one concatenated feature family.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FeatureBlock {
    pub name: String,
    pub width: usize,
}

/// Row-major sparse feature matrix with named column blocks.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix<S> {
    rows: Vec<SparseVector<S>>,
    dim: usize,
    blocks: Vec<FeatureBlock>,
}

impl<S: Scalar> FeatureMatrix<S> {
    pub fn from_rows(name: &str, rows: Vec<SparseVector<S>>) -> Self {
        let dim = rows.first().map(|r| r.dim()).unwrap_or(0);
        debug_assert!(rows.iter().all(|r| r.dim() == dim));
        FeatureMatrix {
            rows,
            dim,
            blocks: vec![FeatureBlock {
                name: name.to_string(),
                width: dim,
            }],
        }
    }

    pub fn from_dense_rows(name: &str, rows: &[Vec<S>]) -> Self {
        Self::from_rows(name, rows.iter().map(|r| SparseVector::from_dense(r)).collect())
    }

    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn blocks(&self) -> &[FeatureBlock] {
        &self.blocks
    }

    pub fn row(&self, i: usize) -> &SparseVector<S> {
        &self.rows[i]
    }

    pub fn rows(&self) -> &[SparseVector<S>] {
        &self.rows
    }

    /// Extracts one named block as its own matrix.
    pub fn slice_block(&self, name: &str) -> Result<FeatureMatrix<S>, FeatureError> {
        let mut offset = 0;
        for block in &self.blocks {
            if block.name == name {
                let rows = self
                    .rows
                    .iter()
                    .map(|r| {
                        let pairs = r
                            .iter()
                            .filter(|(i, _)| *i >= offset && *i < offset + block.width)
                            .map(|(i, v)| (i - offset, v))
                            .collect();
                        SparseVector::new(pairs, block.width)
                    })
                    .collect::<Result<Vec<_>, _>>()?;
                return Ok(FeatureMatrix {
                    rows,
                    dim: block.width,
                    blocks: vec![block.clone()],
                });
            }
            offset += block.width;
        }
        Err(FeatureError::NoSuchBlock(name.to_string()))
    }

    /// Writes the matrix as triplet CSV `row,col,value`.
    pub fn write_triplets<W: Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(writer, "row,col,value")?;
        for (r, row) in self.rows.iter().enumerate() {
            for (c, v) in row.iter() {
                writeln!(writer, "{r},{c},{v}")?;
            }
        }
        Ok(())
    }

    /// Writes the block descriptors as JSON.
    pub fn write_blocks_json<W: Write>(&self, writer: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(writer, &self.blocks)
    }
}

/// Horizontally concatenates feature matrices, recording each input's blocks.
pub fn assemble<S: Scalar>(blocks: &[FeatureMatrix<S>]) -> Result<FeatureMatrix<S>, FeatureError> {
    assert!(!blocks.is_empty(), "assemble needs at least one block");
    let n_rows = blocks[0].n_rows();
    for b in blocks {
        if b.n_rows() != n_rows {
            return Err(FeatureError::RowMismatch {
                name: b.blocks.first().map(|x| x.name.clone()).unwrap_or_default(),
                got: b.n_rows(),
                expected: n_rows,
            });
        }
    }
    let dim: usize = blocks.iter().map(|b| b.dim()).sum();
    let mut rows = Vec::with_capacity(n_rows);
    for r in 0..n_rows {
        let mut indices = Vec::new();
        let mut values = Vec::new();
        let mut offset = 0;
        for b in blocks {
            let shifted = b.rows[r].shifted(offset, dim);
            indices.extend(shifted.indices);
            values.extend(shifted.values);
            offset += b.dim();
        }
        rows.push(SparseVector { indices, values, dim });
    }
    let block_list = blocks.iter().flat_map(|b| b.blocks.iter().cloned()).collect();
    Ok(FeatureMatrix {
        rows,
        dim,
        blocks: block_list,
    })
}

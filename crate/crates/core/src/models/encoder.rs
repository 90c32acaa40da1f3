//! Frozen text-to-vector encoding.
//!
//! [`FrozenEncoder`] maps a title to the mean of its pretrained embedding
//! vectors (truncated to the configured length) and stands in for a
//! pretrained transformer: anything that produces one vector per title can
//! feed the adversarial trainer through this seam. [`TokenIndex`] gives the
//! sequence models padded token-id views over the same table.

use std::collections::HashMap;

use crate::autodiff::Tensor;
use crate::features::{embed_mean, tokenize, EmbeddingTable};
use crate::scalar::Scalar;

/// Mean-of-embeddings title encoder with fixed truncation length.
#[derive(Debug, Clone)]
pub struct FrozenEncoder<'a, S> {
    table: &'a EmbeddingTable<S>,
    max_len: usize,
}

impl<'a, S: Scalar> FrozenEncoder<'a, S> {
    pub fn new(table: &'a EmbeddingTable<S>, max_len: usize) -> Self {
        FrozenEncoder { table, max_len }
    }

    pub fn dim(&self) -> usize {
        self.table.dim()
    }

    /// Mean vector over the first `max_len` tokens; out-of-table tokens are
    /// skipped, and an all-OOV or empty title encodes to the zero vector.
    pub fn encode(&self, tokens: &[String]) -> Vec<S> {
        let cut = tokens.len().min(self.max_len);
        let (mean, _coverage) = embed_mean(&tokens[..cut], self.table);
        mean
    }

    /// Tokenizes and encodes each title into one row of a `[B, d]` tensor.
    pub fn encode_titles<'t>(&self, titles: impl Iterator<Item = &'t str>) -> Tensor<S> {
        let mut data = Vec::new();
        let mut rows = 0usize;
        for title in titles {
            let tokens = tokenize(title);
            data.extend(self.encode(&tokens));
            rows += 1;
        }
        Tensor::from_vec(vec![rows, self.dim()], data).expect("row widths equal table dim")
    }
}

/// Token-id assignment over an embedding table, with id 0 reserved for the
/// zero-vector padding row. Ids follow sorted token order, so the index is
/// independent of hash iteration order.
#[derive(Debug, Clone)]
pub struct TokenIndex<S> {
    index: HashMap<String, usize>,
    matrix: Tensor<S>,
}

impl<S: Scalar> TokenIndex<S> {
    pub fn from_table(table: &EmbeddingTable<S>) -> Self {
        let tokens = table.sorted_tokens();
        let d = table.dim();
        let mut data = vec![S::zero(); (tokens.len() + 1) * d];
        let mut index = HashMap::with_capacity(tokens.len());
        for (i, token) in tokens.iter().enumerate() {
            let id = i + 1;
            index.insert(token.to_string(), id);
            data[id * d..(id + 1) * d].copy_from_slice(table.get(token).expect("token listed"));
        }
        let matrix = Tensor::from_vec(vec![tokens.len() + 1, d], data).expect("table shape");
        TokenIndex { index, matrix }
    }

    pub const PAD: usize = 0;

    /// Embedding matrix `[V+1, d]`, row 0 the padding zero vector.
    pub fn matrix(&self) -> &Tensor<S> {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.shape()[1]
    }

    pub fn id_of(&self, token: &str) -> usize {
        self.index.get(token).copied().unwrap_or(Self::PAD)
    }

    /// Pads or truncates a token sequence to exactly `title_len` ids;
    /// out-of-table tokens map to the padding id.
    pub fn encode_ids(&self, tokens: &[String], title_len: usize) -> Vec<usize> {
        let mut ids: Vec<usize> = tokens
            .iter()
            .take(title_len)
            .map(|t| self.id_of(t))
            .collect();
        ids.resize(title_len, Self::PAD);
        ids
    }

    /// Encodes tokenized titles to padded id rows.
    pub fn encode_titles<'t>(
        &self,
        titles: impl Iterator<Item = &'t str>,
        title_len: usize,
    ) -> Vec<Vec<usize>> {
        titles
            .map(|t| self.encode_ids(&tokenize(t), title_len))
            .collect()
    }
}

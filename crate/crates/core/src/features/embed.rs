//! Pretrained word-embedding tables and mean pooling.

use std::collections::HashMap;
use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::scalar::Scalar;

use super::FeatureError;

/// Token → dense vector lookup with a fixed width.
#[derive(Debug, Clone)]
pub struct EmbeddingTable<S> {
    vectors: HashMap<String, Vec<S>>,
    dim: usize,
}

impl<S: Scalar> EmbeddingTable<S> {
    pub fn new(vectors: HashMap<String, Vec<S>>, dim: usize) -> Self {
        debug_assert!(vectors.values().all(|v| v.len() == dim));
        EmbeddingTable { vectors, dim }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, token: &str) -> Option<&[S]> {
        self.vectors.get(token).map(|v| v.as_slice())
    }

    pub fn contains(&self, token: &str) -> bool {
        self.vectors.contains_key(token)
    }

    /// Tokens in sorted order, for deterministic id assignment downstream.
    pub fn sorted_tokens(&self) -> Vec<&str> {
        let mut tokens: Vec<&str> = self.vectors.keys().map(|k| k.as_str()).collect();
        tokens.sort_unstable();
        tokens
    }
}

/// Reads a plain-text vector file: a `count dim` header line, then one
/// `token v1 ... vdim` line per entry. A duplicate token keeps the last
/// occurrence and logs a warning.
pub fn load_embeddings<S: Scalar>(path: &Path) -> Result<EmbeddingTable<S>, FeatureError> {
    let file = std::fs::File::open(path)?;
    load_embeddings_reader(file)
}

pub fn load_embeddings_reader<S: Scalar, R: Read>(
    reader: R,
) -> Result<EmbeddingTable<S>, FeatureError> {
    let mut lines = BufReader::new(reader).lines();
    let header = lines
        .next()
        .ok_or_else(|| FeatureError::BadEmbeddingLine {
            line: 1,
            detail: "missing header".to_string(),
        })??;
    let mut parts = header.split_whitespace();
    let count: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| bad_header(&header))?;
    let dim: usize = parts
        .next()
        .and_then(|p| p.parse().ok())
        .ok_or_else(|| bad_header(&header))?;
    if parts.next().is_some() {
        return Err(bad_header(&header));
    }

    let mut vectors = HashMap::with_capacity(count);
    let mut read = 0usize;
    for (idx, line) in lines.enumerate() {
        let line_no = idx + 2;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        if read == count {
            return Err(FeatureError::BadEmbeddingLine {
                line: line_no,
                detail: format!("more than {count} entries"),
            });
        }
        let mut fields = line.split_whitespace();
        let token = fields
            .next()
            .ok_or_else(|| FeatureError::BadEmbeddingLine {
                line: line_no,
                detail: "empty line".to_string(),
            })?
            .to_string();
        let values: Vec<S> = fields
            .map(|f| {
                f.parse::<f64>()
                    .map(S::from_f64_lossy)
                    .map_err(|_| FeatureError::BadEmbeddingLine {
                        line: line_no,
                        detail: format!("bad value `{f}`"),
                    })
            })
            .collect::<Result<_, _>>()?;
        if values.len() != dim {
            return Err(FeatureError::BadEmbeddingLine {
                line: line_no,
                detail: format!("{} values, expected {dim}", values.len()),
            });
        }
        if vectors.insert(token.clone(), values).is_some() {
            log::warn!("duplicate embedding token `{token}` at line {line_no}; keeping last");
        }
        read += 1;
    }
    if read != count {
        return Err(FeatureError::BadEmbeddingLine {
            line: read + 1,
            detail: format!("{read} entries, header declared {count}"),
        });
    }
    Ok(EmbeddingTable::new(vectors, dim))
}

fn bad_header(header: &str) -> FeatureError {
    FeatureError::BadEmbeddingLine {
        line: 1,
        detail: format!("bad header `{header}`, expected `count dim`"),
    }
}

/// Mean of the vectors for in-table tokens, with the in-table fraction as
/// coverage. All-OOV (or empty) input yields the zero vector and coverage 0.
pub fn embed_mean<S: Scalar, T: AsRef<str>>(
    tokens: &[T],
    table: &EmbeddingTable<S>,
) -> (Vec<S>, S) {
    let mut sum = vec![S::zero(); table.dim()];
    let mut hits = 0usize;
    for token in tokens {
        if let Some(vector) = table.get(token.as_ref()) {
            hits += 1;
            for (s, v) in sum.iter_mut().zip(vector) {
                *s += *v;
            }
        }
    }
    if hits > 0 {
        let inv = S::one() / S::from_usize_lossy(hits);
        for s in &mut sum {
            *s *= inv;
        }
    }
    let coverage = if tokens.is_empty() {
        S::zero()
    } else {
        S::from_usize_lossy(hits) / S::from_usize_lossy(tokens.len())
    };
    (sum, coverage)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn table() -> EmbeddingTable<f64> {
        let mut vectors = HashMap::new();
        vectors.insert("t1".to_string(), vec![1.0, 0.0]);
        vectors.insert("t2".to_string(), vec![0.0, 1.0]);
        EmbeddingTable::new(vectors, 2)
    }

    #[test]
    fn mean_of_two_hits() {
        let (mean, coverage) = embed_mean(&["t1", "t2"], &table());
        assert_eq!(mean, vec![0.5, 0.5]);
        assert_eq!(coverage, 1.0);
    }

    #[test]
    fn partial_coverage() {
        let (mean, coverage) = embed_mean(&["t1", "zzz"], &table());
        assert_eq!(mean, vec![1.0, 0.0]);
        assert_eq!(coverage, 0.5);
    }

    #[test]
    fn empty_tokens_zero_vector() {
        let (mean, coverage) = embed_mean::<f64, &str>(&[], &table());
        assert_eq!(mean, vec![0.0, 0.0]);
        assert_eq!(coverage, 0.0);
    }

    #[test]
    fn loads_valid_file() {
        let data = "2 3\nfoo 1 2 3\nbar 0.5 -1 0\n";
        let table: EmbeddingTable<f64> = load_embeddings_reader(data.as_bytes()).unwrap();
        assert_eq!(table.len(), 2);
        assert_eq!(table.dim(), 3);
        assert_eq!(table.get("bar"), Some(&[0.5, -1.0, 0.0][..]));
    }

    #[test]
    fn width_mismatch_names_line() {
        let data = "2 3\nfoo 1 2 3\nbar 1 2\n";
        let err = load_embeddings_reader::<f64, _>(data.as_bytes()).unwrap_err();
        match err {
            FeatureError::BadEmbeddingLine { line, .. } => assert_eq!(line, 3),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn duplicate_token_keeps_last() {
        let data = "2 2\nfoo 1 1\nfoo 2 2\n";
        let table: EmbeddingTable<f64> = load_embeddings_reader(data.as_bytes()).unwrap();
        assert_eq!(table.len(), 1);
        assert_eq!(table.get("foo"), Some(&[2.0, 2.0][..]));
    }

    #[test]
    fn count_mismatch_errors() {
        let data = "3 2\nfoo 1 1\nbar 2 2\n";
        assert!(load_embeddings_reader::<f64, _>(data.as_bytes()).is_err());
    }
}

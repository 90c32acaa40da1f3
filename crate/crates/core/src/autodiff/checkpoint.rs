//! Parameter checkpoints: a JSON map of name → shape + values.

use std::collections::BTreeMap;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::scalar::Scalar;

use super::{GraphError, Tensor};

#[derive(Debug, Serialize, Deserialize)]
struct Entry {
    shape: Vec<usize>,
    values: Vec<f64>,
}

/// Writes named parameters as pretty JSON, keys sorted for stable bytes.
pub fn save_checkpoint<S: Scalar>(
    path: &Path,
    params: &[(&str, &Tensor<S>)],
) -> Result<(), GraphError> {
    let file = std::fs::File::create(path)?;
    write_checkpoint(file, params)
}

pub fn write_checkpoint<S: Scalar, W: Write>(
    writer: W,
    params: &[(&str, &Tensor<S>)],
) -> Result<(), GraphError> {
    let map: BTreeMap<&str, Entry> = params
        .iter()
        .map(|(name, tensor)| {
            let entry = Entry {
                shape: tensor.shape().to_vec(),
                values: tensor
                    .data()
                    .iter()
                    .map(|v| v.to_f64().expect("finite scalar"))
                    .collect(),
            };
            (*name, entry)
        })
        .collect();
    serde_json::to_writer_pretty(writer, &map)
        .map_err(|e| GraphError::Checkpoint(e.to_string()))
}

/// Reads a checkpoint back as name → tensor.
pub fn load_checkpoint<S: Scalar>(path: &Path) -> Result<BTreeMap<String, Tensor<S>>, GraphError> {
    let file = std::fs::File::open(path)?;
    read_checkpoint(file)
}

pub fn read_checkpoint<S: Scalar, R: Read>(
    reader: R,
) -> Result<BTreeMap<String, Tensor<S>>, GraphError> {
    let map: BTreeMap<String, Entry> =
        serde_json::from_reader(reader).map_err(|e| GraphError::Checkpoint(e.to_string()))?;
    map.into_iter()
        .map(|(name, entry)| {
            let values = entry.values.into_iter().map(S::from_f64_lossy).collect();
            Tensor::from_vec(entry.shape, values).map(|t| (name, t))
        })
        .collect()
}

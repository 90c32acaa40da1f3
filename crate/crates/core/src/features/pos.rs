//! Part-of-speech frequency features.
//!
//! Tags are consumed from a sidecar file (one space-separated tag line per
//! title); no tagger is bundled. [`identity_tags`] stands in for a tagger in
//! tests by letting each token tag itself.

use std::io::{BufRead, BufReader, Read};
use std::path::Path;

use crate::scalar::Scalar;

use super::FeatureError;

/// Normalized tag frequencies over an ordered tagset: count of each tag
/// divided by the total tag count. Empty input yields the zero vector;
/// a tag outside the tagset is an error.
pub fn pos_freq<S: Scalar, T: AsRef<str>>(
    tags: &[T],
    tagset: &[String],
) -> Result<Vec<S>, FeatureError> {
    let mut counts = vec![0usize; tagset.len()];
    for tag in tags {
        let tag = tag.as_ref();
        let pos = tagset
            .iter()
            .position(|t| t == tag)
            .ok_or_else(|| FeatureError::UnknownTag(tag.to_string()))?;
        counts[pos] += 1;
    }
    let total = tags.len();
    Ok(counts
        .into_iter()
        .map(|c| {
            if total == 0 {
                S::zero()
            } else {
                S::from_usize_lossy(c) / S::from_usize_lossy(total)
            }
        })
        .collect())
}

/// Reads a POS sidecar: one line per title, space-separated tags, aligned
/// with the corpus file by line number.
pub fn load_pos_sidecar(path: &Path) -> Result<Vec<Vec<String>>, FeatureError> {
    let file = std::fs::File::open(path)?;
    load_pos_sidecar_reader(file)
}

pub fn load_pos_sidecar_reader<R: Read>(reader: R) -> Result<Vec<Vec<String>>, FeatureError> {
    BufReader::new(reader)
        .lines()
        .map(|line| {
            Ok(line?
                .split_whitespace()
                .map(|t| t.to_string())
                .collect())
        })
        .collect()
}

/// Pass-through tagger: each token is its own tag.
pub fn identity_tags(tokens: &[String]) -> Vec<String> {
    tokens.to_vec()
}

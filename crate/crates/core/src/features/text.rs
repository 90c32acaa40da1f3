//! Tokenization, n-gram extraction, and punctuation counts.

use crate::corpus::default_punct;
use crate::scalar::Scalar;

use super::FeatureError;

/// Splits on Unicode whitespace with punctuation detached as standalone
/// tokens, using the default punctuation inventory.
pub fn tokenize(title: &str) -> Vec<String> {
    tokenize_with(title, &default_punct())
}

/// [`tokenize`] with an explicit punctuation inventory.
pub fn tokenize_with(title: &str, punct_list: &[char]) -> Vec<String> {
    let mut tokens = Vec::new();
    for chunk in title.split_whitespace() {
        let mut current = String::new();
        for c in chunk.chars() {
            if punct_list.contains(&c) {
                if !current.is_empty() {
                    tokens.push(std::mem::take(&mut current));
                }
                tokens.push(c.to_string());
            } else {
                current.push(c);
            }
        }
        if !current.is_empty() {
            tokens.push(current);
        }
    }
    tokens
}

/// All contiguous character n-grams of each length in `[n_lo, n_hi]`,
/// spaces included, grouped by length.
pub fn char_ngrams(title: &str, n_lo: usize, n_hi: usize) -> Result<Vec<String>, FeatureError> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(FeatureError::BadNgramRange { lo: n_lo, hi: n_hi });
    }
    let chars: Vec<char> = title.chars().collect();
    let mut grams = Vec::new();
    for n in n_lo..=n_hi {
        if chars.len() < n {
            continue;
        }
        for window in chars.windows(n) {
            grams.push(window.iter().collect());
        }
    }
    Ok(grams)
}

/// Token n-grams over the same range machinery; grams are joined with a
/// single space.
pub fn word_ngrams(tokens: &[String], n_lo: usize, n_hi: usize) -> Result<Vec<String>, FeatureError> {
    if n_lo < 1 || n_lo > n_hi {
        return Err(FeatureError::BadNgramRange { lo: n_lo, hi: n_hi });
    }
    let mut grams = Vec::new();
    for n in n_lo..=n_hi {
        if tokens.len() < n {
            continue;
        }
        for window in tokens.windows(n) {
            grams.push(window.join(" "));
        }
    }
    Ok(grams)
}

/// Per-mark counts over `punct_list` plus a trailing total column.
pub fn punct_features<S: Scalar>(title: &str, punct_list: &[char]) -> Vec<S> {
    let mut counts = vec![0usize; punct_list.len()];
    for c in title.chars() {
        if let Some(pos) = punct_list.iter().position(|p| *p == c) {
            counts[pos] += 1;
        }
    }
    let total: usize = counts.iter().sum();
    counts
        .into_iter()
        .chain(std::iter::once(total))
        .map(S::from_usize_lossy)
        .collect()
}

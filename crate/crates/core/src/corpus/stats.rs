//! Per-class summary statistics of a labeled corpus.

use std::io::Write;

use super::{Corpus, CorpusError};

/// Title statistics for one class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassStats {
    pub label: u8,
    pub count: usize,
    /// Mean title length in characters.
    pub avg_chars: f64,
    /// Mean whitespace-token count per title.
    pub avg_words: f64,
    /// Mean characters per whitespace token, over all tokens of the class.
    pub avg_word_length: f64,
    /// Mean punctuation-character count per title.
    pub avg_punct: f64,
}

/// Statistics for every class present, ordered by label.
#[derive(Debug, Clone, PartialEq)]
pub struct CorpusStats {
    pub classes: Vec<ClassStats>,
}

/// Computes per-class title statistics. Errors on an empty corpus.
pub fn corpus_stats(corpus: &Corpus, punct_list: &[char]) -> Result<CorpusStats, CorpusError> {
    if corpus.is_empty() {
        return Err(CorpusError::Empty);
    }
    let labels = corpus.labels()?;
    let mut present: Vec<u8> = labels.clone();
    present.sort_unstable();
    present.dedup();

    let mut classes = Vec::new();
    for label in present {
        let titles: Vec<&str> = corpus
            .articles
            .iter()
            .filter(|a| a.label == Some(label))
            .map(|a| a.title.as_str())
            .collect();
        let count = titles.len();
        let mut chars = 0usize;
        let mut words = 0usize;
        let mut word_chars = 0usize;
        let mut punct = 0usize;
        for title in &titles {
            chars += title.chars().count();
            for tok in title.split_whitespace() {
                words += 1;
                word_chars += tok.chars().count();
            }
            punct += title.chars().filter(|c| punct_list.contains(c)).count();
        }
        classes.push(ClassStats {
            label,
            count,
            avg_chars: chars as f64 / count as f64,
            avg_words: words as f64 / count as f64,
            avg_word_length: if words == 0 {
                0.0
            } else {
                word_chars as f64 / words as f64
            },
            avg_punct: punct as f64 / count as f64,
        });
    }
    Ok(CorpusStats { classes })
}

/// Writes the stats as CSV with header
/// `class,avg_chars,avg_words,avg_word_length,avg_punct`.
pub fn write_stats_csv<W: Write>(stats: &CorpusStats, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "class,avg_chars,avg_words,avg_word_length,avg_punct")?;
    for c in &stats.classes {
        writeln!(
            writer,
            "{},{},{},{},{}",
            c.label, c.avg_chars, c.avg_words, c.avg_word_length, c.avg_punct
        )?;
    }
    Ok(())
}

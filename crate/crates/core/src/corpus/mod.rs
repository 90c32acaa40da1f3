//! Article data model, JSONL serialization, and duplicate control.
//!
//! A [`Corpus`] is an ordered collection of [`Article`]s, either fully
//! labeled (binary clickbait labels) or an unlabeled pool. The on-disk
//! format is JSON-lines with one article object per line.

mod distance;
mod normalize;
mod split;
mod stats;

pub use distance::{curate_test_split, levenshtein, title_similarity};
pub use normalize::{default_punct, normalize_text};
pub use split::{stratified_split, SplitSpec};
pub use stats::{corpus_stats, write_stats_csv, ClassStats, CorpusStats};

use std::collections::HashSet;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};
use thiserror::Error;

/// Errors from corpus construction, I/O, and curation.
#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("malformed line {line}: {source}")]
    MalformedLine {
        line: usize,
        source: serde_json::Error,
    },
    #[error("invalid label at line {line}: expected 0 or 1, got {found}")]
    InvalidLabel { line: usize, found: String },
    #[error("missing label at line {line} in labeled corpus")]
    MissingLabel { line: usize },
    #[error("duplicate article id `{id}`")]
    DuplicateId { id: String },
    #[error("empty title after normalization for article `{id}`")]
    EmptyTitle { id: String },
    #[error("similarity threshold {0} outside (0, 1]")]
    BadThreshold(f64),
    #[error("corpus is not labeled")]
    NotLabeled,
    #[error("empty corpus")]
    Empty,
    #[error("class {label} has {count} members, need at least {need}")]
    ClassTooSmall {
        label: u8,
        count: usize,
        need: usize,
    },
    #[error("split fractions must be positive and sum to 1 exactly")]
    BadFractions,
}

/// One news item. `label` is `Some(0)` for non-clickbait, `Some(1)` for
/// clickbait, and `None` for articles in the unlabeled pool.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Article {
    pub id: String,
    pub domain: String,
    pub date: String,
    pub title: String,
    pub content: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<u8>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub category: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translated_title: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub translated_content: Option<String>,
}

/// Whether a corpus carries labels on every article.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusKind {
    Labeled,
    Unlabeled,
}

/// Ordered article collection.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Corpus {
    pub articles: Vec<Article>,
    pub kind: CorpusKind,
}

impl Corpus {
    pub fn new(articles: Vec<Article>, kind: CorpusKind) -> Self {
        Corpus { articles, kind }
    }

    pub fn len(&self) -> usize {
        self.articles.len()
    }

    pub fn is_empty(&self) -> bool {
        self.articles.is_empty()
    }

    /// Titles in corpus order.
    pub fn titles(&self) -> impl Iterator<Item = &str> {
        self.articles.iter().map(|a| a.title.as_str())
    }

    /// Labels in corpus order. Errors unless every article is labeled.
    pub fn labels(&self) -> Result<Vec<u8>, CorpusError> {
        self.articles
            .iter()
            .map(|a| a.label.ok_or(CorpusError::NotLabeled))
            .collect()
    }
}

/// Reads a JSONL corpus: one article object per line, UTF-8.
///
/// Under [`CorpusKind::Labeled`], every line must carry a label in `{0, 1}`;
/// a missing or out-of-range label is an error naming the line.
pub fn load_jsonl(path: &Path, kind: CorpusKind) -> Result<Corpus, CorpusError> {
    let file = File::open(path)?;
    let reader = BufReader::new(file);
    let mut articles = Vec::new();
    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        // Labels outside {0,1} must be reported as label errors, not serde
        // range errors, so probe the raw value first.
        let raw: serde_json::Value = serde_json::from_str(&line)
            .map_err(|source| CorpusError::MalformedLine { line: line_no, source })?;
        if let Some(label) = raw.get("label") {
            if !label.is_null() {
                let ok = label.as_u64().map(|v| v <= 1).unwrap_or(false);
                if !ok {
                    return Err(CorpusError::InvalidLabel {
                        line: line_no,
                        found: label.to_string(),
                    });
                }
            }
        }
        let article: Article = serde_json::from_value(raw)
            .map_err(|source| CorpusError::MalformedLine { line: line_no, source })?;
        if kind == CorpusKind::Labeled && article.label.is_none() {
            return Err(CorpusError::MissingLabel { line: line_no });
        }
        articles.push(article);
    }
    Ok(Corpus::new(articles, kind))
}

/// Writes a corpus as JSONL with the exact `Article` field names; optional
/// fields are omitted when absent.
pub fn save_jsonl(corpus: &Corpus, path: &Path) -> Result<(), CorpusError> {
    let file = File::create(path)?;
    let mut writer = BufWriter::new(file);
    for article in &corpus.articles {
        let line = serde_json::to_string(article)
            .map_err(|source| CorpusError::MalformedLine { line: 0, source })?;
        writeln!(writer, "{line}")?;
    }
    writer.flush()?;
    Ok(())
}

/// Removes exact duplicates, keeping the first occurrence of each
/// (normalized title, normalized content) pair. Order is preserved.
///
/// Normalization uses [`default_punct`]; articles whose titles differ only
/// by mid-word punctuation or markup collapse to the same key.
pub fn dedup_exact(corpus: &Corpus) -> Corpus {
    let punct = default_punct();
    let mut seen = HashSet::new();
    let articles = corpus
        .articles
        .iter()
        .filter(|a| {
            let key = (
                normalize_text(&a.title, &punct),
                normalize_text(&a.content, &punct),
            );
            seen.insert(key)
        })
        .cloned()
        .collect();
    Corpus::new(articles, corpus.kind)
}

#[cfg(test)]
pub(crate) fn article(id: &str, title: &str, label: Option<u8>) -> Article {
    Article {
        id: id.to_string(),
        domain: "example.com".to_string(),
        date: "2021-05-25".to_string(),
        title: title.to_string(),
        content: format!("content of {id}"),
        label,
        category: None,
        translated_title: None,
        translated_content: None,
    }
}

//! TF-IDF fitting and transformation.
//!
//! Smoothed idf with a +1 offset: `idf(t) = ln((1 + N) / (1 + df_t)) + 1`.
//! Transform multiplies raw term counts by idf and L2-normalizes the row.

use std::collections::HashMap;

use crate::scalar::Scalar;

use super::{FeatureError, SparseVector};

/// Fitted term vocabulary with document frequencies and idf weights.
#[derive(Debug, Clone, PartialEq)]
pub struct Vocabulary<S> {
    index: HashMap<String, usize>,
    terms: Vec<String>,
    document_frequency: Vec<usize>,
    idf: Vec<S>,
    n_docs: usize,
}

impl<S: Scalar> Vocabulary<S> {
    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn n_docs(&self) -> usize {
        self.n_docs
    }

    pub fn index_of(&self, term: &str) -> Option<usize> {
        self.index.get(term).copied()
    }

    pub fn idf(&self, term: &str) -> Option<S> {
        self.index_of(term).map(|i| self.idf[i])
    }

    pub fn df(&self, term: &str) -> Option<usize> {
        self.index_of(term).map(|i| self.document_frequency[i])
    }
}

/// Fits a vocabulary over term sequences, keeping terms with
/// `df >= min_df`. Indices are assigned in lexicographic term order so the
/// fit is independent of hash iteration order.
pub fn fit_tfidf<S: Scalar>(
    docs: &[Vec<String>],
    min_df: usize,
) -> Result<Vocabulary<S>, FeatureError> {
    if docs.is_empty() {
        return Err(FeatureError::EmptyCorpus);
    }
    let mut df: HashMap<&str, usize> = HashMap::new();
    for doc in docs {
        let mut seen: Vec<&str> = doc.iter().map(|t| t.as_str()).collect();
        seen.sort_unstable();
        seen.dedup();
        for term in seen {
            *df.entry(term).or_insert(0) += 1;
        }
    }
    let mut terms: Vec<(&str, usize)> = df
        .into_iter()
        .filter(|(_, count)| *count >= min_df.max(1))
        .collect();
    terms.sort_unstable_by(|a, b| a.0.cmp(b.0));

    let n_docs = docs.len();
    let n = S::from_usize_lossy(n_docs);
    let mut index = HashMap::with_capacity(terms.len());
    let mut term_list = Vec::with_capacity(terms.len());
    let mut document_frequency = Vec::with_capacity(terms.len());
    let mut idf = Vec::with_capacity(terms.len());
    for (i, (term, count)) in terms.into_iter().enumerate() {
        index.insert(term.to_string(), i);
        term_list.push(term.to_string());
        document_frequency.push(count);
        let df_s = S::from_usize_lossy(count);
        idf.push(((n + S::one()) / (df_s + S::one())).ln() + S::one());
    }
    Ok(Vocabulary {
        index,
        terms: term_list,
        document_frequency,
        idf,
        n_docs,
    })
}

/// Transforms one term sequence. Out-of-vocabulary terms are ignored; a doc
/// with no in-vocabulary terms maps to the zero vector, detectable via
/// [`SparseVector::is_zero`].
pub fn transform_tfidf<S: Scalar>(doc: &[String], vocab: &Vocabulary<S>) -> SparseVector<S> {
    let mut counts: HashMap<usize, usize> = HashMap::new();
    for term in doc {
        if let Some(i) = vocab.index_of(term) {
            *counts.entry(i).or_insert(0) += 1;
        }
    }
    let pairs: Vec<(usize, S)> = counts
        .into_iter()
        .map(|(i, c)| (i, S::from_usize_lossy(c) * vocab.idf[i]))
        .collect();
    let mut vector =
        SparseVector::new(pairs, vocab.len()).expect("vocabulary indices are in range");
    let norm = vector.l2_norm();
    if norm > S::zero() {
        vector.scale(S::one() / norm);
    }
    vector
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doc(terms: &[&str]) -> Vec<String> {
        terms.iter().map(|t| t.to_string()).collect()
    }

    #[test]
    fn single_doc_idf_is_one() {
        let vocab: Vocabulary<f64> = fit_tfidf(&[doc(&["a", "b"])], 1).unwrap();
        assert_eq!(vocab.len(), 2);
        assert_eq!(vocab.idf("a"), Some(1.0));
        assert_eq!(vocab.idf("b"), Some(1.0));
    }

    #[test]
    fn term_in_all_docs_has_idf_one() {
        let docs = vec![doc(&["a", "b"]), doc(&["a"]), doc(&["a", "c"])];
        let vocab: Vocabulary<f64> = fit_tfidf(&docs, 1).unwrap();
        assert_eq!(vocab.idf("a"), Some(1.0));
    }

    #[test]
    fn rare_term_idf_formula() {
        let docs = vec![doc(&["a", "b"]), doc(&["a"]), doc(&["a"])];
        let vocab: Vocabulary<f64> = fit_tfidf(&docs, 1).unwrap();
        let idf_b = vocab.idf("b").unwrap();
        assert!((idf_b - (1.0 + (2.0f64).ln())).abs() < 1e-15);
        assert_eq!(vocab.df("b"), Some(1));
    }

    #[test]
    fn min_df_prunes() {
        let docs = vec![doc(&["a", "b"]), doc(&["a"])];
        let vocab: Vocabulary<f64> = fit_tfidf(&docs, 2).unwrap();
        assert_eq!(vocab.len(), 1);
        assert!(vocab.index_of("b").is_none());
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(matches!(
            fit_tfidf::<f64>(&[], 1),
            Err(FeatureError::EmptyCorpus)
        ));
    }

    #[test]
    fn single_term_doc_is_unit_vector() {
        let vocab: Vocabulary<f64> = fit_tfidf(&[doc(&["a", "b"]), doc(&["b"])], 1).unwrap();
        let v = transform_tfidf(&doc(&["a"]), &vocab);
        assert_eq!(v.nnz(), 1);
        assert!((v.l2_norm() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn all_oov_doc_is_flagged_zero() {
        let vocab: Vocabulary<f64> = fit_tfidf(&[doc(&["a"])], 1).unwrap();
        let v = transform_tfidf(&doc(&["zzz"]), &vocab);
        assert!(v.is_zero());
        assert_eq!(v.dim(), 1);
    }

    #[test]
    fn weighted_counts_hand_check() {
        // idf(a) = 1 requires a in all docs; idf(b) = 1 + ln 2 requires b in
        // 1 of 3 docs.
        let docs = vec![doc(&["a", "b"]), doc(&["a"]), doc(&["a"])];
        let vocab: Vocabulary<f64> = fit_tfidf(&docs, 1).unwrap();
        let v = transform_tfidf(&doc(&["a", "a", "b"]), &vocab);
        let wa = 2.0 * 1.0;
        let wb = 1.0 + (2.0f64).ln();
        let norm = (wa * wa + wb * wb).sqrt();
        let ia = vocab.index_of("a").unwrap();
        let ib = vocab.index_of("b").unwrap();
        assert!((v.get(ia) - wa / norm).abs() < 1e-15);
        assert!((v.get(ib) - wb / norm).abs() < 1e-15);
    }
}

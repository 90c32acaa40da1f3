//! Property tests for feature extraction.

use std::collections::HashMap;

use proptest::prelude::*;

use baitline::features::{
    char_ngrams, embed_mean, fit_tfidf, pos_freq, tokenize, transform_tfidf, EmbeddingTable,
};

proptest! {
    #[test]
    fn char_ngram_count_formula(
        text in "\\PC{0,24}",
        lo in 1usize..4,
        extra in 0usize..3,
    ) {
        let hi = lo + extra;
        let len = text.chars().count();
        let expected: usize = (lo..=hi)
            .map(|n| if len >= n { len - n + 1 } else { 0 })
            .sum();
        prop_assert_eq!(char_ngrams(&text, lo, hi).unwrap().len(), expected);
    }

    #[test]
    fn tfidf_rows_are_unit_or_flagged_zero(
        docs in prop::collection::vec(
            prop::collection::vec("[a-e]{1,3}", 0..8),
            1..10
        ),
    ) {
        let docs: Vec<Vec<String>> = docs;
        let vocab = fit_tfidf::<f64>(&docs, 1).unwrap();
        for doc in &docs {
            let v = transform_tfidf(doc, &vocab);
            if v.is_zero() {
                prop_assert!(doc.is_empty());
            } else {
                prop_assert!((v.l2_norm() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn fitting_corpus_never_transforms_to_oov(
        docs in prop::collection::vec(
            prop::collection::vec("[a-e]{1,3}", 1..8),
            1..10
        ),
    ) {
        let docs: Vec<Vec<String>> = docs;
        let vocab = fit_tfidf::<f64>(&docs, 1).unwrap();
        for doc in &docs {
            prop_assert!(!transform_tfidf(doc, &vocab).is_zero());
        }
    }

    #[test]
    fn embed_mean_is_token_order_invariant(
        tokens in prop::collection::vec("[a-d]", 1..12),
        perm_seed in 0usize..1000,
    ) {
        let mut vectors = HashMap::new();
        for (i, t) in ["a", "b", "c"].iter().enumerate() {
            vectors.insert(t.to_string(), vec![i as f64, 1.0 - i as f64]);
        }
        let table = EmbeddingTable::new(vectors, 2);
        let (mean, coverage) = embed_mean(&tokens, &table);

        let mut shuffled = tokens.clone();
        // Deterministic pseudo-shuffle driven by the seed.
        let n = shuffled.len();
        for i in 0..n {
            let j = (perm_seed + i * 7) % n;
            shuffled.swap(i, j);
        }
        let (mean2, coverage2) = embed_mean(&shuffled, &table);
        prop_assert_eq!(coverage, coverage2);
        for (x, y) in mean.iter().zip(&mean2) {
            prop_assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn pos_freq_sums_to_one_for_nonempty(
        tags in prop::collection::vec(0usize..3, 1..15),
    ) {
        let tagset: Vec<String> = ["N", "V", "ADJ"].iter().map(|s| s.to_string()).collect();
        let tags: Vec<String> = tags.iter().map(|&i| tagset[i].clone()).collect();
        let freq: Vec<f64> = pos_freq(&tags, &tagset).unwrap();
        let sum: f64 = freq.iter().sum();
        prop_assert!((sum - 1.0).abs() < 1e-12);
        prop_assert!(freq.iter().all(|f| *f >= 0.0));
    }

    #[test]
    fn tokenize_loses_no_non_punct_characters(title in "[a-z !?.]{0,30}") {
        let tokens = tokenize(&title);
        let rejoined: String = tokens.concat();
        let expected: String = title.chars().filter(|c| !c.is_whitespace()).collect();
        prop_assert_eq!(rejoined, expected);
    }
}

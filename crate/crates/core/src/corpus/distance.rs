//! Edit distance and near-duplicate test curation.

use super::{Corpus, CorpusError};

/// Levenshtein distance with unit insert/delete/substitute costs, over
/// Unicode scalar values.
pub fn levenshtein(a: &str, b: &str) -> usize {
    let a: Vec<char> = a.chars().collect();
    let b: Vec<char> = b.chars().collect();
    if a.is_empty() {
        return b.len();
    }
    if b.is_empty() {
        return a.len();
    }
    // Two-row DP over the shorter string.
    let (short, long) = if a.len() <= b.len() { (&a, &b) } else { (&b, &a) };
    let mut prev: Vec<usize> = (0..=short.len()).collect();
    let mut curr = vec![0usize; short.len() + 1];
    for (i, lc) in long.iter().enumerate() {
        curr[0] = i + 1;
        for (j, sc) in short.iter().enumerate() {
            let sub = prev[j] + usize::from(lc != sc);
            curr[j + 1] = sub.min(prev[j + 1] + 1).min(curr[j] + 1);
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    prev[short.len()]
}

/// Normalized similarity `1 - dist / max(len_a, len_b)` in `[0, 1]`.
/// Two empty strings are identical (similarity 1).
pub fn title_similarity(a: &str, b: &str) -> f64 {
    let la = a.chars().count();
    let lb = b.chars().count();
    let max_len = la.max(lb);
    if max_len == 0 {
        return 1.0;
    }
    1.0 - levenshtein(a, b) as f64 / max_len as f64
}

/// Drops every test article whose title similarity against any training
/// title reaches `sim_threshold`. Order of the survivors is preserved.
pub fn curate_test_split(
    train: &Corpus,
    test: &Corpus,
    sim_threshold: f64,
) -> Result<Corpus, CorpusError> {
    if !(sim_threshold > 0.0 && sim_threshold <= 1.0) {
        return Err(CorpusError::BadThreshold(sim_threshold));
    }
    let train_titles: Vec<&str> = train.titles().collect();
    let articles = test
        .articles
        .iter()
        .filter(|a| {
            !train_titles
                .iter()
                .any(|t| title_similarity(&a.title, t) >= sim_threshold)
        })
        .cloned()
        .collect();
    Ok(Corpus::new(articles, test.kind))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{article, CorpusKind};

    #[test]
    fn identity_and_insertion_bounds() {
        assert_eq!(levenshtein("abc", "abc"), 0);
        assert_eq!(levenshtein("", "abc"), 3);
        assert_eq!(levenshtein("abc", ""), 3);
    }

    #[test]
    fn kitten_sitting() {
        assert_eq!(levenshtein("kitten", "sitting"), 3);
    }

    #[test]
    fn counts_scalar_values_not_bytes() {
        assert_eq!(levenshtein("ভাইরাল", "ভাইরাস"), 1);
    }

    #[test]
    fn identical_title_removed_at_point_eight() {
        let train = Corpus::new(vec![article("t1", "exact title", Some(0))], CorpusKind::Labeled);
        let test = Corpus::new(
            vec![
                article("x1", "exact title", Some(1)),
                article("x2", "something else entirely different", Some(0)),
            ],
            CorpusKind::Labeled,
        );
        let curated = curate_test_split(&train, &test, 0.8).unwrap();
        assert_eq!(curated.len(), 1);
        assert_eq!(curated.articles[0].id, "x2");
    }

    #[test]
    fn near_duplicate_removed_at_point_nine() {
        // similarity 13/14 ≈ 0.93
        let train = Corpus::new(
            vec![article("t1", "aaaa-bbbb-cccd", Some(0))],
            CorpusKind::Labeled,
        );
        let test = Corpus::new(
            vec![article("x1", "aaaa-bbbb-cccc", Some(1))],
            CorpusKind::Labeled,
        );
        assert!(title_similarity("aaaa-bbbb-cccc", "aaaa-bbbb-cccd") >= 0.9);
        let curated = curate_test_split(&train, &test, 0.9).unwrap();
        assert!(curated.is_empty());
    }

    #[test]
    fn disjoint_titles_all_retained() {
        let train = Corpus::new(
            vec![article("t1", &"x".repeat(40), Some(0))],
            CorpusKind::Labeled,
        );
        let test = Corpus::new(
            vec![article("x1", &"y".repeat(40), Some(1))],
            CorpusKind::Labeled,
        );
        let curated = curate_test_split(&train, &test, 0.8).unwrap();
        assert_eq!(curated.len(), 1);
    }

    #[test]
    fn threshold_out_of_range_errors() {
        let c = Corpus::new(vec![], CorpusKind::Labeled);
        assert!(curate_test_split(&c, &c, 0.0).is_err());
        assert!(curate_test_split(&c, &c, 1.5).is_err());
        assert!(curate_test_split(&c, &c, 1.0).is_ok());
    }
}

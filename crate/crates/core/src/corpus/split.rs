//! Stratified train/validation/test splitting.

use rand::seq::SliceRandom;

use super::{Corpus, CorpusError};
use crate::rng::{self, Component};

/// Split fractions held as exact rationals over a common denominator, so
/// "sum to 1" is checked without floating-point slack.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SplitSpec {
    /// Numerators for (train, valid, test).
    parts: [u64; 3],
    /// Common denominator; numerators sum to exactly this.
    denom: u64,
    pub seed: u64,
}

impl SplitSpec {
    /// Builds a spec from integer proportions, e.g. `(70, 10, 20)` for a
    /// 70:10:20 split. All parts must be positive.
    pub fn from_parts(train: u64, valid: u64, test: u64, seed: u64) -> Result<Self, CorpusError> {
        if train == 0 || valid == 0 || test == 0 {
            return Err(CorpusError::BadFractions);
        }
        Ok(SplitSpec {
            parts: [train, valid, test],
            denom: train + valid + test,
            seed,
        })
    }

    /// Parses `"70:10:20"`-style ratio strings.
    pub fn parse_ratio(ratio: &str, seed: u64) -> Result<Self, CorpusError> {
        let nums: Vec<u64> = ratio
            .split(':')
            .map(|p| p.trim().parse::<u64>().map_err(|_| CorpusError::BadFractions))
            .collect::<Result<_, _>>()?;
        if nums.len() != 3 {
            return Err(CorpusError::BadFractions);
        }
        Self::from_parts(nums[0], nums[1], nums[2], seed)
    }

    /// Fraction of split `i` as a float, for reporting.
    pub fn fraction(&self, i: usize) -> f64 {
        self.parts[i] as f64 / self.denom as f64
    }

    /// Largest-remainder apportionment of `n` items into the three splits.
    /// Each count differs from `fraction * n` by strictly less than 1.
    fn apportion(&self, n: u64) -> [usize; 3] {
        let mut counts = [0usize; 3];
        let mut remainders: Vec<(usize, u64)> = Vec::with_capacity(3);
        let mut assigned = 0u64;
        for i in 0..3 {
            let exact_num = self.parts[i] * n; // fraction_i * n == exact_num / denom
            counts[i] = (exact_num / self.denom) as usize;
            assigned += exact_num / self.denom;
            remainders.push((i, exact_num % self.denom));
        }
        let mut leftover = n - assigned;
        // Ties broken by split order (train, valid, test).
        remainders.sort_by(|a, b| b.1.cmp(&a.1).then(a.0.cmp(&b.0)));
        for (i, _) in remainders {
            if leftover == 0 {
                break;
            }
            counts[i] += 1;
            leftover -= 1;
        }
        counts
    }
}

/// Splits a labeled corpus into (train, valid, test) preserving class
/// proportions: within each class the split counts differ from
/// `fraction * class_count` by less than one item.
///
/// Assignment draws a seeded per-class shuffle; within each split the
/// original corpus order is restored. Deterministic for a fixed seed.
pub fn stratified_split(
    corpus: &Corpus,
    spec: &SplitSpec,
) -> Result<(Corpus, Corpus, Corpus), CorpusError> {
    let labels = corpus.labels()?;
    let mut by_class: Vec<(u8, Vec<usize>)> = Vec::new();
    for (idx, &label) in labels.iter().enumerate() {
        match by_class.iter_mut().find(|(l, _)| *l == label) {
            Some((_, v)) => v.push(idx),
            None => by_class.push((label, vec![idx])),
        }
    }
    by_class.sort_by_key(|(l, _)| *l);

    for (label, members) in &by_class {
        if members.len() < 3 {
            return Err(CorpusError::ClassTooSmall {
                label: *label,
                count: members.len(),
                need: 3,
            });
        }
    }

    let mut rng = rng::stream(spec.seed, Component::Split);
    let mut split_indices: [Vec<usize>; 3] = [Vec::new(), Vec::new(), Vec::new()];
    for (_, members) in &by_class {
        let mut shuffled = members.clone();
        shuffled.shuffle(&mut rng);
        let counts = spec.apportion(shuffled.len() as u64);
        let mut offset = 0;
        for (i, &count) in counts.iter().enumerate() {
            split_indices[i].extend(&shuffled[offset..offset + count]);
            offset += count;
        }
    }

    let mut out = Vec::with_capacity(3);
    for indices in split_indices.iter_mut() {
        indices.sort_unstable();
        let articles = indices.iter().map(|&i| corpus.articles[i].clone()).collect();
        out.push(Corpus::new(articles, corpus.kind));
    }
    let test = out.pop().unwrap();
    let valid = out.pop().unwrap();
    let train = out.pop().unwrap();
    Ok((train, valid, test))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{article, CorpusKind};

    fn corpus_of(n0: usize, n1: usize) -> Corpus {
        let mut articles = Vec::new();
        for i in 0..n0 {
            articles.push(article(&format!("n{i}"), &format!("neg title {i}"), Some(0)));
        }
        for i in 0..n1 {
            articles.push(article(&format!("p{i}"), &format!("pos title {i}"), Some(1)));
        }
        Corpus::new(articles, CorpusKind::Labeled)
    }

    fn class_count(c: &Corpus, label: u8) -> usize {
        c.articles.iter().filter(|a| a.label == Some(label)).count()
    }

    #[test]
    fn exact_divisibility_gives_exact_counts() {
        let corpus = corpus_of(100, 100);
        let spec = SplitSpec::from_parts(70, 10, 20, 3).unwrap();
        let (train, valid, test) = stratified_split(&corpus, &spec).unwrap();
        for label in [0u8, 1u8] {
            assert_eq!(class_count(&train, label), 70);
            assert_eq!(class_count(&valid, label), 10);
            assert_eq!(class_count(&test, label), 20);
        }
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let corpus = corpus_of(31, 17);
        let spec = SplitSpec::from_parts(70, 10, 20, 9).unwrap();
        let a = stratified_split(&corpus, &spec).unwrap();
        let b = stratified_split(&corpus, &spec).unwrap();
        assert_eq!(a, b);
        let other = SplitSpec::from_parts(70, 10, 20, 10).unwrap();
        let c = stratified_split(&corpus, &other).unwrap();
        assert_ne!(a.0, c.0);
    }

    #[test]
    fn table_scale_counts_within_one() {
        // 5,239 + 9,817 at 70:10:20 lands within one item per class.
        let spec = SplitSpec::from_parts(70, 10, 20, 1).unwrap();
        for &n in &[5239u64, 9817u64] {
            let counts = spec.apportion(n);
            let total: usize = counts.iter().sum();
            assert_eq!(total as u64, n);
            for (i, &c) in counts.iter().enumerate() {
                let exact = spec.fraction(i) * n as f64;
                assert!((c as f64 - exact).abs() < 1.0, "split {i}: {c} vs {exact}");
            }
        }
    }

    #[test]
    fn class_below_split_count_errors() {
        let corpus = corpus_of(2, 50);
        let spec = SplitSpec::from_parts(70, 10, 20, 1).unwrap();
        assert!(matches!(
            stratified_split(&corpus, &spec),
            Err(CorpusError::ClassTooSmall { label: 0, count: 2, .. })
        ));
    }

    #[test]
    fn parse_ratio_accepts_standard_form() {
        let spec = SplitSpec::parse_ratio("70:10:20", 5).unwrap();
        assert_eq!(spec, SplitSpec::from_parts(70, 10, 20, 5).unwrap());
        assert!(SplitSpec::parse_ratio("70:30", 5).is_err());
        assert!(SplitSpec::parse_ratio("70:0:30", 5).is_err());
    }
}

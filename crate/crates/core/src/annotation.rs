//! Multi-annotator label aggregation and agreement.
//!
//! Ratings arrive as an items × annotators matrix of categorical codes.
//! [`majority_vote`] picks the strictly most frequent category per item and
//! [`fleiss_kappa`] quantifies chance-corrected agreement.
//!
//! The kappa computation is generic over any field-like numeric type: the
//! pipeline runs it at `f64`, while tests can instantiate an exact rational
//! type to check the fixture values without rounding.

use std::io::Read;
use std::path::Path;

use num_traits::{FromPrimitive, Num};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum AnnotationError {
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("annotation matrix needs at least 1 item and 2 annotators, got {items}x{annotators}")]
    BadShape { items: usize, annotators: usize },
    #[error("ragged matrix: row {row} has {got} ratings, expected {expected}")]
    Ragged {
        row: usize,
        got: usize,
        expected: usize,
    },
    #[error("rating {value} at item {row} outside categories 0..{k}")]
    OutOfRange { row: usize, value: u32, k: u32 },
    #[error("majority vote tie on items {0:?}")]
    Tie(Vec<usize>),
    #[error("degenerate marginal: expected agreement is 1 but observed is not")]
    DegenerateMarginal,
}

/// Items × annotators categorical ratings with `k` categories.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct AnnotationMatrix {
    ratings: Vec<Vec<u32>>,
    k: u32,
}

impl AnnotationMatrix {
    /// Validates shape (rectangular, ≥ 1 item, ≥ 2 annotators) and range
    /// (every rating in `0..k`).
    pub fn new(ratings: Vec<Vec<u32>>, k: u32) -> Result<Self, AnnotationError> {
        let items = ratings.len();
        let annotators = ratings.first().map(|r| r.len()).unwrap_or(0);
        if items == 0 || annotators < 2 {
            return Err(AnnotationError::BadShape { items, annotators });
        }
        for (row, r) in ratings.iter().enumerate() {
            if r.len() != annotators {
                return Err(AnnotationError::Ragged {
                    row,
                    got: r.len(),
                    expected: annotators,
                });
            }
            if let Some(&value) = r.iter().find(|&&v| v >= k) {
                return Err(AnnotationError::OutOfRange { row, value, k });
            }
        }
        Ok(AnnotationMatrix { ratings, k })
    }

    /// Reads a CSV of one row per item, one column per annotator. `k` is
    /// inferred as `max rating + 1`.
    pub fn from_csv_reader<R: Read>(reader: R, has_header: bool) -> Result<Self, AnnotationError> {
        let mut rdr = csv::ReaderBuilder::new()
            .has_headers(has_header)
            .flexible(true)
            .from_reader(reader);
        let mut ratings = Vec::new();
        for record in rdr.records() {
            let record = record?;
            let row: Vec<u32> = record
                .iter()
                .map(|f| {
                    f.trim().parse::<u32>().map_err(|_| AnnotationError::OutOfRange {
                        row: ratings.len(),
                        value: u32::MAX,
                        k: 0,
                    })
                })
                .collect::<Result<_, _>>()?;
            ratings.push(row);
        }
        let k = ratings
            .iter()
            .flat_map(|r| r.iter())
            .max()
            .map(|&m| m + 1)
            .unwrap_or(0)
            .max(2);
        AnnotationMatrix::new(ratings, k)
    }

    pub fn from_csv_path(path: &Path, has_header: bool) -> Result<Self, AnnotationError> {
        let file = std::fs::File::open(path)?;
        Self::from_csv_reader(file, has_header)
    }

    pub fn n_items(&self) -> usize {
        self.ratings.len()
    }

    pub fn n_annotators(&self) -> usize {
        self.ratings[0].len()
    }

    pub fn categories(&self) -> u32 {
        self.k
    }

    /// Per-item counts over categories.
    fn item_counts(&self) -> Vec<Vec<usize>> {
        self.ratings
            .iter()
            .map(|row| {
                let mut counts = vec![0usize; self.k as usize];
                for &r in row {
                    counts[r as usize] += 1;
                }
                counts
            })
            .collect()
    }
}

/// Agreement summary: `kappa = (p_bar - p_e) / (1 - p_e)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KappaResult<T> {
    pub kappa: T,
    /// Mean per-item observed agreement.
    pub p_bar: T,
    /// Expected agreement by chance from the category marginals.
    pub p_e: T,
}

/// Per-item strict majority category. A tie on any item is an error listing
/// every tied item index; with three annotators and two categories ties
/// cannot occur, so a tie signals malformed input.
pub fn majority_vote(matrix: &AnnotationMatrix) -> Result<Vec<u32>, AnnotationError> {
    let mut labels = Vec::with_capacity(matrix.n_items());
    let mut ties = Vec::new();
    for (idx, counts) in matrix.item_counts().iter().enumerate() {
        let best = *counts.iter().max().unwrap();
        let winners: Vec<u32> = counts
            .iter()
            .enumerate()
            .filter(|(_, &c)| c == best)
            .map(|(j, _)| j as u32)
            .collect();
        if winners.len() > 1 {
            ties.push(idx);
        } else {
            labels.push(winners[0]);
        }
    }
    if !ties.is_empty() {
        return Err(AnnotationError::Tie(ties));
    }
    Ok(labels)
}

/// Fleiss' kappa over a fully-crossed rating matrix.
///
/// Per item `i` with category counts `n_ij` and `n` raters:
/// `P_i = [Σ_j n_ij (n_ij - 1)] / [n (n - 1)]`, `p_bar = mean_i P_i`,
/// `p_e = Σ_j p_j²` with `p_j` the marginal share of category `j`.
///
/// When `p_e = 1` (every rating in a single category) the statistic is 1 if
/// observed agreement is also perfect, otherwise a degenerate-marginal error.
pub fn fleiss_kappa<T>(matrix: &AnnotationMatrix) -> Result<KappaResult<T>, AnnotationError>
where
    T: Num + FromPrimitive + Clone + PartialEq,
{
    let n_items = matrix.n_items();
    let n_raters = matrix.n_annotators();
    let from = |u: usize| T::from_usize(u).expect("count conversion");

    let counts = matrix.item_counts();
    let pair_denom = from(n_raters) * from(n_raters - 1);

    let mut p_bar_sum = T::zero();
    let mut marginal = vec![0usize; matrix.k as usize];
    for item in &counts {
        let mut pairs = T::zero();
        for (j, &c) in item.iter().enumerate() {
            pairs = pairs + from(c) * from(c.saturating_sub(1));
            marginal[j] += c;
        }
        p_bar_sum = p_bar_sum + pairs / pair_denom.clone();
    }
    let p_bar = p_bar_sum / from(n_items);

    let total = from(n_items) * from(n_raters);
    let mut p_e = T::zero();
    for &m in &marginal {
        let share = from(m) / total.clone();
        p_e = p_e + share.clone() * share;
    }

    if p_e == T::one() {
        return if p_bar == T::one() {
            Ok(KappaResult {
                kappa: T::one(),
                p_bar,
                p_e,
            })
        } else {
            Err(AnnotationError::DegenerateMarginal)
        };
    }
    let kappa = (p_bar.clone() - p_e.clone()) / (T::one() - p_e.clone());
    Ok(KappaResult { kappa, p_bar, p_e })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn matrix(rows: &[&[u32]], k: u32) -> AnnotationMatrix {
        AnnotationMatrix::new(rows.iter().map(|r| r.to_vec()).collect(), k).unwrap()
    }

    #[test]
    fn majority_basics() {
        let m = matrix(&[&[1, 1, 0], &[0, 0, 0]], 2);
        assert_eq!(majority_vote(&m).unwrap(), vec![1, 0]);
    }

    #[test]
    fn two_annotator_tie_is_an_error() {
        let m = matrix(&[&[1, 0], &[1, 1], &[0, 1]], 2);
        match majority_vote(&m).unwrap_err() {
            AnnotationError::Tie(items) => assert_eq!(items, vec![0, 2]),
            other => panic!("unexpected: {other}"),
        }
    }

    #[test]
    fn perfect_agreement_gives_kappa_one() {
        let m = matrix(&[&[1, 1, 1], &[0, 0, 0], &[1, 1, 1]], 2);
        let r: KappaResult<f64> = fleiss_kappa(&m).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.p_bar, 1.0);
    }

    #[test]
    fn fixture_two_items_three_annotators() {
        // rows (1,1,0) and (0,0,0): p_bar = 2/3, p_e = 5/9, kappa = 1/4
        let m = matrix(&[&[1, 1, 0], &[0, 0, 0]], 2);
        let r: KappaResult<f64> = fleiss_kappa(&m).unwrap();
        assert!((r.p_bar - 2.0 / 3.0).abs() < 1e-15);
        assert!((r.p_e - 5.0 / 9.0).abs() < 1e-15);
        assert!((r.kappa - 0.25).abs() < 1e-15);
    }

    #[test]
    fn degenerate_marginal_with_perfect_agreement_is_one() {
        let m = matrix(&[&[0, 0, 0], &[0, 0, 0]], 2);
        let r: KappaResult<f64> = fleiss_kappa(&m).unwrap();
        assert_eq!(r.kappa, 1.0);
        assert_eq!(r.p_e, 1.0);
    }

    #[test]
    fn out_of_range_rating_rejected() {
        let err = AnnotationMatrix::new(vec![vec![0, 2]], 2).unwrap_err();
        assert!(matches!(err, AnnotationError::OutOfRange { value: 2, .. }));
    }

    #[test]
    fn csv_reader_infers_categories() {
        let data = "0,1,1\n1,1,1\n0,0,0\n";
        let m = AnnotationMatrix::from_csv_reader(data.as_bytes(), false).unwrap();
        assert_eq!(m.n_items(), 3);
        assert_eq!(m.n_annotators(), 3);
        assert_eq!(m.categories(), 2);
        assert_eq!(majority_vote(&m).unwrap(), vec![1, 1, 0]);
    }

    #[test]
    fn annotator_column_permutation_invariance() {
        let a = matrix(&[&[1, 0, 1], &[0, 1, 1], &[0, 0, 1]], 2);
        let b = matrix(&[&[1, 1, 0], &[1, 0, 1], &[1, 0, 0]], 2);
        let ra: KappaResult<f64> = fleiss_kappa(&a).unwrap();
        let rb: KappaResult<f64> = fleiss_kappa(&b).unwrap();
        assert_eq!(ra, rb);
        assert_eq!(majority_vote(&a).unwrap(), majority_vote(&b).unwrap());
    }
}

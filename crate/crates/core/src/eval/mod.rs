//! Measurement machinery: classification metrics, ROC/AUC, McNemar's
//! significance test, and exact t-SNE projection.

mod mcnemar;
mod roc;
mod tsne;

pub use mcnemar::{erfc, mcnemar, McNemarMethod, McNemarResult};
pub use roc::{roc_curve, write_roc_csv, RocCurve, RocPoint};
pub use tsne::{
    conditional_affinities, joint_affinities, kl_divergence, kl_gradient, tsne, write_tsne_csv,
    TsneConfig,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("empty input")]
    Empty,
    #[error("gold labels contain a single class")]
    SingleClass,
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("non-finite input")]
    NonFinite,
    #[error("io: {0}")]
    Io(#[from] std::io::Error),
}

/// One-vs-rest confusion counts and derived metrics for a single class.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassReport {
    pub label: u8,
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
    pub tn: usize,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Set when a zero denominator forced precision or recall to 0.
    pub zero_division: bool,
}

/// Per-class metrics plus overall accuracy.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub classes: Vec<ClassReport>,
    pub accuracy: f64,
    pub n: usize,
}

impl EvalReport {
    pub fn class(&self, label: u8) -> Option<&ClassReport> {
        self.classes.iter().find(|c| c.label == label)
    }

    /// F1 of the positive (clickbait) class; 0 when class 1 never occurs.
    pub fn positive_f1(&self) -> f64 {
        self.class(1).map(|c| c.f1).unwrap_or(0.0)
    }
}

/// Computes one-vs-rest precision/recall/F1 for every label present in
/// gold or predictions, plus overall accuracy. Zero denominators yield 0
/// with the `zero_division` flag set.
pub fn classification_report(gold: &[u8], pred: &[u8]) -> Result<EvalReport, EvalError> {
    if gold.len() != pred.len() {
        return Err(EvalError::LengthMismatch(gold.len(), pred.len()));
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    let n = gold.len();
    let mut labels: Vec<u8> = gold.iter().chain(pred.iter()).copied().collect();
    labels.sort_unstable();
    labels.dedup();

    let correct = gold.iter().zip(pred).filter(|(g, p)| g == p).count();
    let mut classes = Vec::with_capacity(labels.len());
    for label in labels {
        let tp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| **g == label && **p == label)
            .count();
        let fp = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| **g != label && **p == label)
            .count();
        let fn_ = gold
            .iter()
            .zip(pred)
            .filter(|(g, p)| **g == label && **p != label)
            .count();
        let tn = n - tp - fp - fn_;
        let mut zero_division = false;
        let precision = if tp + fp == 0 {
            zero_division = true;
            0.0
        } else {
            tp as f64 / (tp + fp) as f64
        };
        let recall = if tp + fn_ == 0 {
            zero_division = true;
            0.0
        } else {
            tp as f64 / (tp + fn_) as f64
        };
        let f1 = if precision + recall == 0.0 {
            0.0
        } else {
            2.0 * precision * recall / (precision + recall)
        };
        classes.push(ClassReport {
            label,
            tp,
            fp,
            fn_,
            tn,
            precision,
            recall,
            f1,
            zero_division,
        });
    }
    Ok(EvalReport {
        classes,
        accuracy: correct as f64 / n as f64,
        n,
    })
}

//! ROC curves and AUC.
//!
//! Thresholds sweep the distinct scores in descending order with ties
//! grouped, so the trapezoidal area equals the Mann-Whitney statistic with
//! half credit for tied pairs, bit-for-bit reproducible.

use std::io::Write;

use super::EvalError;

#[derive(Debug, Clone, PartialEq)]
pub struct RocPoint {
    pub fpr: f64,
    pub tpr: f64,
    /// Decision rule is `score >= threshold`; the (0,0) anchor carries +inf.
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    pub points: Vec<RocPoint>,
    pub auc: f64,
}

/// Sweeps thresholds over the distinct scores (descending, ties grouped)
/// and integrates the curve by trapezoids. Both classes must be present.
pub fn roc_curve(gold: &[u8], scores: &[f64]) -> Result<RocCurve, EvalError> {
    if gold.len() != scores.len() {
        return Err(EvalError::LengthMismatch(gold.len(), scores.len()));
    }
    if gold.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite);
    }
    let positives = gold.iter().filter(|&&g| g == 1).count();
    let negatives = gold.len() - positives;
    if positives == 0 || negatives == 0 {
        return Err(EvalError::SingleClass);
    }

    let mut order: Vec<usize> = (0..gold.len()).collect();
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap().then(a.cmp(&b)));

    let mut points = vec![RocPoint {
        fpr: 0.0,
        tpr: 0.0,
        threshold: f64::INFINITY,
    }];
    let mut tp = 0usize;
    let mut fp = 0usize;
    let mut i = 0;
    while i < order.len() {
        let threshold = scores[order[i]];
        // Consume the whole tie group at this threshold.
        while i < order.len() && scores[order[i]] == threshold {
            if gold[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        points.push(RocPoint {
            fpr: fp as f64 / negatives as f64,
            tpr: tp as f64 / positives as f64,
            threshold,
        });
    }

    let mut auc = 0.0;
    for pair in points.windows(2) {
        let dx = pair[1].fpr - pair[0].fpr;
        auc += dx * (pair[0].tpr + pair[1].tpr) / 2.0;
    }
    Ok(RocCurve { points, auc })
}

/// Writes `fpr,tpr,threshold` rows with the AUC in a trailing comment line.
pub fn write_roc_csv<W: Write>(curve: &RocCurve, mut writer: W) -> std::io::Result<()> {
    writeln!(writer, "fpr,tpr,threshold")?;
    for p in &curve.points {
        writeln!(writer, "{},{},{}", p.fpr, p.tpr, p.threshold)?;
    }
    writeln!(writer, "# auc,{}", curve.auc)?;
    Ok(())
}

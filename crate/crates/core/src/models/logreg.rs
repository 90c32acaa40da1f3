//! L2-regularized logistic regression over sparse feature rows.
//!
//! The gradient is computed analytically (no graph): mini-batch Adam with a
//! schedule-driven learning rate, matching the other trainers' loop. The
//! analytic gradient is validated against finite differences in the
//! acceptance suite.

use serde::{Deserialize, Serialize};

use crate::autodiff::{AdamConfig, OptimizerState, Tensor};
use crate::eval::classification_report;
use crate::features::{FeatureMatrix, SparseVector};
use crate::scalar::Scalar;

use super::train::{run_training, EpochTrainer, TrainConfig, TrainHistory};
use super::{require_two_classes, ModelError};

/// Weight vector plus bias.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearModel<S> {
    pub weights: Vec<S>,
    pub bias: S,
}

impl<S: Scalar> LinearModel<S> {
    pub fn zeros(dim: usize) -> Self {
        LinearModel {
            weights: vec![S::zero(); dim],
            bias: S::zero(),
        }
    }

    pub fn decision(&self, row: &SparseVector<S>) -> S {
        row.dot_dense(&self.weights) + self.bias
    }

    /// `P(class 1)` via the logistic link.
    pub fn predict_proba(&self, row: &SparseVector<S>) -> S {
        sigmoid(self.decision(row))
    }

    pub fn predict(&self, row: &SparseVector<S>) -> u8 {
        u8::from(self.predict_proba(row) >= S::from_f64_lossy(0.5))
    }

    pub fn predict_all(&self, x: &FeatureMatrix<S>) -> Vec<u8> {
        x.rows().iter().map(|r| self.predict(r)).collect()
    }

    pub fn proba_all(&self, x: &FeatureMatrix<S>) -> Vec<S> {
        x.rows().iter().map(|r| self.predict_proba(r)).collect()
    }
}

fn sigmoid<S: Scalar>(z: S) -> S {
    if z >= S::zero() {
        S::one() / (S::one() + (-z).exp())
    } else {
        let e = z.exp();
        e / (S::one() + e)
    }
}

/// Stable `-[y ln p + (1-y) ln(1-p)]` from the logit.
fn bce_from_logit<S: Scalar>(z: S, y: S) -> S {
    z.max(S::zero()) - z * y + (S::one() + (-z.abs()).exp()).ln()
}

/// Weighted-mean regularized negative log-likelihood and its analytic
/// gradient over a row batch. The trainer steps on exactly this function,
/// so finite-difference checks of the returned gradient validate the
/// training path.
pub fn logreg_loss_and_grad<S: Scalar>(
    weights: &[S],
    bias: S,
    rows: &[&SparseVector<S>],
    labels: &[u8],
    class_weights: Option<[S; 2]>,
    l2: S,
) -> (S, Vec<S>, S) {
    let mut grad_w = vec![S::zero(); weights.len()];
    let mut grad_b = S::zero();
    let mut loss = S::zero();
    let mut weight_total = S::zero();
    for (row, &label) in rows.iter().zip(labels) {
        let y = S::from_usize_lossy(label as usize);
        let z = row.dot_dense(weights) + bias;
        let sample_weight = match &class_weights {
            Some(w) => w[label as usize],
            None => S::one(),
        };
        loss += sample_weight * bce_from_logit(z, y);
        weight_total += sample_weight;
        let residual = sample_weight * (sigmoid(z) - y);
        for (j, v) in row.iter() {
            grad_w[j] += residual * v;
        }
        grad_b += residual;
    }
    let inv = S::one() / weight_total;
    loss *= inv;
    for g in &mut grad_w {
        *g *= inv;
    }
    grad_b *= inv;
    if l2 > S::zero() {
        let two = S::from_f64_lossy(2.0);
        loss += l2 / two * weights.iter().map(|w| *w * *w).sum::<S>();
        for (g, w) in grad_w.iter_mut().zip(weights) {
            *g += l2 * *w;
        }
    }
    (loss, grad_w, grad_b)
}

/// Mini-batch trainer state for [`run_training`].
pub struct LogregTrainer<'a, S: Scalar> {
    weights: Tensor<S>,
    bias: Tensor<S>,
    x: &'a FeatureMatrix<S>,
    y: &'a [u8],
    valid: Option<(&'a FeatureMatrix<S>, &'a [u8])>,
    optimizer: OptimizerState<S>,
    l2: S,
    class_weights: Option<[S; 2]>,
}

impl<'a, S: Scalar> LogregTrainer<'a, S> {
    pub fn new(
        x: &'a FeatureMatrix<S>,
        y: &'a [u8],
        valid: Option<(&'a FeatureMatrix<S>, &'a [u8])>,
        config: &TrainConfig,
    ) -> Result<Self, ModelError> {
        require_two_classes(y)?;
        if x.n_rows() != y.len() {
            return Err(ModelError::BadConfig(format!(
                "{} rows vs {} labels",
                x.n_rows(),
                y.len()
            )));
        }
        let weights = Tensor::zeros(&[x.dim()]);
        let bias = Tensor::zeros(&[1]);
        let optimizer = OptimizerState::new(AdamConfig::adam(), &[&weights, &bias]);
        Ok(LogregTrainer {
            weights,
            bias,
            x,
            y,
            valid,
            optimizer,
            l2: S::from_f64_lossy(config.l2),
            class_weights: config
                .class_weights
                .map(|[a, b]| [S::from_f64_lossy(a), S::from_f64_lossy(b)]),
        })
    }
}

impl<S: Scalar> EpochTrainer<S> for LogregTrainer<'_, S> {
    type Model = LinearModel<S>;

    fn snapshot(&self) -> LinearModel<S> {
        LinearModel {
            weights: self.weights.data().to_vec(),
            bias: self.bias.data()[0],
        }
    }

    fn n_train(&self) -> usize {
        self.x.n_rows()
    }

    fn train_step(&mut self, batch: &[usize], lr: S) -> Result<S, ModelError> {
        let rows: Vec<&SparseVector<S>> = batch.iter().map(|&i| self.x.row(i)).collect();
        let labels: Vec<u8> = batch.iter().map(|&i| self.y[i]).collect();
        let (loss, grad_w, grad_b) = logreg_loss_and_grad(
            self.weights.data(),
            self.bias.data()[0],
            &rows,
            &labels,
            self.class_weights,
            self.l2,
        );
        let grad_w = Tensor::from_vec(vec![grad_w.len()], grad_w)?;
        let grad_b = Tensor::from_vec(vec![1], vec![grad_b])?;
        self.optimizer.step(
            &mut [&mut self.weights, &mut self.bias],
            &[Some(&grad_w), Some(&grad_b)],
            lr,
        )?;
        Ok(loss)
    }

    fn validate(&self) -> Result<Option<S>, ModelError> {
        let Some((vx, vy)) = self.valid else {
            return Ok(None);
        };
        let model = self.snapshot();
        let pred = model.predict_all(vx);
        let report = classification_report(vy, &pred)?;
        Ok(Some(S::from_f64_lossy(report.positive_f1())))
    }
}

/// Trains logistic regression with mini-batch Adam and the configured
/// schedule; returns the best-validation model when a validation split is
/// given, otherwise the final model.
pub fn train_logreg<'a, S: Scalar>(
    x: &'a FeatureMatrix<S>,
    y: &'a [u8],
    valid: Option<(&'a FeatureMatrix<S>, &'a [u8])>,
    config: &TrainConfig,
) -> Result<(LinearModel<S>, TrainHistory<S>), ModelError> {
    let mut trainer = LogregTrainer::new(x, y, valid, config)?;
    run_training(&mut trainer, config)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::ScheduleKind;

    fn dense_matrix(rows: &[Vec<f64>]) -> FeatureMatrix<f64> {
        FeatureMatrix::from_dense_rows("x", rows)
    }

    #[test]
    fn zero_model_predicts_half() {
        let model = LinearModel::<f64>::zeros(3);
        let row = SparseVector::from_dense(&[1.0, -2.0, 0.5]);
        assert_eq!(model.predict_proba(&row), 0.5);
    }

    #[test]
    fn hand_sigmoid_value() {
        let model = LinearModel {
            weights: vec![(3.0f64).ln()],
            bias: 0.0,
        };
        let row = SparseVector::from_dense(&[1.0]);
        assert!((model.predict_proba(&row) - 0.75).abs() < 1e-15);
    }

    #[test]
    fn separable_1d_data_reaches_perfect_training_accuracy() {
        let rows: Vec<Vec<f64>> = (0..20)
            .map(|i| vec![if i < 10 { -1.0 - 0.1 * i as f64 } else { 1.0 + 0.1 * i as f64 }])
            .collect();
        let y: Vec<u8> = (0..20).map(|i| u8::from(i >= 10)).collect();
        let x = dense_matrix(&rows);
        let config = TrainConfig {
            epochs: 60,
            batch_size: 4,
            max_lr: 0.5,
            schedule: ScheduleKind::OneCycle,
            l2: 1e-6,
            seed: 3,
            ..TrainConfig::default()
        };
        let (model, history) = train_logreg(&x, &y, None, &config).unwrap();
        let pred = model.predict_all(&x);
        assert_eq!(pred, y);
        assert!(!history.batch_losses.is_empty());
    }

    #[test]
    fn zero_epochs_returns_initial_model() {
        let x = dense_matrix(&[vec![1.0], vec![-1.0]]);
        let y = [1u8, 0u8];
        let config = TrainConfig {
            epochs: 0,
            ..TrainConfig::default()
        };
        let (model, history) = train_logreg(&x, &y, None, &config).unwrap();
        assert_eq!(model, LinearModel::zeros(1));
        assert!(history.epochs.is_empty());
        assert!(history.batch_losses.is_empty());
    }

    #[test]
    fn single_class_training_set_errors() {
        let x = dense_matrix(&[vec![1.0], vec![2.0]]);
        let y = [1u8, 1u8];
        assert!(matches!(
            train_logreg(&x, &y, None, &TrainConfig::default()),
            Err(ModelError::SingleClass)
        ));
    }

    #[test]
    fn identical_seeds_identical_history() {
        let rows: Vec<Vec<f64>> = (0..12)
            .map(|i| vec![i as f64 - 6.0, (i as f64).sin()])
            .collect();
        let y: Vec<u8> = (0..12).map(|i| u8::from(i % 2 == 0)).collect();
        let x = dense_matrix(&rows);
        let config = TrainConfig {
            epochs: 5,
            batch_size: 4,
            max_lr: 0.1,
            seed: 17,
            ..TrainConfig::default()
        };
        let (m1, h1) = train_logreg(&x, &y, None, &config).unwrap();
        let (m2, h2) = train_logreg(&x, &y, None, &config).unwrap();
        assert_eq!(m1, m2);
        assert_eq!(h1, h2);
    }
}

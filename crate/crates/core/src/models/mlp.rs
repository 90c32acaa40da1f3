//! Two-layer MLP over dense representations.
//!
//! The supervised counterpart of the adversarial discriminator: same shape
//! of stack (linear, leaky-relu, dropout, linear) with two output logits.

use rand::Rng;

use crate::autodiff::{AdamConfig, Graph, NodeId, OptimizerState, Tensor};
use crate::eval::classification_report;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::train::{EpochTrainer, TrainConfig};
use super::{argmax_row, require_two_classes, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct MlpModel<S> {
    pub w1: Tensor<S>,
    pub b1: Tensor<S>,
    pub w2: Tensor<S>,
    pub b2: Tensor<S>,
    pub leaky_slope: S,
    pub dropout: f64,
}

impl<S: Scalar> MlpModel<S> {
    pub fn init<R: Rng>(
        input_dim: usize,
        hidden: usize,
        out_classes: usize,
        leaky_slope: f64,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let std1 = S::from_f64_lossy((2.0 / input_dim as f64).sqrt());
        let std2 = S::from_f64_lossy((2.0 / hidden as f64).sqrt());
        MlpModel {
            w1: Tensor::randn(&[input_dim, hidden], std1, rng),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::randn(&[hidden, out_classes], std2, rng),
            b2: Tensor::zeros(&[out_classes]),
            leaky_slope: S::from_f64_lossy(leaky_slope),
            dropout,
        }
    }

    pub fn with_params(
        w1: Tensor<S>,
        b1: Tensor<S>,
        w2: Tensor<S>,
        b2: Tensor<S>,
        leaky_slope: f64,
        dropout: f64,
    ) -> Self {
        MlpModel {
            w1,
            b1,
            w2,
            b2,
            leaky_slope: S::from_f64_lossy(leaky_slope),
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.shape()[0]
    }

    pub fn out_classes(&self) -> usize {
        self.w2.shape()[1]
    }

    /// Builds the forward pass on `graph`, returning (hidden, logits) node
    /// ids. Parameters enter as trainable leaves; dropout fires only in
    /// train mode.
    pub fn forward<R: Rng>(
        &self,
        graph: &mut Graph<S>,
        x: NodeId,
        train: bool,
        dropout_rng: &mut R,
    ) -> Result<MlpNodes, ModelError> {
        let w1 = graph.param(self.w1.clone());
        let b1 = graph.param(self.b1.clone());
        let w2 = graph.param(self.w2.clone());
        let b2 = graph.param(self.b2.clone());
        let pre = graph.matmul(x, w1)?;
        let pre = graph.add_bias(pre, b1)?;
        let mut hidden = graph.leaky_relu(pre, self.leaky_slope);
        if train && self.dropout > 0.0 {
            hidden = graph.dropout(hidden, self.dropout, dropout_rng)?;
        }
        let logits = graph.matmul(hidden, w2)?;
        let logits = graph.add_bias(logits, b2)?;
        Ok(MlpNodes {
            params: [w1, b1, w2, b2],
            hidden,
            logits,
        })
    }

    /// Eval-mode logits for a dense batch.
    pub fn logits(&self, x: &Tensor<S>) -> Result<Tensor<S>, ModelError> {
        let mut graph = Graph::new();
        let xn = graph.input(x.clone());
        let mut noop = rng::stream(0, Component::Dropout);
        let nodes = self.forward(&mut graph, xn, false, &mut noop)?;
        Ok(graph.value(nodes.logits).clone())
    }

    pub fn predict(&self, x: &Tensor<S>) -> Result<Vec<u8>, ModelError> {
        let logits = self.logits(x)?;
        Ok((0..logits.n_rows())
            .map(|i| argmax_row(logits.row(i)))
            .collect())
    }

    /// `P(class 1)` per row via softmax over the two logits.
    pub fn predict_proba(&self, x: &Tensor<S>) -> Result<Vec<S>, ModelError> {
        let logits = self.logits(x)?;
        Ok((0..logits.n_rows())
            .map(|i| {
                let row = logits.row(i);
                let max = row.iter().copied().fold(S::neg_infinity(), S::max);
                let exp: Vec<S> = row.iter().map(|v| (*v - max).exp()).collect();
                let z: S = exp.iter().copied().sum();
                exp[1] / z
            })
            .collect())
    }

    fn params_mut(&mut self) -> [&mut Tensor<S>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }
}

/// Node ids of one MLP forward pass.
pub struct MlpNodes {
    pub params: [NodeId; 4],
    pub hidden: NodeId,
    pub logits: NodeId,
}

/// Mini-batch cross-entropy trainer over dense rows.
pub struct MlpTrainer<'a, S: Scalar> {
    model: MlpModel<S>,
    x: &'a Tensor<S>,
    y: &'a [u8],
    valid: Option<(&'a Tensor<S>, &'a [u8])>,
    optimizer: OptimizerState<S>,
    dropout_rng: rand_chacha::ChaCha8Rng,
}

impl<'a, S: Scalar> MlpTrainer<'a, S> {
    pub fn new(
        model: MlpModel<S>,
        x: &'a Tensor<S>,
        y: &'a [u8],
        valid: Option<(&'a Tensor<S>, &'a [u8])>,
        config: &TrainConfig,
        optimizer_config: AdamConfig<S>,
    ) -> Result<Self, ModelError> {
        require_two_classes(y)?;
        if x.n_rows() != y.len() {
            return Err(ModelError::BadConfig(format!(
                "{} rows vs {} labels",
                x.n_rows(),
                y.len()
            )));
        }
        let optimizer =
            OptimizerState::new(optimizer_config, &[&model.w1, &model.b1, &model.w2, &model.b2]);
        Ok(MlpTrainer {
            model,
            x,
            y,
            valid,
            optimizer,
            dropout_rng: rng::stream(config.seed, Component::Dropout),
        })
    }

    pub fn model(&self) -> &MlpModel<S> {
        &self.model
    }
}

impl<S: Scalar> EpochTrainer<S> for MlpTrainer<'_, S> {
    type Model = MlpModel<S>;

    fn snapshot(&self) -> MlpModel<S> {
        self.model.clone()
    }

    fn n_train(&self) -> usize {
        self.x.n_rows()
    }

    fn train_step(&mut self, batch: &[usize], lr: S) -> Result<S, ModelError> {
        let xb = self.x.select_rows(batch);
        let targets: Vec<usize> = batch.iter().map(|&i| self.y[i] as usize).collect();
        let mut graph = Graph::new();
        let xn = graph.input(xb);
        let nodes = self
            .model
            .forward(&mut graph, xn, true, &mut self.dropout_rng)?;
        let loss = graph.softmax_cross_entropy(nodes.logits, &targets)?;
        graph.backward(loss)?;
        let grads: Vec<Option<&Tensor<S>>> =
            nodes.params.iter().map(|p| graph.grad(*p)).collect();
        self.optimizer
            .step(&mut self.model.params_mut(), &grads, lr)?;
        Ok(graph.value(loss).item())
    }

    fn validate(&self) -> Result<Option<S>, ModelError> {
        let Some((vx, vy)) = self.valid else {
            return Ok(None);
        };
        let pred = self.model.predict(vx)?;
        let report = classification_report(vy, &pred)?;
        Ok(Some(S::from_f64_lossy(report.positive_f1())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::models::{run_training, ScheduleKind};

    fn blob_data(n_per: usize, seed: u64) -> (Tensor<f64>, Vec<u8>) {
        let mut rng = rng::stream(seed, Component::Data);
        let mut data = Vec::new();
        let mut labels = Vec::new();
        for i in 0..2 * n_per {
            let label = u8::from(i >= n_per);
            let center = if label == 1 { 2.0 } else { -2.0 };
            for _ in 0..3 {
                data.push(center + rng.gen::<f64>() - 0.5);
            }
            labels.push(label);
        }
        (Tensor::from_vec(vec![2 * n_per, 3], data).unwrap(), labels)
    }

    #[test]
    fn learns_separated_blobs() {
        let (x, y) = blob_data(20, 1);
        let mut init_rng = rng::stream(2, Component::Init);
        let model = MlpModel::init(3, 8, 2, 0.2, 0.0, &mut init_rng);
        let config = TrainConfig {
            epochs: 30,
            batch_size: 8,
            max_lr: 0.01,
            schedule: ScheduleKind::OneCycle,
            seed: 3,
            ..TrainConfig::default()
        };
        let mut trainer =
            MlpTrainer::new(model, &x, &y, None, &config, AdamConfig::adam()).unwrap();
        let (trained, history) = run_training(&mut trainer, &config).unwrap();
        assert_eq!(trained.predict(&x).unwrap(), y);
        let first = history.epochs.first().unwrap().train_loss;
        let last = history.epochs.last().unwrap().train_loss;
        assert!(last < first);
    }

    #[test]
    fn best_validation_epoch_recorded() {
        let (x, y) = blob_data(12, 4);
        let mut init_rng = rng::stream(5, Component::Init);
        let model = MlpModel::init(3, 4, 2, 0.2, 0.0, &mut init_rng);
        let config = TrainConfig {
            epochs: 5,
            batch_size: 6,
            max_lr: 0.02,
            seed: 6,
            ..TrainConfig::default()
        };
        let mut trainer =
            MlpTrainer::new(model, &x, &y, Some((&x, &y)), &config, AdamConfig::adam()).unwrap();
        let (_, history) = run_training(&mut trainer, &config).unwrap();
        assert!(history.best_epoch.is_some());
        assert!(history.epochs.iter().all(|e| e.valid_f1.is_some()));
    }
}

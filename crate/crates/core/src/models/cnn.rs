//! Multi-channel CNN with a single convolutional layer.
//!
//! Pretrained embeddings feed parallel filter banks of several widths; each
//! channel is relu-activated and max-pooled over time, the pooled channels
//! are concatenated, and a linear layer produces the two logits.

use rand::Rng;

use crate::autodiff::{AdamConfig, Graph, NodeId, OptimizerState, Tensor};
use crate::eval::classification_report;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::train::{EpochTrainer, TrainConfig};
use super::{argmax_row, require_two_classes, ModelError};

#[derive(Debug, Clone, PartialEq)]
pub struct CnnModel<S> {
    pub filter_widths: Vec<usize>,
    pub filters_per_width: usize,
    /// One `[F, width*d]` bank per filter width.
    pub conv_weights: Vec<Tensor<S>>,
    /// One `[F]` bias per filter width.
    pub conv_biases: Vec<Tensor<S>>,
    pub out_w: Tensor<S>,
    pub out_b: Tensor<S>,
    pub embed_dim: usize,
    pub dropout: f64,
}

impl<S: Scalar> CnnModel<S> {
    pub fn init<R: Rng>(
        embed_dim: usize,
        filter_widths: &[usize],
        filters_per_width: usize,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let mut conv_weights = Vec::new();
        let mut conv_biases = Vec::new();
        for &w in filter_widths {
            let fan_in = w * embed_dim;
            let std = S::from_f64_lossy((2.0 / fan_in as f64).sqrt());
            conv_weights.push(Tensor::randn(&[filters_per_width, fan_in], std, rng));
            conv_biases.push(Tensor::zeros(&[filters_per_width]));
        }
        let pooled = filter_widths.len() * filters_per_width;
        let std_out = S::from_f64_lossy((2.0 / pooled as f64).sqrt());
        CnnModel {
            filter_widths: filter_widths.to_vec(),
            filters_per_width,
            conv_weights,
            conv_biases,
            out_w: Tensor::randn(&[pooled, 2], std_out, rng),
            out_b: Tensor::zeros(&[2]),
            embed_dim,
            dropout,
        }
    }

    pub fn max_filter_width(&self) -> usize {
        self.filter_widths.iter().copied().max().unwrap_or(0)
    }

    fn params(&self) -> Vec<&Tensor<S>> {
        let mut p: Vec<&Tensor<S>> = Vec::new();
        p.extend(self.conv_weights.iter());
        p.extend(self.conv_biases.iter());
        p.push(&self.out_w);
        p.push(&self.out_b);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut p: Vec<&mut Tensor<S>> = Vec::new();
        p.extend(self.conv_weights.iter_mut());
        p.extend(self.conv_biases.iter_mut());
        p.push(&mut self.out_w);
        p.push(&mut self.out_b);
        p
    }
}

/// Forward pass over a padded id batch. Returns the parameter node ids (in
/// `params()` order) and the `[B, 2]` logits node.
pub fn cnn_forward<S: Scalar, R: Rng>(
    model: &CnnModel<S>,
    graph: &mut Graph<S>,
    ids: &[Vec<usize>],
    embeddings: &Tensor<S>,
    train: bool,
    dropout_rng: &mut R,
) -> Result<(Vec<NodeId>, NodeId), ModelError> {
    let batch = ids.len();
    if batch == 0 {
        return Err(ModelError::EmptySplit("batch"));
    }
    let title_len = ids[0].len();
    if title_len < model.max_filter_width() {
        return Err(ModelError::TitleTooShort {
            len: title_len,
            need: model.max_filter_width(),
        });
    }
    let flat: Vec<usize> = ids.iter().flat_map(|row| row.iter().copied()).collect();
    if flat.len() != batch * title_len {
        return Err(ModelError::BadConfig("ragged id batch".to_string()));
    }

    let table = graph.input(embeddings.clone());
    let gathered = graph.gather(table, &flat)?;
    let x3 = graph.reshape(gathered, &[batch, title_len, model.embed_dim])?;

    let mut param_nodes = Vec::new();
    let mut pooled = Vec::new();
    let mut bias_nodes = Vec::new();
    for (i, &width) in model.filter_widths.iter().enumerate() {
        let w = graph.param(model.conv_weights[i].clone());
        param_nodes.push(w);
        let conv = graph.conv1d(x3, w, width)?;
        let b = graph.param(model.conv_biases[i].clone());
        bias_nodes.push(b);
        let conv = graph.add_bias(conv, b)?;
        let act = graph.relu(conv);
        pooled.push(graph.max_over_time(act)?);
    }
    param_nodes.extend(bias_nodes);
    let mut features = graph.concat_cols(&pooled)?;
    if train && model.dropout > 0.0 {
        features = graph.dropout(features, model.dropout, dropout_rng)?;
    }
    let out_w = graph.param(model.out_w.clone());
    let out_b = graph.param(model.out_b.clone());
    param_nodes.push(out_w);
    param_nodes.push(out_b);
    let logits = graph.matmul(features, out_w)?;
    let logits = graph.add_bias(logits, out_b)?;
    Ok((param_nodes, logits))
}

impl<S: Scalar> CnnModel<S> {
    /// Eval-mode logits.
    pub fn logits(&self, ids: &[Vec<usize>], embeddings: &Tensor<S>) -> Result<Tensor<S>, ModelError> {
        let mut graph = Graph::new();
        let mut noop = rng::stream(0, Component::Dropout);
        let (_, logits) = cnn_forward(self, &mut graph, ids, embeddings, false, &mut noop)?;
        Ok(graph.value(logits).clone())
    }

    pub fn predict(&self, ids: &[Vec<usize>], embeddings: &Tensor<S>) -> Result<Vec<u8>, ModelError> {
        let logits = self.logits(ids, embeddings)?;
        Ok((0..logits.n_rows()).map(|i| argmax_row(logits.row(i))).collect())
    }

    pub fn predict_proba(
        &self,
        ids: &[Vec<usize>],
        embeddings: &Tensor<S>,
    ) -> Result<Vec<S>, ModelError> {
        let logits = self.logits(ids, embeddings)?;
        Ok((0..logits.n_rows())
            .map(|i| {
                let row = logits.row(i);
                let max = row.iter().copied().fold(S::neg_infinity(), S::max);
                let exp: Vec<S> = row.iter().map(|v| (*v - max).exp()).collect();
                exp[1] / exp.iter().copied().sum::<S>()
            })
            .collect())
    }
}

/// Mini-batch trainer over padded id sequences.
pub struct CnnTrainer<'a, S: Scalar> {
    model: CnnModel<S>,
    ids: &'a [Vec<usize>],
    y: &'a [u8],
    embeddings: &'a Tensor<S>,
    valid: Option<(&'a [Vec<usize>], &'a [u8])>,
    optimizer: OptimizerState<S>,
    dropout_rng: rand_chacha::ChaCha8Rng,
}

impl<'a, S: Scalar> CnnTrainer<'a, S> {
    pub fn new(
        model: CnnModel<S>,
        ids: &'a [Vec<usize>],
        y: &'a [u8],
        embeddings: &'a Tensor<S>,
        valid: Option<(&'a [Vec<usize>], &'a [u8])>,
        config: &TrainConfig,
    ) -> Result<Self, ModelError> {
        require_two_classes(y)?;
        let optimizer = OptimizerState::new(AdamConfig::adam(), &model.params());
        Ok(CnnTrainer {
            model,
            ids,
            y,
            embeddings,
            valid,
            optimizer,
            dropout_rng: rng::stream(config.seed, Component::Dropout),
        })
    }
}

impl<S: Scalar> EpochTrainer<S> for CnnTrainer<'_, S> {
    type Model = CnnModel<S>;

    fn snapshot(&self) -> CnnModel<S> {
        self.model.clone()
    }

    fn n_train(&self) -> usize {
        self.ids.len()
    }

    fn train_step(&mut self, batch: &[usize], lr: S) -> Result<S, ModelError> {
        let rows: Vec<Vec<usize>> = batch.iter().map(|&i| self.ids[i].clone()).collect();
        let targets: Vec<usize> = batch.iter().map(|&i| self.y[i] as usize).collect();
        let mut graph = Graph::new();
        let (param_nodes, logits) = cnn_forward(
            &self.model,
            &mut graph,
            &rows,
            self.embeddings,
            true,
            &mut self.dropout_rng,
        )?;
        let loss = graph.softmax_cross_entropy(logits, &targets)?;
        graph.backward(loss)?;
        let grads: Vec<Option<&Tensor<S>>> = param_nodes.iter().map(|p| graph.grad(*p)).collect();
        let mut params = self.model.params_mut();
        self.optimizer.step(&mut params, &grads, lr)?;
        Ok(graph.value(loss).item())
    }

    fn validate(&self) -> Result<Option<S>, ModelError> {
        let Some((vids, vy)) = self.valid else {
            return Ok(None);
        };
        let pred = self.model.predict(vids, self.embeddings)?;
        let report = classification_report(vy, &pred)?;
        Ok(Some(S::from_f64_lossy(report.positive_f1())))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn embeddings(v: usize, d: usize, seed: u64) -> Tensor<f64> {
        let mut rng = rng::stream(seed, Component::Data);
        let mut t = Tensor::randn(&[v, d], 1.0, &mut rng);
        // Row 0 is the padding vector.
        for k in 0..d {
            t.data_mut()[k] = 0.0;
        }
        t
    }

    #[test]
    fn shape_contract() {
        let mut rng = rng::stream(1, Component::Init);
        let model = CnnModel::<f64>::init(8, &[3, 4, 5], 6, 0.0, &mut rng);
        let emb = embeddings(10, 8, 2);
        let ids: Vec<Vec<usize>> = (0..4).map(|i| vec![(i % 9) + 1; 16]).collect();
        let logits = model.logits(&ids, &emb).unwrap();
        assert_eq!(logits.shape(), &[4, 2]);
        // pooled width = 3 widths x 6 filters
        assert_eq!(model.out_w.shape(), &[18, 2]);
    }

    #[test]
    fn zero_embeddings_and_weights_give_bias_logits() {
        let mut rng = rng::stream(1, Component::Init);
        let mut model = CnnModel::<f64>::init(4, &[2], 3, 0.0, &mut rng);
        model.out_b = Tensor::from_vec(vec![2], vec![0.7, -0.2]).unwrap();
        let emb = Tensor::zeros(&[5, 4]);
        let ids = vec![vec![1usize, 2, 3, 4], vec![4, 3, 2, 1]];
        let logits = model.logits(&ids, &emb).unwrap();
        for i in 0..2 {
            assert_eq!(logits.row(i), &[0.7, -0.2]);
        }
    }

    #[test]
    fn title_shorter_than_max_width_errors() {
        let mut rng = rng::stream(1, Component::Init);
        let model = CnnModel::<f64>::init(4, &[3, 5], 2, 0.0, &mut rng);
        let emb = embeddings(6, 4, 3);
        let ids = vec![vec![1usize, 2, 3, 4]];
        assert!(matches!(
            model.logits(&ids, &emb),
            Err(ModelError::TitleTooShort { len: 4, need: 5 })
        ));
    }

    #[test]
    fn single_filter_matches_sliding_window_oracle() {
        let d = 3;
        let width = 2;
        let emb = embeddings(8, d, 5);
        let ids = vec![vec![1usize, 3, 5, 7, 2]];
        let mut rng = rng::stream(7, Component::Init);
        let mut model = CnnModel::<f64>::init(d, &[width], 1, 0.0, &mut rng);
        model.out_b = Tensor::zeros(&[2]);

        let logits_before = model.logits(&ids, &emb).unwrap();
        let _ = logits_before;
        // Oracle: max over positions of the window correlation (relu'd).
        let filter = model.conv_weights[0].data().to_vec();
        let mut best = f64::NEG_INFINITY;
        for pos in 0..ids[0].len() - width + 1 {
            let mut acc = 0.0;
            for offset in 0..width {
                let row = emb.row(ids[0][pos + offset]);
                for k in 0..d {
                    acc += row[k] * filter[offset * d + k];
                }
            }
            best = best.max(acc);
        }
        let pooled = best.max(0.0);
        // Project by the output layer to reconstruct the logits.
        let expect0 = pooled * model.out_w.at2(0, 0);
        let expect1 = pooled * model.out_w.at2(0, 1);
        let logits = model.logits(&ids, &emb).unwrap();
        assert!((logits.at2(0, 0) - expect0).abs() < 1e-12);
        assert!((logits.at2(0, 1) - expect1).abs() < 1e-12);
    }

    #[test]
    fn batch_consistency() {
        let mut rng = rng::stream(9, Component::Init);
        let model = CnnModel::<f64>::init(5, &[2, 3], 4, 0.0, &mut rng);
        let emb = embeddings(12, 5, 11);
        let ids: Vec<Vec<usize>> = (0..3).map(|i| (0..6).map(|j| (i * 6 + j) % 11 + 1).collect()).collect();
        let batched = model.logits(&ids, &emb).unwrap();
        for (i, row) in ids.iter().enumerate() {
            let single = model.logits(std::slice::from_ref(row), &emb).unwrap();
            for k in 0..2 {
                assert!((batched.at2(i, k) - single.at2(0, k)).abs() < 1e-12);
            }
        }
    }
}

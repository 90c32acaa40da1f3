//! Bidirectional GRU with attention pooling.
//!
//! Standard GRU recurrences run forward and backward over the embedded
//! title; the per-step concatenated states feed a one-layer attention
//! (`u_t = tanh(W h_t + b)`, scores against a learned context vector,
//! softmax over time) whose weighted state sum is projected to two logits.

use rand::Rng;

use crate::autodiff::{AdamConfig, Graph, NodeId, OptimizerState, Tensor};
use crate::eval::classification_report;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::train::{EpochTrainer, TrainConfig};
use super::{argmax_row, require_two_classes, ModelError};

/// Update/reset/candidate gate parameters for one direction.
#[derive(Debug, Clone, PartialEq)]
pub struct GruDirection<S> {
    pub w_update: Tensor<S>,
    pub u_update: Tensor<S>,
    pub b_update: Tensor<S>,
    pub w_reset: Tensor<S>,
    pub u_reset: Tensor<S>,
    pub b_reset: Tensor<S>,
    pub w_cand: Tensor<S>,
    pub u_cand: Tensor<S>,
    pub b_cand: Tensor<S>,
}

impl<S: Scalar> GruDirection<S> {
    fn init<R: Rng>(input_dim: usize, hidden: usize, rng: &mut R) -> Self {
        let std_w = S::from_f64_lossy((1.0 / input_dim as f64).sqrt());
        let std_u = S::from_f64_lossy((1.0 / hidden as f64).sqrt());
        let gate = |rng: &mut R| {
            (
                Tensor::randn(&[input_dim, hidden], std_w, rng),
                Tensor::randn(&[hidden, hidden], std_u, rng),
                Tensor::zeros(&[hidden]),
            )
        };
        let (w_update, u_update, b_update) = gate(rng);
        let (w_reset, u_reset, b_reset) = gate(rng);
        let (w_cand, u_cand, b_cand) = gate(rng);
        GruDirection {
            w_update,
            u_update,
            b_update,
            w_reset,
            u_reset,
            b_reset,
            w_cand,
            u_cand,
            b_cand,
        }
    }

    fn tensors(&self) -> [&Tensor<S>; 9] {
        [
            &self.w_update,
            &self.u_update,
            &self.b_update,
            &self.w_reset,
            &self.u_reset,
            &self.b_reset,
            &self.w_cand,
            &self.u_cand,
            &self.b_cand,
        ]
    }

    fn tensors_mut(&mut self) -> [&mut Tensor<S>; 9] {
        [
            &mut self.w_update,
            &mut self.u_update,
            &mut self.b_update,
            &mut self.w_reset,
            &mut self.u_reset,
            &mut self.b_reset,
            &mut self.w_cand,
            &mut self.u_cand,
            &mut self.b_cand,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct BiGruAttnModel<S> {
    pub forward_cell: GruDirection<S>,
    pub backward_cell: GruDirection<S>,
    pub hidden: usize,
    /// Attention projection `[2h, a]` and bias `[a]`.
    pub attn_w: Tensor<S>,
    pub attn_b: Tensor<S>,
    /// Learned context vector `[a, 1]`.
    pub attn_u: Tensor<S>,
    pub out_w: Tensor<S>,
    pub out_b: Tensor<S>,
    pub embed_dim: usize,
    pub dropout: f64,
}

impl<S: Scalar> BiGruAttnModel<S> {
    pub fn init<R: Rng>(embed_dim: usize, hidden: usize, dropout: f64, rng: &mut R) -> Self {
        let attn_dim = 2 * hidden;
        let std_attn = S::from_f64_lossy((1.0 / (2 * hidden) as f64).sqrt());
        BiGruAttnModel {
            forward_cell: GruDirection::init(embed_dim, hidden, rng),
            backward_cell: GruDirection::init(embed_dim, hidden, rng),
            hidden,
            attn_w: Tensor::randn(&[2 * hidden, attn_dim], std_attn, rng),
            attn_b: Tensor::zeros(&[attn_dim]),
            attn_u: Tensor::randn(&[attn_dim, 1], std_attn, rng),
            out_w: Tensor::randn(&[2 * hidden, 2], std_attn, rng),
            out_b: Tensor::zeros(&[2]),
            embed_dim,
            dropout,
        }
    }

    fn params(&self) -> Vec<&Tensor<S>> {
        let mut p: Vec<&Tensor<S>> = Vec::new();
        p.extend(self.forward_cell.tensors());
        p.extend(self.backward_cell.tensors());
        p.extend([&self.attn_w, &self.attn_b, &self.attn_u, &self.out_w, &self.out_b]);
        p
    }

    fn params_mut(&mut self) -> Vec<&mut Tensor<S>> {
        let mut p: Vec<&mut Tensor<S>> = Vec::new();
        p.extend(self.forward_cell.tensors_mut());
        p.extend(self.backward_cell.tensors_mut());
        p.extend([
            &mut self.attn_w,
            &mut self.attn_b,
            &mut self.attn_u,
            &mut self.out_w,
            &mut self.out_b,
        ]);
        p
    }
}

struct GruNodes {
    params: [NodeId; 9],
}

impl GruNodes {
    fn insert<S: Scalar>(graph: &mut Graph<S>, cell: &GruDirection<S>) -> Self {
        let t = cell.tensors();
        GruNodes {
            params: std::array::from_fn(|i| graph.param(t[i].clone())),
        }
    }

    /// One GRU step: `h' = (1-z) ⊙ h + z ⊙ h̃`.
    fn step<S: Scalar>(
        &self,
        graph: &mut Graph<S>,
        x_t: NodeId,
        h: NodeId,
    ) -> Result<NodeId, ModelError> {
        let [w_z, u_z, b_z, w_r, u_r, b_r, w_c, u_c, b_c] = self.params;
        let zx = graph.matmul(x_t, w_z)?;
        let zh = graph.matmul(h, u_z)?;
        let z = graph.add(zx, zh)?;
        let z = graph.add_bias(z, b_z)?;
        let z = graph.sigmoid(z);

        let rx = graph.matmul(x_t, w_r)?;
        let rh = graph.matmul(h, u_r)?;
        let r = graph.add(rx, rh)?;
        let r = graph.add_bias(r, b_r)?;
        let r = graph.sigmoid(r);

        let cx = graph.matmul(x_t, w_c)?;
        let gated = graph.mul(r, h)?;
        let ch = graph.matmul(gated, u_c)?;
        let cand = graph.add(cx, ch)?;
        let cand = graph.add_bias(cand, b_c)?;
        let cand = graph.tanh(cand);

        let keep = graph.affine(z, -S::one(), S::one());
        let kept = graph.mul(keep, h)?;
        let new = graph.mul(z, cand)?;
        Ok(graph.add(kept, new)?)
    }
}

/// Forward pass over a padded id batch. Returns parameter node ids (in
/// `params()` order), the `[B, 2]` logits node, and the `[B, T]` attention
/// node whose rows sum to 1.
pub fn bigru_attn_forward<S: Scalar, R: Rng>(
    model: &BiGruAttnModel<S>,
    graph: &mut Graph<S>,
    ids: &[Vec<usize>],
    embeddings: &Tensor<S>,
    train: bool,
    dropout_rng: &mut R,
) -> Result<(Vec<NodeId>, NodeId, NodeId), ModelError> {
    let batch = ids.len();
    if batch == 0 {
        return Err(ModelError::EmptySplit("batch"));
    }
    let title_len = ids[0].len();
    if title_len == 0 {
        return Err(ModelError::BadConfig("empty title sequence".to_string()));
    }
    let flat: Vec<usize> = ids.iter().flat_map(|row| row.iter().copied()).collect();
    if flat.len() != batch * title_len {
        return Err(ModelError::BadConfig("ragged id batch".to_string()));
    }

    let table = graph.input(embeddings.clone());
    let gathered = graph.gather(table, &flat)?;
    let x3 = graph.reshape(gathered, &[batch, title_len, model.embed_dim])?;

    let fwd = GruNodes::insert(graph, &model.forward_cell);
    let bwd = GruNodes::insert(graph, &model.backward_cell);

    let steps: Vec<NodeId> = (0..title_len)
        .map(|t| graph.time_step(x3, t))
        .collect::<Result<_, _>>()?;

    let mut h = graph.input(Tensor::zeros(&[batch, model.hidden]));
    let mut fwd_states = Vec::with_capacity(title_len);
    for &x_t in &steps {
        h = fwd.step(graph, x_t, h)?;
        fwd_states.push(h);
    }
    let mut h = graph.input(Tensor::zeros(&[batch, model.hidden]));
    let mut bwd_states = vec![h; title_len];
    for t in (0..title_len).rev() {
        h = bwd.step(graph, steps[t], h)?;
        bwd_states[t] = h;
    }

    let states: Vec<NodeId> = (0..title_len)
        .map(|t| graph.concat_cols(&[fwd_states[t], bwd_states[t]]))
        .collect::<Result<_, _>>()?;

    let attn_w = graph.param(model.attn_w.clone());
    let attn_b = graph.param(model.attn_b.clone());
    let attn_u = graph.param(model.attn_u.clone());
    let mut scores = Vec::with_capacity(title_len);
    for &h_t in &states {
        let proj = graph.matmul(h_t, attn_w)?;
        let proj = graph.add_bias(proj, attn_b)?;
        let u_t = graph.tanh(proj);
        let score = graph.matmul(u_t, attn_u)?;
        scores.push(graph.reshape(score, &[batch])?);
    }
    let score_mat = graph.stack_cols(&scores)?;
    let attention = graph.softmax_rows(score_mat)?;

    let mut context: Option<NodeId> = None;
    for (t, &h_t) in states.iter().enumerate() {
        let alpha_col = graph.slice_cols(attention, t, t + 1)?;
        let alpha = graph.reshape(alpha_col, &[batch])?;
        let weighted = graph.scale_rows(h_t, alpha)?;
        context = Some(match context {
            Some(acc) => graph.add(acc, weighted)?,
            None => weighted,
        });
    }
    let mut context = context.expect("at least one step");
    if train && model.dropout > 0.0 {
        context = graph.dropout(context, model.dropout, dropout_rng)?;
    }

    let out_w = graph.param(model.out_w.clone());
    let out_b = graph.param(model.out_b.clone());
    let logits = graph.matmul(context, out_w)?;
    let logits = graph.add_bias(logits, out_b)?;

    let mut param_nodes = Vec::new();
    param_nodes.extend(fwd.params);
    param_nodes.extend(bwd.params);
    param_nodes.extend([attn_w, attn_b, attn_u, out_w, out_b]);
    Ok((param_nodes, logits, attention))
}

impl<S: Scalar> BiGruAttnModel<S> {
    /// Eval-mode logits and attention.
    pub fn logits_and_attention(
        &self,
        ids: &[Vec<usize>],
        embeddings: &Tensor<S>,
    ) -> Result<(Tensor<S>, Tensor<S>), ModelError> {
        let mut graph = Graph::new();
        let mut noop = rng::stream(0, Component::Dropout);
        let (_, logits, attention) =
            bigru_attn_forward(self, &mut graph, ids, embeddings, false, &mut noop)?;
        Ok((graph.value(logits).clone(), graph.value(attention).clone()))
    }

    pub fn predict(&self, ids: &[Vec<usize>], embeddings: &Tensor<S>) -> Result<Vec<u8>, ModelError> {
        let (logits, _) = self.logits_and_attention(ids, embeddings)?;
        Ok((0..logits.n_rows()).map(|i| argmax_row(logits.row(i))).collect())
    }

    pub fn predict_proba(
        &self,
        ids: &[Vec<usize>],
        embeddings: &Tensor<S>,
    ) -> Result<Vec<S>, ModelError> {
        let (logits, _) = self.logits_and_attention(ids, embeddings)?;
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
pub struct BiGruTrainer<'a, S: Scalar> {
    model: BiGruAttnModel<S>,
    ids: &'a [Vec<usize>],
    y: &'a [u8],
    embeddings: &'a Tensor<S>,
    valid: Option<(&'a [Vec<usize>], &'a [u8])>,
    optimizer: OptimizerState<S>,
    dropout_rng: rand_chacha::ChaCha8Rng,
}

impl<'a, S: Scalar> BiGruTrainer<'a, S> {
    pub fn new(
        model: BiGruAttnModel<S>,
        ids: &'a [Vec<usize>],
        y: &'a [u8],
        embeddings: &'a Tensor<S>,
        valid: Option<(&'a [Vec<usize>], &'a [u8])>,
        config: &TrainConfig,
    ) -> Result<Self, ModelError> {
        require_two_classes(y)?;
        let optimizer = OptimizerState::new(AdamConfig::adam(), &model.params());
        Ok(BiGruTrainer {
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

impl<S: Scalar> EpochTrainer<S> for BiGruTrainer<'_, S> {
    type Model = BiGruAttnModel<S>;

    fn snapshot(&self) -> BiGruAttnModel<S> {
        self.model.clone()
    }

    fn n_train(&self) -> usize {
        self.ids.len()
    }

    fn train_step(&mut self, batch: &[usize], lr: S) -> Result<S, ModelError> {
        let rows: Vec<Vec<usize>> = batch.iter().map(|&i| self.ids[i].clone()).collect();
        let targets: Vec<usize> = batch.iter().map(|&i| self.y[i] as usize).collect();
        let mut graph = Graph::new();
        let (param_nodes, logits, _) = bigru_attn_forward(
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
        for k in 0..d {
            t.data_mut()[k] = 0.0;
        }
        t
    }

    #[test]
    fn attention_rows_sum_to_one() {
        let mut rng = rng::stream(1, Component::Init);
        let model = BiGruAttnModel::<f64>::init(4, 3, 0.0, &mut rng);
        let emb = embeddings(9, 4, 2);
        let ids: Vec<Vec<usize>> = (0..3).map(|i| vec![i + 1, i + 2, i + 3, 0, 0]).collect();
        let (logits, attention) = model.logits_and_attention(&ids, &emb).unwrap();
        assert_eq!(logits.shape(), &[3, 2]);
        assert_eq!(attention.shape(), &[3, 5]);
        for i in 0..3 {
            let sum: f64 = attention.row(i).iter().sum();
            assert!((sum - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn single_step_attention_is_exactly_one() {
        let mut rng = rng::stream(3, Component::Init);
        let model = BiGruAttnModel::<f64>::init(4, 2, 0.0, &mut rng);
        let emb = embeddings(5, 4, 4);
        let ids = vec![vec![2usize], vec![3usize]];
        let (_, attention) = model.logits_and_attention(&ids, &emb).unwrap();
        assert_eq!(attention.data(), &[1.0, 1.0]);
    }

    #[test]
    fn batch_consistency() {
        let mut rng = rng::stream(5, Component::Init);
        let model = BiGruAttnModel::<f64>::init(3, 2, 0.0, &mut rng);
        let emb = embeddings(8, 3, 6);
        let ids: Vec<Vec<usize>> = vec![vec![1, 4, 2], vec![7, 0, 3], vec![5, 5, 1]];
        let (batched, _) = model.logits_and_attention(&ids, &emb).unwrap();
        for (i, row) in ids.iter().enumerate() {
            let (single, _) = model
                .logits_and_attention(std::slice::from_ref(row), &emb)
                .unwrap();
            for k in 0..2 {
                assert!((batched.at2(i, k) - single.at2(0, k)).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn tiny_model_gradient_matches_finite_differences() {
        // h=2, T=3 as the smallest interesting recurrence.
        let mut rng = rng::stream(7, Component::Init);
        let model = BiGruAttnModel::<f64>::init(3, 2, 0.0, &mut rng);
        let emb = embeddings(6, 3, 8);
        let ids = vec![vec![1usize, 3, 5], vec![2, 4, 0]];
        let targets = vec![0usize, 1];

        let loss_of = |m: &BiGruAttnModel<f64>| -> f64 {
            let mut graph = Graph::new();
            let mut noop = rng::stream(0, Component::Dropout);
            let (_, logits, _) =
                bigru_attn_forward(m, &mut graph, &ids, &emb, false, &mut noop).unwrap();
            let loss = graph.softmax_cross_entropy(logits, &targets).unwrap();
            graph.value(loss).item()
        };

        // Analytic gradients.
        let mut graph = Graph::new();
        let mut noop = rng::stream(0, Component::Dropout);
        let (params, logits, _) =
            bigru_attn_forward(&model, &mut graph, &ids, &emb, false, &mut noop).unwrap();
        let loss = graph.softmax_cross_entropy(logits, &targets).unwrap();
        graph.backward(loss).unwrap();

        // Check a sample of parameters: candidate-gate recurrence of the
        // forward cell (index 7) and the attention context vector (index 20).
        let eps = 1e-5;
        for (param_idx, tensor_of) in [
            (7usize, 0usize),
            (20usize, 0usize),
        ] {
            let grad = graph.grad(params[param_idx]).unwrap().data().to_vec();
            for entry in 0..grad.len().min(4) {
                let mut probe = model.clone();
                {
                    let mut tensors = probe.params_mut();
                    tensors[param_idx].data_mut()[entry] += eps;
                }
                let up = loss_of(&probe);
                {
                    let mut tensors = probe.params_mut();
                    tensors[param_idx].data_mut()[entry] -= 2.0 * eps;
                }
                let down = loss_of(&probe);
                let fd = (up - down) / (2.0 * eps);
                assert!(
                    (fd - grad[entry]).abs() / fd.abs().max(1.0) < 1e-4,
                    "param {param_idx} entry {entry}: fd {fd} vs {}",
                    grad[entry]
                );
                let _ = tensor_of;
            }
        }
    }
}

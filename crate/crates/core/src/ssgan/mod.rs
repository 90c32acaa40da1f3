//! Semi-supervised GAN over encoder representations.
//!
//! A noise-fed two-layer generator produces fake representation vectors; a
//! two-layer discriminator scores `k+1` classes: the `k` real classes plus
//! a final "fake" class. Real rows (labeled and unlabeled) push the fake
//! probability down, generated rows push it up, and labeled rows additionally
//! pay cross-entropy over the real classes renormalized to exclude the fake
//! logit. The generator chases the discriminator's mean penultimate features
//! (feature matching) while trying to pass as real.

mod train;

pub use train::{
    train_ssgan, train_ssgan_reps, GanEpochStats, GanHistory, GanTrainConfig,
};

use rand::Rng;
use rand_distr::StandardNormal;
use thiserror::Error;

use crate::autodiff::{Graph, GraphError, NodeId, ScheduleError, Tensor};
use crate::eval::EvalError;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

#[derive(Debug, Error)]
pub enum GanError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Corpus(#[from] crate::corpus::CorpusError),
    #[error("empty labeled corpus")]
    EmptyLabeled,
    #[error("invalid batch: {0}")]
    BadBatch(String),
    #[error("non-finite loss")]
    NonFinite,
    #[error("label {0} outside 0..{1}")]
    BadLabel(u8, usize),
}

/// Two-layer feedforward generator: noise → hidden → representation.
#[derive(Debug, Clone, PartialEq)]
pub struct Generator<S> {
    pub w1: Tensor<S>,
    pub b1: Tensor<S>,
    pub w2: Tensor<S>,
    pub b2: Tensor<S>,
    pub noise_dim: usize,
    pub leaky_slope: S,
    pub dropout: f64,
}

impl<S: Scalar> Generator<S> {
    pub fn init<R: Rng>(
        output_dim: usize,
        hidden: usize,
        noise_dim: usize,
        leaky_slope: f64,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let std1 = S::from_f64_lossy((2.0 / noise_dim as f64).sqrt());
        let std2 = S::from_f64_lossy((2.0 / hidden as f64).sqrt());
        Generator {
            w1: Tensor::randn(&[noise_dim, hidden], std1, rng),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::randn(&[hidden, output_dim], std2, rng),
            b2: Tensor::zeros(&[output_dim]),
            noise_dim,
            leaky_slope: S::from_f64_lossy(leaky_slope),
            dropout,
        }
    }

    /// All-zero weights; the output collapses to the output bias rows.
    pub fn zeros(output_dim: usize, hidden: usize, noise_dim: usize) -> Self {
        Generator {
            w1: Tensor::zeros(&[noise_dim, hidden]),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::zeros(&[hidden, output_dim]),
            b2: Tensor::zeros(&[output_dim]),
            noise_dim,
            leaky_slope: S::from_f64_lossy(0.2),
            dropout: 0.0,
        }
    }

    pub fn output_dim(&self) -> usize {
        self.w2.shape()[1]
    }

    pub(crate) fn params(&self) -> [&Tensor<S>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Tensor<S>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Builds the generator forward over an existing noise node.
    pub(crate) fn forward<R: Rng>(
        &self,
        graph: &mut Graph<S>,
        noise: NodeId,
        train: bool,
        dropout_rng: &mut R,
    ) -> Result<([NodeId; 4], NodeId), GanError> {
        let w1 = graph.param(self.w1.clone());
        let b1 = graph.param(self.b1.clone());
        let w2 = graph.param(self.w2.clone());
        let b2 = graph.param(self.b2.clone());
        let h = graph.matmul(noise, w1)?;
        let h = graph.add_bias(h, b1)?;
        let mut h = graph.leaky_relu(h, self.leaky_slope);
        if train && self.dropout > 0.0 {
            h = graph.dropout(h, self.dropout, dropout_rng)?;
        }
        let out = graph.matmul(h, w2)?;
        let out = graph.add_bias(out, b2)?;
        Ok(([w1, b1, w2, b2], out))
    }

    /// Standard-normal noise rows.
    pub fn sample_noise<R: Rng>(&self, batch_size: usize, rng: &mut R) -> Tensor<S> {
        let data = (0..batch_size * self.noise_dim)
            .map(|_| S::from_f64_lossy(rng.sample::<f64, _>(StandardNormal)))
            .collect();
        Tensor::from_vec(vec![batch_size, self.noise_dim], data).expect("noise shape")
    }
}

/// `z ~ N(0,1)` per entry, mapped through the generator (eval mode).
/// Deterministic given the RNG state.
pub fn generate<S: Scalar, R: Rng>(
    gen: &Generator<S>,
    batch_size: usize,
    rng: &mut R,
) -> Result<Tensor<S>, GanError> {
    let noise = gen.sample_noise(batch_size, rng);
    let mut graph = Graph::new();
    let z = graph.input(noise);
    let mut noop = rng::stream(0, Component::Dropout);
    let (_, out) = gen.forward(&mut graph, z, false, &mut noop)?;
    Ok(graph.value(out).clone())
}

/// Two-layer discriminator: representation → penultimate features →
/// `k+1` logits, the last being the fake class.
#[derive(Debug, Clone, PartialEq)]
pub struct Discriminator<S> {
    pub w1: Tensor<S>,
    pub b1: Tensor<S>,
    pub w2: Tensor<S>,
    pub b2: Tensor<S>,
    /// Number of real classes; the fake logit sits at column `k`.
    pub k: usize,
    pub leaky_slope: S,
    pub dropout: f64,
}

impl<S: Scalar> Discriminator<S> {
    pub fn init<R: Rng>(
        input_dim: usize,
        hidden: usize,
        k: usize,
        leaky_slope: f64,
        dropout: f64,
        rng: &mut R,
    ) -> Self {
        let std1 = S::from_f64_lossy((2.0 / input_dim as f64).sqrt());
        let std2 = S::from_f64_lossy((2.0 / hidden as f64).sqrt());
        Discriminator {
            w1: Tensor::randn(&[input_dim, hidden], std1, rng),
            b1: Tensor::zeros(&[hidden]),
            w2: Tensor::randn(&[hidden, k + 1], std2, rng),
            b2: Tensor::zeros(&[k + 1]),
            k,
            leaky_slope: S::from_f64_lossy(leaky_slope),
            dropout,
        }
    }

    pub fn input_dim(&self) -> usize {
        self.w1.shape()[0]
    }

    /// Penultimate feature width used by feature matching.
    pub fn feature_dim(&self) -> usize {
        self.w1.shape()[1]
    }

    pub(crate) fn params(&self) -> [&Tensor<S>; 4] {
        [&self.w1, &self.b1, &self.w2, &self.b2]
    }

    pub(crate) fn params_mut(&mut self) -> [&mut Tensor<S>; 4] {
        [&mut self.w1, &mut self.b1, &mut self.w2, &mut self.b2]
    }

    /// Builds the discriminator forward. When `trainable` is false the
    /// parameters enter as plain inputs, letting gradient flow through the
    /// ops to an upstream generator without accumulating into the
    /// discriminator.
    pub(crate) fn forward<R: Rng>(
        &self,
        graph: &mut Graph<S>,
        x: NodeId,
        train: bool,
        trainable: bool,
        dropout_rng: &mut R,
    ) -> Result<DiscNodes, GanError> {
        let mut leaf = |t: &Tensor<S>| {
            if trainable {
                graph.param(t.clone())
            } else {
                graph.input(t.clone())
            }
        };
        let w1 = leaf(&self.w1);
        let b1 = leaf(&self.b1);
        let w2 = leaf(&self.w2);
        let b2 = leaf(&self.b2);
        let h = graph.matmul(x, w1)?;
        let h = graph.add_bias(h, b1)?;
        let mut features = graph.leaky_relu(h, self.leaky_slope);
        if train && self.dropout > 0.0 {
            features = graph.dropout(features, self.dropout, dropout_rng)?;
        }
        let logits = graph.matmul(features, w2)?;
        let logits = graph.add_bias(logits, b2)?;
        Ok(DiscNodes {
            params: [w1, b1, w2, b2],
            features,
            logits,
        })
    }

    /// Eval-mode penultimate features and logits.
    pub fn features_and_logits(&self, x: &Tensor<S>) -> Result<(Tensor<S>, Tensor<S>), GanError> {
        let mut graph = Graph::new();
        let xn = graph.input(x.clone());
        let mut noop = rng::stream(0, Component::Dropout);
        let nodes = self.forward(&mut graph, xn, false, false, &mut noop)?;
        Ok((
            graph.value(nodes.features).clone(),
            graph.value(nodes.logits).clone(),
        ))
    }
}

/// Node ids of one discriminator forward pass.
pub(crate) struct DiscNodes {
    pub params: [NodeId; 4],
    pub features: NodeId,
    pub logits: NodeId,
}

/// One adversarial batch: labeled and unlabeled real rows plus generated
/// rows matching the real total.
#[derive(Debug, Clone)]
pub struct GanBatch<S> {
    pub labeled: Tensor<S>,
    pub labels: Vec<u8>,
    pub unlabeled: Tensor<S>,
    pub generated: Tensor<S>,
}

impl<S: Scalar> GanBatch<S> {
    pub fn new(
        labeled: Tensor<S>,
        labels: Vec<u8>,
        unlabeled: Tensor<S>,
        generated: Tensor<S>,
    ) -> Result<Self, GanError> {
        let n_lab = labeled.shape()[0];
        let n_unlab = unlabeled.shape()[0];
        if labels.len() != n_lab {
            return Err(GanError::BadBatch(format!(
                "{n_lab} labeled rows vs {} labels",
                labels.len()
            )));
        }
        if generated.shape()[0] != n_lab + n_unlab {
            return Err(GanError::BadBatch(format!(
                "{} generated rows vs {} real",
                generated.shape()[0],
                n_lab + n_unlab
            )));
        }
        Ok(GanBatch {
            labeled,
            labels,
            unlabeled,
            generated,
        })
    }

    pub fn n_real(&self) -> usize {
        self.labeled.shape()[0] + self.unlabeled.shape()[0]
    }
}

/// The five loss components; `d_loss` fills the discriminator parts and
/// `g_loss` the generator parts, each leaving the other side at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct GanLosses<S> {
    pub d_supervised: S,
    pub d_unsup_real: S,
    pub d_unsup_fake: S,
    pub g_feature_match: S,
    pub g_unsup: S,
}

impl<S: Scalar> GanLosses<S> {
    fn zero() -> Self {
        GanLosses {
            d_supervised: S::zero(),
            d_unsup_real: S::zero(),
            d_unsup_fake: S::zero(),
            g_feature_match: S::zero(),
            g_unsup: S::zero(),
        }
    }

    fn all_finite(&self) -> bool {
        self.d_supervised.is_finite()
            && self.d_unsup_real.is_finite()
            && self.d_unsup_fake.is_finite()
            && self.g_feature_match.is_finite()
            && self.g_unsup.is_finite()
    }
}

/// Discriminator node handles for the three loss parts, shared by the
/// public value-level `d_loss` and the training step.
pub(crate) struct DLossNodes {
    pub d_supervised: Option<NodeId>,
    pub d_unsup_real: NodeId,
    pub d_unsup_fake: NodeId,
    pub disc_params: [NodeId; 4],
}

pub(crate) fn build_d_loss<S: Scalar, R: Rng>(
    disc: &Discriminator<S>,
    batch: &GanBatch<S>,
    graph: &mut Graph<S>,
    train: bool,
    dropout_rng: &mut R,
) -> Result<DLossNodes, GanError> {
    let k = disc.k;
    if let Some(&bad) = batch.labels.iter().find(|&&l| (l as usize) >= k) {
        return Err(GanError::BadLabel(bad, k));
    }
    let n_lab = batch.labeled.shape()[0];
    let n_real = batch.n_real();
    let n_fake = batch.generated.shape()[0];

    let mut stack: Vec<&Tensor<S>> = Vec::new();
    for t in [&batch.labeled, &batch.unlabeled, &batch.generated] {
        if t.shape()[0] > 0 {
            stack.push(t);
        }
    }
    let all = Tensor::vstack(&stack)?;
    let x = graph.input(all);
    let nodes = disc.forward(graph, x, train, true, dropout_rng)?;

    let d_supervised = if n_lab > 0 {
        let lab_logits = graph.slice_rows(nodes.logits, 0, n_lab)?;
        let real_classes = graph.slice_cols(lab_logits, 0, k)?;
        let targets: Vec<usize> = batch.labels.iter().map(|&l| l as usize).collect();
        Some(graph.softmax_cross_entropy(real_classes, &targets)?)
    } else {
        None
    };

    let real_logits = graph.slice_rows(nodes.logits, 0, n_real)?;
    let log_not_fake = graph.log_one_minus_softmax_col(real_logits, k)?;
    let mean_not_fake = graph.mean_all(log_not_fake);
    let d_unsup_real = graph.affine(mean_not_fake, -S::one(), S::zero());

    let fake_logits = graph.slice_rows(nodes.logits, n_real, n_real + n_fake)?;
    let log_fake = graph.log_softmax_col(fake_logits, k)?;
    let mean_fake = graph.mean_all(log_fake);
    let d_unsup_fake = graph.affine(mean_fake, -S::one(), S::zero());

    Ok(DLossNodes {
        d_supervised,
        d_unsup_real,
        d_unsup_fake,
        disc_params: nodes.params,
    })
}

/// Discriminator loss parts on one batch (eval mode, values only).
pub fn d_loss<S: Scalar>(
    disc: &Discriminator<S>,
    batch: &GanBatch<S>,
) -> Result<GanLosses<S>, GanError> {
    let mut graph = Graph::new();
    let mut noop = rng::stream(0, Component::Dropout);
    let nodes = build_d_loss(disc, batch, &mut graph, false, &mut noop)?;
    let losses = GanLosses {
        d_supervised: nodes
            .d_supervised
            .map(|n| graph.value(n).item())
            .unwrap_or_else(S::zero),
        d_unsup_real: graph.value(nodes.d_unsup_real).item(),
        d_unsup_fake: graph.value(nodes.d_unsup_fake).item(),
        ..GanLosses::zero()
    };
    if !losses.all_finite() {
        return Err(GanError::NonFinite);
    }
    Ok(losses)
}

/// Generator loss parts: squared distance between mean penultimate features
/// of real and fake rows, plus the not-fake objective on fakes (eval mode,
/// values only).
pub fn g_loss<S: Scalar>(
    disc: &Discriminator<S>,
    real_features: &Tensor<S>,
    fake_rows: &Tensor<S>,
) -> Result<GanLosses<S>, GanError> {
    if real_features.shape()[0] == 0 || fake_rows.shape()[0] == 0 {
        return Err(GanError::BadBatch("empty real or fake batch".to_string()));
    }
    let (fake_features, fake_logits) = disc.features_and_logits(fake_rows)?;

    let mut graph = Graph::<S>::new();
    let real_f = graph.input(real_features.clone());
    let fake_f = graph.input(fake_features);
    let real_mean = graph.mean_axis(real_f, 0)?;
    let fake_mean = graph.mean_axis(fake_f, 0)?;
    let real_mean2 = graph.reshape(real_mean, &[1, real_features.shape()[1]])?;
    let fake_mean2 = graph.reshape(fake_mean, &[1, real_features.shape()[1]])?;
    let diff = graph.sub(real_mean2, fake_mean2)?;
    let fm = graph.l2_sq(diff);

    let logits = graph.input(fake_logits);
    let log_not_fake = graph.log_one_minus_softmax_col(logits, disc.k)?;
    let mean_not_fake = graph.mean_all(log_not_fake);
    let g_unsup = graph.affine(mean_not_fake, -S::one(), S::zero());

    let losses = GanLosses {
        g_feature_match: graph.value(fm).item(),
        g_unsup: graph.value(g_unsup).item(),
        ..GanLosses::zero()
    };
    if !losses.all_finite() {
        return Err(GanError::NonFinite);
    }
    Ok(losses)
}

/// Predicted labels and real-class probabilities; the fake logit is
/// excluded and probabilities renormalize over the `k` real classes. Tied
/// real logits resolve to the lower index and are flagged.
#[derive(Debug, Clone, PartialEq)]
pub struct GanPrediction<S> {
    pub labels: Vec<u8>,
    pub probs: Vec<Vec<S>>,
    pub ties: Vec<usize>,
}

pub fn predict<S: Scalar>(
    disc: &Discriminator<S>,
    reps: &Tensor<S>,
) -> Result<GanPrediction<S>, GanError> {
    let (_, logits) = disc.features_and_logits(reps)?;
    let k = disc.k;
    let mut labels = Vec::with_capacity(logits.n_rows());
    let mut probs = Vec::with_capacity(logits.n_rows());
    let mut ties = Vec::new();
    for i in 0..logits.n_rows() {
        let row = &logits.row(i)[..k];
        let mut best = 0usize;
        let mut tied = false;
        for (j, v) in row.iter().enumerate().skip(1) {
            if *v > row[best] {
                best = j;
                tied = false;
            } else if *v == row[best] {
                tied = true;
            }
        }
        if tied {
            ties.push(i);
        }
        labels.push(best as u8);
        let max = row.iter().copied().fold(S::neg_infinity(), S::max);
        let exp: Vec<S> = row.iter().map(|v| (*v - max).exp()).collect();
        let z: S = exp.iter().copied().sum();
        probs.push(exp.into_iter().map(|e| e / z).collect());
    }
    Ok(GanPrediction { labels, probs, ties })
}

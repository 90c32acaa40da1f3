//! Exact t-SNE (no tree approximation).
//!
//! Per-row Gaussian bandwidths are found by binary search on the entropy so
//! each row hits the target perplexity; the 2-D embedding minimizes
//! KL(P‖Q) by gradient descent with momentum and early exaggeration.
//! Everything is O(n²), which is the point: the gradient stays checkable.

use std::io::Write;

use crate::autodiff::Tensor;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::EvalError;

/// Floor applied to Q entries inside logs and ratios.
const Q_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub iterations: usize,
    pub learning_rate: f64,
    pub momentum_start: f64,
    pub momentum_final: f64,
    /// Iteration at which momentum switches to its final value.
    pub momentum_switch_iter: usize,
    pub early_exaggeration: f64,
    pub exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        TsneConfig {
            perplexity: 30.0,
            iterations: 1000,
            learning_rate: 200.0,
            momentum_start: 0.5,
            momentum_final: 0.8,
            momentum_switch_iter: 250,
            early_exaggeration: 12.0,
            exaggeration_iters: 250,
            seed: 0,
        }
    }
}

fn validate<S: Scalar>(points: &Tensor<S>, config: &TsneConfig) -> Result<usize, EvalError> {
    if points.shape().len() != 2 {
        return Err(EvalError::BadConfig(format!(
            "points must be rank 2, got {:?}",
            points.shape()
        )));
    }
    let n = points.shape()[0];
    if config.perplexity < 2.0 {
        return Err(EvalError::BadConfig(format!(
            "perplexity {} < 2",
            config.perplexity
        )));
    }
    if (n as f64) <= 3.0 * config.perplexity {
        return Err(EvalError::BadConfig(format!(
            "need n > 3 * perplexity, got n={n}, perplexity={}",
            config.perplexity
        )));
    }
    if !points.all_finite() {
        return Err(EvalError::NonFinite);
    }
    Ok(n)
}

fn pairwise_sq_dists<S: Scalar>(points: &Tensor<S>) -> Vec<S> {
    let n = points.shape()[0];
    let d = points.shape()[1];
    let data = points.data();
    let mut dists = vec![S::zero(); n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = S::zero();
            for k in 0..d {
                let diff = data[i * d + k] - data[j * d + k];
                acc += diff * diff;
            }
            dists[i * n + j] = acc;
            dists[j * n + i] = acc;
        }
    }
    dists
}

/// Row-stochastic conditional affinities `P(j|i)` with each row's Gaussian
/// bandwidth found by binary search so the row entropy matches
/// `ln(perplexity)`. Returns the flat n×n matrix (diagonal zero) and the
/// per-row precisions.
pub fn conditional_affinities<S: Scalar>(
    points: &Tensor<S>,
    perplexity: f64,
) -> Result<(Vec<S>, Vec<S>), EvalError> {
    let config = TsneConfig {
        perplexity,
        ..TsneConfig::default()
    };
    let n = validate(points, &config)?;
    let dists = pairwise_sq_dists(points);
    let target_entropy = perplexity.ln();

    let mut p = vec![S::zero(); n * n];
    let mut betas = vec![S::one(); n];
    let mut weights = vec![S::zero(); n];
    for i in 0..n {
        let row = &dists[i * n..(i + 1) * n];
        // Shift by the smallest off-diagonal distance so exp never
        // underflows the whole row.
        let mut d_min = S::infinity();
        for (j, dv) in row.iter().enumerate() {
            if j != i && *dv < d_min {
                d_min = *dv;
            }
        }
        let mut beta = 1.0f64;
        let mut beta_lo = f64::NEG_INFINITY;
        let mut beta_hi = f64::INFINITY;
        for _ in 0..200 {
            let beta_s = S::from_f64_lossy(beta);
            let mut z = S::zero();
            let mut weighted = S::zero();
            for (j, dv) in row.iter().enumerate() {
                if j == i {
                    weights[j] = S::zero();
                    continue;
                }
                let shifted = *dv - d_min;
                let w = (-beta_s * shifted).exp();
                weights[j] = w;
                z += w;
                weighted += shifted * w;
            }
            let entropy = (z.ln() + beta_s * weighted / z).to_f64().unwrap_or(f64::NAN);
            let diff = entropy - target_entropy;
            if diff.abs() < 1e-9 {
                break;
            }
            if diff > 0.0 {
                beta_lo = beta;
                beta = if beta_hi.is_finite() {
                    (beta + beta_hi) / 2.0
                } else {
                    beta * 2.0
                };
            } else {
                beta_hi = beta;
                beta = if beta_lo.is_finite() {
                    (beta + beta_lo) / 2.0
                } else {
                    beta / 2.0
                };
            }
        }
        let z: S = weights.iter().copied().sum();
        for j in 0..n {
            p[i * n + j] = weights[j] / z;
        }
        betas[i] = S::from_f64_lossy(beta);
    }
    Ok((p, betas))
}

/// Symmetrized joint affinities `P = (P(j|i) + P(i|j)) / (2n)`; the matrix
/// sums to 1.
pub fn joint_affinities<S: Scalar>(
    points: &Tensor<S>,
    perplexity: f64,
) -> Result<Vec<S>, EvalError> {
    let (cond, _) = conditional_affinities(points, perplexity)?;
    let n = points.shape()[0];
    let scale = S::one() / (S::from_usize_lossy(n) + S::from_usize_lossy(n));
    let mut joint = vec![S::zero(); n * n];
    for i in 0..n {
        for j in 0..n {
            joint[i * n + j] = (cond[i * n + j] + cond[j * n + i]) * scale;
        }
    }
    Ok(joint)
}

/// Student-t weights `w = 1/(1+d²)` and their total over i≠j.
fn student_weights<S: Scalar>(y: &Tensor<S>) -> (Vec<S>, S) {
    let n = y.shape()[0];
    let c = y.shape()[1];
    let data = y.data();
    let mut w = vec![S::zero(); n * n];
    let mut z = S::zero();
    for i in 0..n {
        for j in (i + 1)..n {
            let mut acc = S::zero();
            for k in 0..c {
                let diff = data[i * c + k] - data[j * c + k];
                acc += diff * diff;
            }
            let wij = S::one() / (S::one() + acc);
            w[i * n + j] = wij;
            w[j * n + i] = wij;
            z += wij + wij;
        }
    }
    (w, z)
}

/// `KL(P ‖ Q)` of the joint affinities against the Student-t affinities of
/// the embedding `y`.
pub fn kl_divergence<S: Scalar>(p: &[S], y: &Tensor<S>) -> S {
    let n = y.shape()[0];
    let (w, z) = student_weights(y);
    let floor = S::from_f64_lossy(Q_FLOOR);
    let mut kl = S::zero();
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let pij = p[i * n + j];
            if pij > S::zero() {
                let qij = (w[i * n + j] / z).max(floor);
                kl += pij * (pij / qij).ln();
            }
        }
    }
    kl
}

/// Exact KL gradient: `dC/dy_i = 4 Σ_j (p_ij − q_ij) w_ij (y_i − y_j)`.
pub fn kl_gradient<S: Scalar>(p: &[S], y: &Tensor<S>) -> Tensor<S> {
    let n = y.shape()[0];
    let c = y.shape()[1];
    let data = y.data();
    let (w, z) = student_weights(y);
    let four = S::from_f64_lossy(4.0);
    let mut grad = vec![S::zero(); n * c];
    for i in 0..n {
        for j in 0..n {
            if i == j {
                continue;
            }
            let wij = w[i * n + j];
            let qij = wij / z;
            let factor = four * (p[i * n + j] - qij) * wij;
            for k in 0..c {
                grad[i * c + k] += factor * (data[i * c + k] - data[j * c + k]);
            }
        }
    }
    Tensor::from_vec(vec![n, c], grad).expect("gradient shape")
}

/// Projects `points` (n×d) to n×2 by exact t-SNE. Deterministic per seed.
pub fn tsne<S: Scalar>(points: &Tensor<S>, config: &TsneConfig) -> Result<Tensor<S>, EvalError> {
    let n = validate(points, config)?;
    let joint = joint_affinities(points, config.perplexity)?;

    let mut rng = rng::stream(config.seed, Component::Init);
    let mut y = Tensor::<S>::randn(&[n, 2], S::from_f64_lossy(1e-4), &mut rng);
    let mut velocity = vec![S::zero(); n * 2];
    let lr = S::from_f64_lossy(config.learning_rate);
    let exaggeration = S::from_f64_lossy(config.early_exaggeration);

    let mut p = joint.clone();
    let exaggerate = config.exaggeration_iters.min(config.iterations);
    for v in &mut p {
        *v *= exaggeration;
    }

    for iter in 0..config.iterations {
        if iter == exaggerate {
            p.copy_from_slice(&joint);
        }
        let momentum = if iter < config.momentum_switch_iter {
            config.momentum_start
        } else {
            config.momentum_final
        };
        let momentum = S::from_f64_lossy(momentum);
        let grad = kl_gradient(&p, &y);
        for (idx, v) in velocity.iter_mut().enumerate() {
            *v = momentum * *v - lr * grad.data()[idx];
            y.data_mut()[idx] += *v;
        }
        // Recentre to keep coordinates bounded.
        for k in 0..2 {
            let mean = (0..n).map(|i| y.data()[i * 2 + k]).sum::<S>() / S::from_usize_lossy(n);
            for i in 0..n {
                y.data_mut()[i * 2 + k] -= mean;
            }
        }
    }
    Ok(y)
}

/// Writes `x,y,label` rows for external plotting.
pub fn write_tsne_csv<S: Scalar, W: Write>(
    embedding: &Tensor<S>,
    labels: &[u8],
    mut writer: W,
) -> std::io::Result<()> {
    writeln!(writer, "x,y,label")?;
    for i in 0..embedding.shape()[0] {
        let row = embedding.row(i);
        let label = labels
            .get(i)
            .map(|l| l.to_string())
            .unwrap_or_default();
        writeln!(writer, "{},{},{label}", row[0], row[1])?;
    }
    Ok(())
}

//! Adam and AdamW optimizers.

use crate::scalar::Scalar;

use super::{GraphError, Tensor};

/// Whether weight decay couples into the gradient (classic Adam's L2) or
/// applies decoupled on the parameter (AdamW).
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DecayMode {
    /// No decay handling inside the optimizer.
    Adam,
    /// Decoupled decay: `param -= lr * weight_decay * param`.
    AdamW,
}

/// Optimizer hyperparameters.
#[derive(Debug, Clone, Copy)]
pub struct AdamConfig<S> {
    pub beta1: S,
    pub beta2: S,
    pub eps: S,
    pub weight_decay: S,
    pub mode: DecayMode,
}

impl<S: Scalar> AdamConfig<S> {
    pub fn adam() -> Self {
        AdamConfig {
            beta1: S::from_f64_lossy(0.9),
            beta2: S::from_f64_lossy(0.999),
            eps: S::from_f64_lossy(1e-8),
            weight_decay: S::zero(),
            mode: DecayMode::Adam,
        }
    }

    pub fn adamw(weight_decay: S) -> Self {
        AdamConfig {
            weight_decay,
            mode: DecayMode::AdamW,
            ..Self::adam()
        }
    }
}

/// Per-parameter first/second moment state with bias-corrected updates.
#[derive(Debug, Clone)]
pub struct OptimizerState<S> {
    config: AdamConfig<S>,
    first: Vec<Tensor<S>>,
    second: Vec<Tensor<S>>,
    step: u64,
}

impl<S: Scalar> OptimizerState<S> {
    /// Allocates moment slots matching the given parameter shapes.
    pub fn new(config: AdamConfig<S>, params: &[&Tensor<S>]) -> Self {
        OptimizerState {
            config,
            first: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            second: params.iter().map(|p| Tensor::zeros(p.shape())).collect(),
            step: 0,
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// One bias-corrected update over all parameters. A missing gradient
    /// slot (`None`) means that parameter took no part in the loss; its
    /// moments still decay and AdamW decay still applies.
    ///
    /// Fails fast on any non-finite gradient.
    pub fn step(
        &mut self,
        params: &mut [&mut Tensor<S>],
        grads: &[Option<&Tensor<S>>],
        lr: S,
    ) -> Result<(), GraphError> {
        assert_eq!(params.len(), self.first.len(), "parameter count changed");
        assert_eq!(params.len(), grads.len(), "gradient count mismatch");
        for grad in grads.iter().flatten() {
            if !grad.all_finite() {
                return Err(GraphError::NonFinite { op: "adam_step" });
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let bias1 = S::one() - c.beta1.powi(t);
        let bias2 = S::one() - c.beta2.powi(t);
        let zero = Tensor::zeros(&[0]);
        for (i, param) in params.iter_mut().enumerate() {
            let grad: &Tensor<S> = grads[i].unwrap_or(&zero);
            let m = self.first[i].data_mut();
            let v = self.second[i].data_mut();
            let p = param.data_mut();
            for j in 0..p.len() {
                let g = if grad.numel() == 0 { S::zero() } else { grad.data()[j] };
                m[j] = c.beta1 * m[j] + (S::one() - c.beta1) * g;
                v[j] = c.beta2 * v[j] + (S::one() - c.beta2) * g * g;
                let m_hat = m[j] / bias1;
                let v_hat = v[j] / bias2;
                p[j] = p[j] - lr * m_hat / (v_hat.sqrt() + c.eps);
                if c.mode == DecayMode::AdamW {
                    p[j] = p[j] - lr * c.weight_decay * p[j];
                }
            }
        }
        Ok(())
    }
}

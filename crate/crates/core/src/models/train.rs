//! Generic supervised training loop with best-validation selection.

use rand::seq::SliceRandom;

use crate::autodiff::LrSchedule;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::ModelError;

/// Learning-rate policy selector resolved against the run's total steps.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ScheduleKind {
    OneCycle,
    /// Linear warmup over the given fraction of total steps, then constant.
    LinearWarmup(f64),
    Constant,
}

/// Per-run training hyperparameters.
#[derive(Debug, Clone)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub max_lr: f64,
    pub schedule: ScheduleKind,
    /// L2 penalty (logistic regression only).
    pub l2: f64,
    pub dropout: f64,
    pub seed: u64,
    /// Optional (class 0, class 1) loss weights; unweighted when absent.
    pub class_weights: Option<[f64; 2]>,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            epochs: 40,
            batch_size: 64,
            max_lr: 2e-5,
            schedule: ScheduleKind::OneCycle,
            l2: 1e-4,
            dropout: 0.2,
            seed: 0,
            class_weights: None,
        }
    }
}

impl TrainConfig {
    pub fn build_schedule(&self, total_steps: usize) -> Result<LrSchedule, ModelError> {
        Ok(match self.schedule {
            ScheduleKind::OneCycle => LrSchedule::one_cycle(self.max_lr, total_steps)?,
            ScheduleKind::LinearWarmup(frac) => {
                let warmup = ((total_steps as f64) * frac).round() as usize;
                LrSchedule::linear_warmup(self.max_lr, total_steps, warmup.min(total_steps))?
            }
            ScheduleKind::Constant => LrSchedule::constant(self.max_lr, total_steps),
        })
    }
}

/// One epoch's summary.
#[derive(Debug, Clone, PartialEq)]
pub struct EpochStats<S> {
    pub epoch: usize,
    pub train_loss: S,
    pub valid_f1: Option<S>,
}

/// Full run record: per-epoch stats plus the flat per-batch loss sequence.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainHistory<S> {
    pub epochs: Vec<EpochStats<S>>,
    pub batch_losses: Vec<S>,
    /// Epoch whose parameters were returned, when validation ran.
    pub best_epoch: Option<usize>,
}

impl<S> TrainHistory<S> {
    fn empty() -> Self {
        TrainHistory {
            epochs: Vec::new(),
            batch_losses: Vec::new(),
            best_epoch: None,
        }
    }
}

/// One model's hooks into the shared epoch loop.
pub trait EpochTrainer<S: Scalar> {
    type Model: Clone;

    /// Copy of the current parameters.
    fn snapshot(&self) -> Self::Model;

    fn n_train(&self) -> usize;

    /// One optimizer step over the given training rows; returns the batch loss.
    fn train_step(&mut self, batch: &[usize], lr: S) -> Result<S, ModelError>;

    /// Positive-class F1 on the validation split, `None` when the trainer
    /// has no validation data.
    fn validate(&self) -> Result<Option<S>, ModelError>;
}

/// Epoch loop: shuffled mini-batches, schedule-driven learning rate, and
/// per-epoch validation F1. Returns the parameters of the best-validation
/// epoch (ties keep the earlier epoch), or the final parameters when no
/// validation exists. Zero epochs returns the initial parameters untouched.
pub fn run_training<S: Scalar, T: EpochTrainer<S>>(
    trainer: &mut T,
    config: &TrainConfig,
) -> Result<(T::Model, TrainHistory<S>), ModelError> {
    let n = trainer.n_train();
    if n == 0 {
        return Err(ModelError::EmptySplit("train"));
    }
    if config.batch_size == 0 {
        return Err(ModelError::BadConfig("batch_size 0".to_string()));
    }
    if config.epochs == 0 {
        return Ok((trainer.snapshot(), TrainHistory::empty()));
    }

    let batches_per_epoch = n.div_ceil(config.batch_size);
    let total_steps = config.epochs * batches_per_epoch;
    let schedule = config.build_schedule(total_steps)?;
    let mut shuffle_rng = rng::stream(config.seed, Component::Shuffle);

    let mut history = TrainHistory::empty();
    let mut best: Option<(S, usize, T::Model)> = None;
    let mut indices: Vec<usize> = (0..n).collect();
    let mut step = 0usize;

    for epoch in 0..config.epochs {
        indices.shuffle(&mut shuffle_rng);
        let mut epoch_loss = S::zero();
        let mut batches = 0usize;
        for batch in indices.chunks(config.batch_size) {
            let lr = S::from_f64_lossy(schedule.lr_at(step)?);
            let loss = trainer.train_step(batch, lr)?;
            history.batch_losses.push(loss);
            epoch_loss += loss;
            batches += 1;
            step += 1;
        }
        let train_loss = epoch_loss / S::from_usize_lossy(batches);
        let valid_f1 = trainer.validate()?;
        if let Some(f1) = valid_f1 {
            let better = match &best {
                Some((best_f1, _, _)) => f1 > *best_f1,
                None => true,
            };
            if better {
                best = Some((f1, epoch, trainer.snapshot()));
            }
        }
        history.epochs.push(EpochStats {
            epoch,
            train_loss,
            valid_f1,
        });
    }

    match best {
        Some((_, epoch, model)) => {
            history.best_epoch = Some(epoch);
            Ok((model, history))
        }
        None => Ok((trainer.snapshot(), history)),
    }
}

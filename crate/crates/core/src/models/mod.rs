//! Supervised classifiers and the shared training loop.
//!
//! Logistic regression and random forests consume sparse
//! [`FeatureMatrix`](crate::features::FeatureMatrix) rows; the CNN and
//! BiGRU-attention models consume padded token-id sequences over a frozen
//! embedding matrix; the MLP consumes dense encoder outputs. All
//! gradient-trained models share [`run_training`], which drives epochs,
//! schedule-controlled Adam steps, and best-validation checkpointing.

mod bigru;
mod cnn;
mod encoder;
mod forest;
mod logreg;
mod mlp;
mod train;

pub use bigru::{bigru_attn_forward, BiGruAttnModel, BiGruTrainer, GruDirection};
pub use cnn::{cnn_forward, CnnModel, CnnTrainer};
pub use encoder::{FrozenEncoder, TokenIndex};
pub use forest::{
    train_random_forest, DecisionTree, FeatureSubsample, Forest, ForestConfig, TreeNode,
};
pub use logreg::{logreg_loss_and_grad, train_logreg, LinearModel, LogregTrainer};
pub use mlp::{MlpModel, MlpTrainer};
pub use train::{run_training, EpochStats, EpochTrainer, ScheduleKind, TrainConfig, TrainHistory};

use thiserror::Error;

use crate::autodiff::{GraphError, ScheduleError};
use crate::eval::EvalError;
use crate::features::FeatureError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error(transparent)]
    Graph(#[from] GraphError),
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
    #[error(transparent)]
    Eval(#[from] EvalError),
    #[error(transparent)]
    Feature(#[from] FeatureError),
    #[error("training set contains a single class")]
    SingleClass,
    #[error("empty {0} split")]
    EmptySplit(&'static str),
    #[error("invalid configuration: {0}")]
    BadConfig(String),
    #[error("title length {len} shorter than max filter width {need}")]
    TitleTooShort { len: usize, need: usize },
}

/// Argmax over a logit row; the lower class index wins ties.
pub(crate) fn argmax_row<S: crate::scalar::Scalar>(row: &[S]) -> u8 {
    let mut best = 0usize;
    for (i, v) in row.iter().enumerate().skip(1) {
        if *v > row[best] {
            best = i;
        }
    }
    best as u8
}

/// Checks that binary labels contain both classes.
pub(crate) fn require_two_classes(labels: &[u8]) -> Result<(), ModelError> {
    if labels.is_empty() {
        return Err(ModelError::EmptySplit("train"));
    }
    let first = labels[0];
    if labels.iter().all(|&l| l == first) {
        return Err(ModelError::SingleClass);
    }
    Ok(())
}

//! Dense-tensor reverse-mode differentiation with optimizers and schedules.
//!
//! The [`Graph`] is a per-forward-pass tape: parameters enter as leaves,
//! ops record values eagerly, and [`Graph::backward`] fills gradient slots
//! by reverse accumulation. [`OptimizerState`] applies Adam/AdamW updates
//! outside the graph, and [`LrSchedule`] drives the step size.

mod checkpoint;
mod graph;
mod optim;
mod schedule;
mod tensor;

pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint};
pub use graph::{Graph, GraphError, NodeId};
pub use optim::{AdamConfig, DecayMode, OptimizerState};
pub use schedule::{LrSchedule, ScheduleError};
pub use tensor::Tensor;

//! Learning-rate schedules: 1cycle and linear warmup.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum ScheduleError {
    #[error("step {step} outside 0..{total}")]
    StepOutOfRange { step: usize, total: usize },
    #[error("invalid schedule: {0}")]
    Invalid(String),
}

/// Learning-rate policy over a fixed number of steps.
#[derive(Debug, Clone, PartialEq)]
pub enum LrSchedule {
    /// Linear rise from `max_lr / div_factor` to `max_lr` over the first
    /// `pct_start` fraction of steps, then cosine decay down to
    /// `max_lr / final_div_factor` at the last step.
    OneCycle {
        max_lr: f64,
        total_steps: usize,
        pct_start: f64,
        div_factor: f64,
        final_div_factor: f64,
    },
    /// Linear 0 → `max_lr` over `warmup_steps`, then constant.
    LinearWarmup {
        max_lr: f64,
        total_steps: usize,
        warmup_steps: usize,
    },
    /// Constant rate (0-warmup edge case and plain-Adam runs).
    Constant { max_lr: f64, total_steps: usize },
}

impl LrSchedule {
    /// 1cycle with the pinned defaults: pct_start 0.3, div_factor 25,
    /// final_div_factor 1e4.
    pub fn one_cycle(max_lr: f64, total_steps: usize) -> Result<Self, ScheduleError> {
        Self::one_cycle_with(max_lr, total_steps, 0.3, 25.0, 1e4)
    }

    pub fn one_cycle_with(
        max_lr: f64,
        total_steps: usize,
        pct_start: f64,
        div_factor: f64,
        final_div_factor: f64,
    ) -> Result<Self, ScheduleError> {
        if max_lr <= 0.0 || total_steps == 0 {
            return Err(ScheduleError::Invalid(format!(
                "max_lr {max_lr}, total_steps {total_steps}"
            )));
        }
        if !(0.0..=1.0).contains(&pct_start) || div_factor < 1.0 || final_div_factor < 1.0 {
            return Err(ScheduleError::Invalid(format!(
                "pct_start {pct_start}, div {div_factor}, final_div {final_div_factor}"
            )));
        }
        Ok(LrSchedule::OneCycle {
            max_lr,
            total_steps,
            pct_start,
            div_factor,
            final_div_factor,
        })
    }

    pub fn linear_warmup(
        max_lr: f64,
        total_steps: usize,
        warmup_steps: usize,
    ) -> Result<Self, ScheduleError> {
        if max_lr <= 0.0 || total_steps == 0 {
            return Err(ScheduleError::Invalid(format!(
                "max_lr {max_lr}, total_steps {total_steps}"
            )));
        }
        if warmup_steps == 0 {
            return Ok(LrSchedule::Constant { max_lr, total_steps });
        }
        Ok(LrSchedule::LinearWarmup {
            max_lr,
            total_steps,
            warmup_steps,
        })
    }

    pub fn constant(max_lr: f64, total_steps: usize) -> Self {
        LrSchedule::Constant { max_lr, total_steps }
    }

    pub fn total_steps(&self) -> usize {
        match self {
            LrSchedule::OneCycle { total_steps, .. }
            | LrSchedule::LinearWarmup { total_steps, .. }
            | LrSchedule::Constant { total_steps, .. } => *total_steps,
        }
    }

    /// Learning rate at `step`, which must lie in `0..total_steps`.
    pub fn lr_at(&self, step: usize) -> Result<f64, ScheduleError> {
        let total = self.total_steps();
        if step >= total {
            return Err(ScheduleError::StepOutOfRange { step, total });
        }
        Ok(match *self {
            LrSchedule::OneCycle {
                max_lr,
                total_steps,
                pct_start,
                div_factor,
                final_div_factor,
            } => {
                let start_lr = max_lr / div_factor;
                let final_lr = max_lr / final_div_factor;
                let peak = ((total_steps as f64) * pct_start).floor() as usize;
                let last = total_steps - 1;
                if step == peak {
                    max_lr
                } else if step < peak {
                    // lerp form keeps both endpoints exact
                    let t = step as f64 / peak as f64;
                    start_lr * (1.0 - t) + max_lr * t
                } else if step == last {
                    final_lr
                } else {
                    let t = (step - peak) as f64 / (last - peak) as f64;
                    final_lr + (max_lr - final_lr) * 0.5 * (1.0 + (std::f64::consts::PI * t).cos())
                }
            }
            LrSchedule::LinearWarmup {
                max_lr,
                warmup_steps,
                ..
            } => {
                if step >= warmup_steps {
                    max_lr
                } else {
                    max_lr * step as f64 / warmup_steps as f64
                }
            }
            LrSchedule::Constant { max_lr, .. } => max_lr,
        })
    }
}

//! Adversarial training loop.
//!
//! Per batch: encode-side real rows (labeled + unlabeled at the corpus
//! mixing ratio, at least one labeled row per batch), an equal count of
//! generated rows, one discriminator update, then a fresh forward for the
//! generator update. Both networks share the same AdamW learning rate under
//! a linear warmup schedule. The discriminator returned is the one with the
//! best validation F1.

use rand::seq::SliceRandom;

use crate::autodiff::{AdamConfig, Graph, LrSchedule, OptimizerState, Tensor};
use crate::corpus::Corpus;
use crate::eval::classification_report;
use crate::models::FrozenEncoder;
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::{build_d_loss, Discriminator, GanBatch, GanError, Generator};

#[derive(Debug, Clone)]
pub struct GanTrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub max_lr: f64,
    /// Warmup length as a fraction of total steps.
    pub warmup_frac: f64,
    pub weight_decay: f64,
    pub seed: u64,
    /// With adversarial off, the discriminator trains on the supervised
    /// term alone and the generator never steps; the run reduces to plain
    /// supervised training on the labeled rows.
    pub adversarial: bool,
}

impl Default for GanTrainConfig {
    fn default() -> Self {
        GanTrainConfig {
            epochs: 20,
            batch_size: 64,
            max_lr: 1e-5,
            warmup_frac: 0.1,
            weight_decay: 0.01,
            seed: 0,
            adversarial: true,
        }
    }
}

/// Mean loss components over one epoch.
#[derive(Debug, Clone, PartialEq)]
pub struct GanEpochStats<S> {
    pub epoch: usize,
    pub d_supervised: S,
    pub d_unsup_real: S,
    pub d_unsup_fake: S,
    pub g_feature_match: S,
    pub g_unsup: S,
    pub valid_f1: Option<S>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GanHistory<S> {
    pub epochs: Vec<GanEpochStats<S>>,
    /// Supervised-term loss of every discriminator step, in order.
    pub d_sup_batch_losses: Vec<S>,
    pub best_epoch: Option<usize>,
}

impl<S: Scalar> GanHistory<S> {
    /// Writes the per-epoch history as CSV.
    pub fn write_csv<W: std::io::Write>(&self, mut writer: W) -> std::io::Result<()> {
        writeln!(
            writer,
            "epoch,d_sup,d_unsup_real,d_unsup_fake,g_fm,g_unsup,valid_f1"
        )?;
        for e in &self.epochs {
            let f1 = e
                .valid_f1
                .map(|v| v.to_string())
                .unwrap_or_default();
            writeln!(
                writer,
                "{},{},{},{},{},{},{f1}",
                e.epoch, e.d_supervised, e.d_unsup_real, e.d_unsup_fake, e.g_feature_match, e.g_unsup
            )?;
        }
        Ok(())
    }
}

/// Adversarial training over precomputed representations.
pub fn train_ssgan_reps<S: Scalar>(
    mut gen: Generator<S>,
    mut disc: Discriminator<S>,
    labeled: &Tensor<S>,
    labels: &[u8],
    unlabeled: &Tensor<S>,
    valid: Option<(&Tensor<S>, &[u8])>,
    config: &GanTrainConfig,
) -> Result<(Discriminator<S>, Generator<S>, GanHistory<S>), GanError> {
    let n_lab = labeled.shape()[0];
    let n_unlab = unlabeled.shape()[0];
    if n_lab == 0 || labels.len() != n_lab {
        return Err(GanError::EmptyLabeled);
    }
    if config.batch_size == 0 {
        return Err(GanError::BadBatch("batch_size 0".to_string()));
    }

    let batch = config.batch_size;
    // Corpus-level mixing ratio, at least one labeled row per batch. With
    // no unlabeled pool the batch is all labeled and the last one partial.
    let lab_per_batch = if n_unlab == 0 {
        batch
    } else {
        let exact = (batch as f64 * n_lab as f64 / (n_lab + n_unlab) as f64).round() as usize;
        exact.clamp(1, batch)
    };
    let unlab_per_batch = batch - lab_per_batch;
    let steps_per_epoch = if n_unlab == 0 {
        n_lab.div_ceil(batch)
    } else if unlab_per_batch == 0 {
        n_lab.div_ceil(lab_per_batch)
    } else {
        n_unlab.div_ceil(unlab_per_batch)
    };
    let total_steps = config.epochs * steps_per_epoch;

    let mut history = GanHistory {
        epochs: Vec::new(),
        d_sup_batch_losses: Vec::new(),
        best_epoch: None,
    };
    if config.epochs == 0 {
        return Ok((disc, gen, history));
    }

    let schedule = LrSchedule::linear_warmup(
        config.max_lr,
        total_steps,
        ((total_steps as f64) * config.warmup_frac).round() as usize,
    )?;
    let wd = S::from_f64_lossy(config.weight_decay);
    let mut disc_opt = OptimizerState::new(AdamConfig::adamw(wd), &disc.params());
    let mut gen_opt = OptimizerState::new(AdamConfig::adamw(wd), &gen.params());

    let mut shuffle_rng = rng::stream(config.seed, Component::Shuffle);
    let mut dropout_rng = rng::stream(config.seed, Component::Dropout);
    let mut noise_rng = rng::stream(config.seed, Component::Noise);

    let mut best: Option<(S, usize, Discriminator<S>)> = None;
    let mut step = 0usize;
    let mut lab_order: Vec<usize> = (0..n_lab).collect();
    let mut unlab_order: Vec<usize> = (0..n_unlab).collect();

    for epoch in 0..config.epochs {
        lab_order.shuffle(&mut shuffle_rng);
        if n_unlab > 0 {
            unlab_order.shuffle(&mut shuffle_rng);
        }

        let mut sums = [S::zero(); 5];
        let mut lab_cursor = 0usize;
        for step_in_epoch in 0..steps_per_epoch {
            // Labeled rows: consume sequentially, cycling when the pool is
            // smaller than the epoch demands; without an unlabeled pool the
            // final batch is partial instead.
            let lab_idx: Vec<usize> = if n_unlab == 0 {
                let lo = step_in_epoch * batch;
                let hi = ((step_in_epoch + 1) * batch).min(n_lab);
                lab_order[lo..hi].to_vec()
            } else {
                (0..lab_per_batch)
                    .map(|_| {
                        let idx = lab_order[lab_cursor % n_lab];
                        lab_cursor += 1;
                        idx
                    })
                    .collect()
            };
            let unlab_idx: Vec<usize> = if n_unlab == 0 {
                Vec::new()
            } else {
                let lo = step_in_epoch * unlab_per_batch;
                let hi = ((step_in_epoch + 1) * unlab_per_batch).min(n_unlab);
                unlab_order[lo..hi].iter().copied().collect()
            };

            let lab_rows = labeled.select_rows(&lab_idx);
            let lab_labels: Vec<u8> = lab_idx.iter().map(|&i| labels[i]).collect();
            let unlab_rows = if n_unlab == 0 {
                Tensor::zeros(&[0, labeled.shape()[1]])
            } else {
                unlabeled.select_rows(&unlab_idx)
            };
            let n_real = lab_rows.shape()[0] + unlab_rows.shape()[0];

            let lr = S::from_f64_lossy(schedule.lr_at(step)?);
            step += 1;

            // Discriminator step. Fakes are detached values.
            let fakes = if config.adversarial {
                let noise = gen.sample_noise(n_real, &mut noise_rng);
                let mut g = Graph::new();
                let z = g.input(noise);
                let (_, out) = gen.forward(&mut g, z, true, &mut dropout_rng)?;
                g.value(out).clone()
            } else {
                Tensor::zeros(&[n_real, labeled.shape()[1]])
            };
            let gan_batch = GanBatch::new(lab_rows.clone(), lab_labels, unlab_rows, fakes)?;

            let mut g = Graph::new();
            let nodes = build_d_loss(&disc, &gan_batch, &mut g, true, &mut dropout_rng)?;
            let d_sup_node = nodes.d_supervised.expect("labeled rows present");
            let total = if config.adversarial {
                let unsup = g.add(nodes.d_unsup_real, nodes.d_unsup_fake)?;
                g.add(d_sup_node, unsup)?
            } else {
                d_sup_node
            };
            g.backward(total)?;
            let d_sup_val = g.value(d_sup_node).item();
            let d_real_val = g.value(nodes.d_unsup_real).item();
            let d_fake_val = g.value(nodes.d_unsup_fake).item();
            if !g.value(total).item().is_finite() {
                return Err(GanError::NonFinite);
            }
            {
                let grads: Vec<Option<&Tensor<S>>> =
                    nodes.disc_params.iter().map(|p| g.grad(*p)).collect();
                disc_opt.step(&mut disc.params_mut(), &grads, lr)?;
            }
            history.d_sup_batch_losses.push(d_sup_val);
            sums[0] += d_sup_val;
            sums[1] += d_real_val;
            sums[2] += d_fake_val;

            // Generator step on a fresh forward against the updated
            // discriminator.
            if config.adversarial {
                let noise = gen.sample_noise(n_real, &mut noise_rng);
                let mut g = Graph::new();
                let z = g.input(noise);
                let (gen_params, fake) = gen.forward(&mut g, z, true, &mut dropout_rng)?;
                let fake_nodes = disc.forward(&mut g, fake, true, false, &mut dropout_rng)?;

                let real_in = g.input(lab_rows.clone());
                // Real rows through the same (frozen) discriminator for the
                // feature-matching target.
                let real_nodes = disc.forward(&mut g, real_in, true, false, &mut dropout_rng)?;
                let real_mean = g.mean_axis(real_nodes.features, 0)?;
                let fake_mean = g.mean_axis(fake_nodes.features, 0)?;
                let width = disc.feature_dim();
                let real_mean = g.reshape(real_mean, &[1, width])?;
                let fake_mean = g.reshape(fake_mean, &[1, width])?;
                let diff = g.sub(real_mean, fake_mean)?;
                let fm = g.l2_sq(diff);

                let log_not_fake = g.log_one_minus_softmax_col(fake_nodes.logits, disc.k)?;
                let mean_not_fake = g.mean_all(log_not_fake);
                let g_unsup = g.affine(mean_not_fake, -S::one(), S::zero());

                let total = g.add(fm, g_unsup)?;
                g.backward(total)?;
                if !g.value(total).item().is_finite() {
                    return Err(GanError::NonFinite);
                }
                let grads: Vec<Option<&Tensor<S>>> =
                    gen_params.iter().map(|p| g.grad(*p)).collect();
                gen_opt.step(&mut gen.params_mut(), &grads, lr)?;
                sums[3] += g.value(fm).item();
                sums[4] += g.value(g_unsup).item();
            }
        }

        let inv = S::one() / S::from_usize_lossy(steps_per_epoch);
        let valid_f1 = match valid {
            Some((vx, vy)) => {
                let pred = super::predict(&disc, vx)?;
                let report = classification_report(vy, &pred.labels)?;
                Some(S::from_f64_lossy(report.positive_f1()))
            }
            None => None,
        };
        if let Some(f1) = valid_f1 {
            let better = match &best {
                Some((best_f1, _, _)) => f1 > *best_f1,
                None => true,
            };
            if better {
                best = Some((f1, epoch, disc.clone()));
            }
        }
        history.epochs.push(GanEpochStats {
            epoch,
            d_supervised: sums[0] * inv,
            d_unsup_real: sums[1] * inv,
            d_unsup_fake: sums[2] * inv,
            g_feature_match: sums[3] * inv,
            g_unsup: sums[4] * inv,
            valid_f1,
        });
    }

    match best {
        Some((_, epoch, best_disc)) => {
            history.best_epoch = Some(epoch);
            Ok((best_disc, gen, history))
        }
        None => Ok((disc, gen, history)),
    }
}

/// Encodes titles with the frozen encoder and trains adversarially.
pub fn train_ssgan<S: Scalar>(
    encoder: &FrozenEncoder<'_, S>,
    gen: Generator<S>,
    disc: Discriminator<S>,
    labeled: &Corpus,
    valid: Option<&Corpus>,
    unlabeled: &Corpus,
    config: &GanTrainConfig,
) -> Result<(Discriminator<S>, Generator<S>, GanHistory<S>), GanError> {
    if labeled.is_empty() {
        return Err(GanError::EmptyLabeled);
    }
    let labeled_reps = encoder.encode_titles(labeled.titles());
    let labels = labeled.labels()?;
    let unlabeled_reps = if unlabeled.is_empty() {
        Tensor::zeros(&[0, encoder.dim()])
    } else {
        encoder.encode_titles(unlabeled.titles())
    };
    let valid_data = valid
        .map(|v| Ok::<_, GanError>((encoder.encode_titles(v.titles()), v.labels()?)))
        .transpose()?;
    train_ssgan_reps(
        gen,
        disc,
        &labeled_reps,
        &labels,
        &unlabeled_reps,
        valid_data.as_ref().map(|(x, y)| (x, y.as_slice())),
        config,
    )
}

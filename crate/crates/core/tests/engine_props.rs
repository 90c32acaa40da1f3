//! Property tests for the differentiation engine and adversarial losses.

use proptest::prelude::*;

use baitline::autodiff::{Graph, LrSchedule, Tensor};
use baitline::rng::{stream, Component};
use baitline::ssgan::{d_loss, g_loss, predict, Discriminator, GanBatch};

fn random_tensor(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = stream(seed, Component::Data);
    Tensor::randn(shape, 1.0, &mut rng)
}

proptest! {
    #[test]
    fn one_cycle_continuous_at_phase_boundary(
        max_lr in 1e-6f64..1e-2,
        total in 20usize..500,
    ) {
        let s = LrSchedule::one_cycle(max_lr, total).unwrap();
        let peak = ((total as f64) * 0.3).floor() as usize;
        prop_assume!(peak > 0 && peak + 1 < total);
        let gap_rise = (s.lr_at(peak).unwrap() - s.lr_at(peak - 1).unwrap()).abs();
        let gap_fall = (s.lr_at(peak).unwrap() - s.lr_at(peak + 1).unwrap()).abs();
        // Steps differ by at most the per-step slope of either phase.
        let rise_step = (max_lr - max_lr / 25.0) / peak as f64;
        let fall_bound = (max_lr - max_lr / 1e4) * 0.5
            * (std::f64::consts::PI / (total - 1 - peak) as f64);
        prop_assert!(gap_rise <= rise_step * 1.001);
        prop_assert!(gap_fall <= fall_bound * 1.001);
    }

    #[test]
    fn real_probabilities_and_fake_share_sum_to_one(
        seed in 0u64..200,
        rows in 1usize..6,
    ) {
        let disc = {
            let mut rng = stream(seed, Component::Init);
            Discriminator::<f64>::init(4, 3, 2, 0.2, 0.0, &mut rng)
        };
        let reps = random_tensor(&[rows, 4], seed + 1);
        let (_, logits) = disc.features_and_logits(&reps).unwrap();
        for i in 0..rows {
            let row = logits.row(i);
            let max = row.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let exps: Vec<f64> = row.iter().map(|v| (v - max).exp()).collect();
            let z: f64 = exps.iter().sum();
            let total: f64 = exps.iter().map(|e| e / z).sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
        // predict excludes the fake logit but stays a distribution.
        let pred = predict(&disc, &reps).unwrap();
        for probs in &pred.probs {
            let total: f64 = probs.iter().sum();
            prop_assert!((total - 1.0).abs() < 1e-12);
        }
    }

    #[test]
    fn feature_match_invariant_to_row_permutation(
        seed in 0u64..100,
        rows in 2usize..6,
    ) {
        let disc = {
            let mut rng = stream(seed, Component::Init);
            Discriminator::<f64>::init(3, 4, 2, 0.2, 0.0, &mut rng)
        };
        let real = random_tensor(&[rows, 4], seed + 10);
        let fake = random_tensor(&[rows, 3], seed + 20);

        let base = g_loss(&disc, &real, &fake).unwrap();

        let perm: Vec<usize> = (0..rows).rev().collect();
        let real_p = real.select_rows(&perm);
        let fake_p = fake.select_rows(&perm);
        let permuted = g_loss(&disc, &real_p, &fake_p).unwrap();
        prop_assert!((base.g_feature_match - permuted.g_feature_match).abs() < 1e-10);
        prop_assert!((base.g_unsup - permuted.g_unsup).abs() < 1e-10);
    }

    #[test]
    fn d_loss_deterministic_and_finite(
        seed in 0u64..100,
        n_lab in 1usize..4,
        n_unlab in 0usize..4,
    ) {
        let disc = {
            let mut rng = stream(seed, Component::Init);
            Discriminator::<f64>::init(3, 4, 2, 0.2, 0.0, &mut rng)
        };
        let batch = GanBatch::new(
            random_tensor(&[n_lab, 3], seed + 1),
            vec![0; n_lab],
            random_tensor(&[n_unlab, 3], seed + 2),
            random_tensor(&[n_lab + n_unlab, 3], seed + 3),
        )
        .unwrap();
        let a = d_loss(&disc, &batch).unwrap();
        let b = d_loss(&disc, &batch).unwrap();
        prop_assert_eq!(a.clone(), b);
        prop_assert!(a.d_supervised >= 0.0);
        prop_assert!(a.d_unsup_real >= 0.0);
        prop_assert!(a.d_unsup_fake >= 0.0);
    }

    #[test]
    fn graph_value_matches_composed_closure(
        x in -2.0f64..2.0,
        y in -2.0f64..2.0,
    ) {
        // sigmoid(x) * tanh(y) + x, composed two ways.
        let mut g = Graph::<f64>::new();
        let xn = g.input(Tensor::scalar(x).clone());
        let yn = g.input(Tensor::scalar(y).clone());
        let xs = g.reshape(xn, &[1]).unwrap();
        let ys = g.reshape(yn, &[1]).unwrap();
        let sx = g.sigmoid(xs);
        let ty = g.tanh(ys);
        let prod = g.mul(sx, ty).unwrap();
        let out = g.add(prod, xs).unwrap();
        let expected = 1.0 / (1.0 + (-x).exp()) * y.tanh() + x;
        prop_assert!((g.value(out).data()[0] - expected).abs() < 1e-12);
    }
}

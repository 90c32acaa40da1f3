//! Acceptance suite: one test per criterion, each printing a PASS line.
//!
//! Tolerances and budgets are pinned in the assertions. Oracles (finite
//! differences, pair counting, quadratic DP, binomial sums, silhouette)
//! are implemented here, independent of the library code they check.

use std::time::Instant;

use num_rational::Ratio;
use rand::Rng;
use rand_distr::StandardNormal;

use baitline::annotation::{fleiss_kappa, AnnotationMatrix, KappaResult};
use baitline::autodiff::{AdamConfig, Graph, LrSchedule, NodeId, Tensor};
use baitline::corpus::{
    corpus_stats, levenshtein, load_jsonl, save_jsonl, stratified_split, Article, Corpus,
    CorpusKind, SplitSpec,
};
use baitline::eval::{
    classification_report, conditional_affinities, joint_affinities, kl_divergence, kl_gradient,
    mcnemar, roc_curve, tsne, McNemarMethod, TsneConfig,
};
use baitline::features::SparseVector;
use baitline::models::{
    bigru_attn_forward, cnn_forward, logreg_loss_and_grad, run_training, BiGruAttnModel, CnnModel,
    MlpModel, MlpTrainer, ScheduleKind, TrainConfig,
};
use baitline::rng::{stream, Component};
use baitline::ssgan::{predict, train_ssgan_reps, Discriminator, GanTrainConfig, Generator};


use baitline_cli::config::ExperimentConfig;
use baitline_cli::experiment::run_experiment;

// ---------------------------------------------------------------------------
// shared oracles and generators
// ---------------------------------------------------------------------------

const GRAD_TOL: f64 = 1e-4;

/// Central finite differences against an analytic gradient, relative
/// tolerance 1e-4 with a unit floor on the denominator.
fn fd_check(f: &mut dyn FnMut(&[f64]) -> f64, x0: &[f64], analytic: &[f64], label: &str) {
    assert_eq!(x0.len(), analytic.len(), "{label}: gradient length");
    let eps = 1e-5;
    let mut x = x0.to_vec();
    for i in 0..x.len() {
        let keep = x[i];
        x[i] = keep + eps;
        let up = f(&x);
        x[i] = keep - eps;
        let down = f(&x);
        x[i] = keep;
        let fd = (up - down) / (2.0 * eps);
        let denom = fd.abs().max(analytic[i].abs()).max(1.0);
        assert!(
            (fd - analytic[i]).abs() / denom < GRAD_TOL,
            "{label}: grad[{i}] fd {fd} vs analytic {}",
            analytic[i]
        );
    }
}

/// Random tensor with entries pushed away from zero, so kinked activations
/// (relu, leaky-relu) never sit within a finite-difference step of their
/// kink.
fn kink_safe(shape: &[usize], seed: u64) -> Tensor<f64> {
    let mut rng = stream(seed, Component::Data);
    let mut t = Tensor::<f64>::randn(shape, 1.0, &mut rng);
    for v in t.data_mut() {
        if v.abs() < 5e-2 {
            *v += 0.2 * v.signum().max(0.0).mul_add(2.0, -1.0);
        }
    }
    t
}

/// Random tensor whose values along the time axis are pairwise separated,
/// so max-pooling argmaxes cannot flip under finite differences.
fn tie_safe_3d(b: usize, l: usize, f: usize, seed: u64) -> Tensor<f64> {
    let mut t = kink_safe(&[b, l, f], seed);
    for i in 0..b {
        for j in 0..f {
            for step in 0..l {
                t.data_mut()[(i * l + step) * f + j] += step as f64 * 1e-2;
            }
        }
    }
    t
}

/// Synthetic clickbait corpus: class-1 titles embed one of five planted
/// keyword fragments, class-0 titles are filler only.
fn planted_keyword_corpus(n_per_class: usize, seed: u64) -> Corpus {
    const KEYWORDS: [&str; 5] = ["shocking", "unbelievable", "viral", "secretly", "exposed"];
    let mut rng = stream(seed, Component::Data);
    let filler: Vec<String> = (0..60)
        .map(|_| {
            let len = rng.gen_range(4..8);
            (0..len)
                .map(|_| (b'a' + rng.gen_range(0..20u8)) as char)
                .collect()
        })
        .collect();
    let mut articles = Vec::new();
    for i in 0..2 * n_per_class {
        let label = u8::from(i >= n_per_class);
        let n_words = rng.gen_range(6..10);
        let mut words: Vec<String> = (0..n_words)
            .map(|_| filler[rng.gen_range(0..filler.len())].clone())
            .collect();
        if label == 1 {
            let kw = KEYWORDS[rng.gen_range(0..KEYWORDS.len())];
            let pos = rng.gen_range(0..=words.len());
            words.insert(pos, kw.to_string());
        }
        articles.push(Article {
            id: format!("s{i}"),
            domain: "synthetic".to_string(),
            date: "2022-01-01".to_string(),
            title: words.join(" "),
            content: format!("content {i}"),
            label: Some(label),
            category: None,
            translated_title: None,
            translated_content: None,
        });
    }
    Corpus::new(articles, CorpusKind::Labeled)
}

/// Two spherical Gaussians at ±mu/√d along the all-ones direction.
fn two_gaussians(n_per: usize, d: usize, mu: f64, seed: u64) -> (Tensor<f64>, Vec<u8>) {
    let mut rng = stream(seed, Component::Data);
    let shift = mu / (d as f64).sqrt();
    let mut data = Vec::with_capacity(2 * n_per * d);
    let mut labels = Vec::with_capacity(2 * n_per);
    for i in 0..2 * n_per {
        let label = u8::from(i >= n_per);
        let center = if label == 1 { shift } else { -shift };
        for _ in 0..d {
            let z: f64 = rng.sample(StandardNormal);
            data.push(center + z);
        }
        labels.push(label);
    }
    (
        Tensor::from_vec(vec![2 * n_per, d], data).unwrap(),
        labels,
    )
}

/// Mean silhouette coefficient of 2-D points under binary labels.
fn silhouette_2d(points: &Tensor<f64>, labels: &[u8]) -> f64 {
    let n = points.shape()[0];
    let dist = |i: usize, j: usize| -> f64 {
        let a = points.row(i);
        let b = points.row(j);
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
    };
    let mut total = 0.0;
    for i in 0..n {
        let mut same = Vec::new();
        let mut other = Vec::new();
        for j in 0..n {
            if j == i {
                continue;
            }
            if labels[j] == labels[i] {
                same.push(dist(i, j));
            } else {
                other.push(dist(i, j));
            }
        }
        let a = same.iter().sum::<f64>() / same.len() as f64;
        let b = other.iter().sum::<f64>() / other.len() as f64;
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

// ---------------------------------------------------------------------------
// criterion 1: gradient correctness
// ---------------------------------------------------------------------------

/// Checks one graph-builder closure: `build` must create the graph from the
/// flat parameter vector and return the scalar loss node, with `param_node`
/// the node whose gradient is under test.
fn check_graph_op(
    label: &str,
    shape: &[usize],
    x0: &Tensor<f64>,
    build: &dyn Fn(&mut Graph<f64>, Tensor<f64>) -> (NodeId, NodeId),
) {
    let numel: usize = shape.iter().product();
    assert_eq!(x0.numel(), numel);
    let run = |data: &[f64]| -> (f64, Vec<f64>) {
        let mut g = Graph::new();
        let t = Tensor::from_vec(shape.to_vec(), data.to_vec()).unwrap();
        let (param, loss) = build(&mut g, t);
        g.backward(loss).unwrap();
        (
            g.value(loss).item(),
            g.grad(param).map(|t| t.data().to_vec()).unwrap_or_else(|| vec![0.0; numel]),
        )
    };
    let (_, analytic) = run(x0.data());
    fd_check(&mut |x| run(x).0, x0.data(), &analytic, label);
}

#[test]
fn criterion_01_gradient_correctness() {
    let start = Instant::now();
    let instances = 20u64;

    for seed in 0..instances {
        // Elementwise binaries: gradient w.r.t. each side.
        for (name, which) in [("add", 0), ("sub", 1), ("mul", 2)] {
            for side in 0..2 {
                let a = kink_safe(&[2, 3], seed * 31 + 1);
                let b = kink_safe(&[2, 3], seed * 31 + 2);
                check_graph_op(
                    &format!("{name}/side{side}"),
                    &[2, 3],
                    if side == 0 { &a } else { &b },
                    &|g, t| {
                        let (an, bn) = if side == 0 {
                            (g.param(t), g.input(b.clone()))
                        } else {
                            (g.input(a.clone()), g.param(t))
                        };
                        let out = match which {
                            0 => g.add(an, bn).unwrap(),
                            1 => g.sub(an, bn).unwrap(),
                            _ => g.mul(an, bn).unwrap(),
                        };
                        let param = if side == 0 { an } else { bn };
                        (param, g.l2_sq(out))
                    },
                );
            }
        }

        // add_bias on 2-D and 3-D inputs, both sides.
        let x2 = kink_safe(&[2, 4], seed * 31 + 3);
        let b2 = kink_safe(&[4], seed * 31 + 4);
        check_graph_op("add_bias/x", &[2, 4], &x2, &|g, t| {
            let x = g.param(t);
            let b = g.input(b2.clone());
            let out = g.add_bias(x, b).unwrap();
            (x, g.l2_sq(out))
        });
        check_graph_op("add_bias/b", &[4], &b2, &|g, t| {
            let x = g.input(x2.clone());
            let b = g.param(t);
            let out = g.add_bias(x, b).unwrap();
            (b, g.l2_sq(out))
        });
        let x3 = kink_safe(&[2, 3, 2], seed * 31 + 5);
        let b3 = kink_safe(&[2], seed * 31 + 6);
        check_graph_op("add_bias3/b", &[2], &b3, &|g, t| {
            let x = g.input(x3.clone());
            let b = g.param(t);
            let out = g.add_bias(x, b).unwrap();
            (b, g.l2_sq(out))
        });

        // affine
        let xa = kink_safe(&[3, 2], seed * 31 + 7);
        check_graph_op("affine", &[3, 2], &xa, &|g, t| {
            let x = g.param(t);
            let out = g.affine(x, 1.7, -0.3);
            (x, g.l2_sq(out))
        });

        // matmul, both sides.
        let ma = kink_safe(&[2, 3], seed * 31 + 8);
        let mb = kink_safe(&[3, 4], seed * 31 + 9);
        check_graph_op("matmul/a", &[2, 3], &ma, &|g, t| {
            let a = g.param(t);
            let b = g.input(mb.clone());
            let out = g.matmul(a, b).unwrap();
            (a, g.l2_sq(out))
        });
        check_graph_op("matmul/b", &[3, 4], &mb, &|g, t| {
            let a = g.input(ma.clone());
            let b = g.param(t);
            let out = g.matmul(a, b).unwrap();
            (b, g.l2_sq(out))
        });

        // concat_cols (middle part under test).
        let c1 = kink_safe(&[2, 2], seed * 31 + 10);
        let c2 = kink_safe(&[2, 3], seed * 31 + 11);
        let c3 = kink_safe(&[2, 1], seed * 31 + 12);
        check_graph_op("concat_cols", &[2, 3], &c2, &|g, t| {
            let a = g.input(c1.clone());
            let b = g.param(t);
            let c = g.input(c3.clone());
            let out = g.concat_cols(&[a, b, c]).unwrap();
            (b, g.l2_sq(out))
        });

        // mean_axis both axes; mean_all.
        for axis in 0..2usize {
            let x = kink_safe(&[3, 4], seed * 31 + 13 + axis as u64);
            check_graph_op(&format!("mean_axis{axis}"), &[3, 4], &x, &|g, t| {
                let xn = g.param(t);
                let out = g.mean_axis(xn, axis).unwrap();
                (xn, g.l2_sq(out))
            });
        }
        let x = kink_safe(&[2, 5], seed * 31 + 15);
        check_graph_op("mean_all", &[2, 5], &x, &|g, t| {
            let xn = g.param(t);
            (xn, g.mean_all(xn))
        });

        // max over time with tie-safe values.
        let x = tie_safe_3d(2, 4, 3, seed * 31 + 16);
        check_graph_op("max_over_time", &[2, 4, 3], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.max_over_time(xn).unwrap();
            (xn, g.l2_sq(out))
        });

        // activations
        for name in ["sigmoid", "tanh", "relu", "leaky_relu"] {
            let x = kink_safe(&[2, 3], seed * 31 + 17);
            check_graph_op(name, &[2, 3], &x, &|g, t| {
                let xn = g.param(t);
                let out = match name {
                    "sigmoid" => g.sigmoid(xn),
                    "tanh" => g.tanh(xn),
                    "relu" => g.relu(xn),
                    _ => g.leaky_relu(xn, 0.2),
                };
                (xn, g.l2_sq(out))
            });
        }

        // dropout with a fixed mask per closure call.
        let x = kink_safe(&[2, 4], seed * 31 + 18);
        check_graph_op("dropout", &[2, 4], &x, &|g, t| {
            let xn = g.param(t);
            let mut mask_rng = stream(seed + 900, Component::Dropout);
            let out = g.dropout(xn, 0.35, &mut mask_rng).unwrap();
            (xn, g.l2_sq(out))
        });

        // gather with a repeated id (accumulation path).
        let table = kink_safe(&[5, 3], seed * 31 + 19);
        check_graph_op("gather", &[5, 3], &table, &|g, t| {
            let tn = g.param(t);
            let out = g.gather(tn, &[0, 2, 2, 4]).unwrap();
            (tn, g.l2_sq(out))
        });

        // reshape
        let x = kink_safe(&[2, 6], seed * 31 + 20);
        check_graph_op("reshape", &[2, 6], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.reshape(xn, &[3, 4]).unwrap();
            (xn, g.l2_sq(out))
        });

        // conv1d, both inputs.
        let cx = kink_safe(&[2, 5, 3], seed * 31 + 21);
        let cw = kink_safe(&[2, 6], seed * 31 + 22);
        check_graph_op("conv1d/x", &[2, 5, 3], &cx, &|g, t| {
            let xn = g.param(t);
            let wn = g.input(cw.clone());
            let out = g.conv1d(xn, wn, 2).unwrap();
            (xn, g.l2_sq(out))
        });
        check_graph_op("conv1d/w", &[2, 6], &cw, &|g, t| {
            let xn = g.input(cx.clone());
            let wn = g.param(t);
            let out = g.conv1d(xn, wn, 2).unwrap();
            (wn, g.l2_sq(out))
        });

        // time_step
        let x = kink_safe(&[2, 4, 3], seed * 31 + 23);
        check_graph_op("time_step", &[2, 4, 3], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.time_step(xn, 2).unwrap();
            (xn, g.l2_sq(out))
        });

        // slices
        let x = kink_safe(&[2, 5], seed * 31 + 24);
        check_graph_op("slice_cols", &[2, 5], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.slice_cols(xn, 1, 4).unwrap();
            (xn, g.l2_sq(out))
        });
        let x = kink_safe(&[4, 3], seed * 31 + 25);
        check_graph_op("slice_rows", &[4, 3], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.slice_rows(xn, 1, 3).unwrap();
            (xn, g.l2_sq(out))
        });

        // stack_cols (middle part under test).
        let s1 = kink_safe(&[4], seed * 31 + 26);
        let s2 = kink_safe(&[4], seed * 31 + 27);
        let s3 = kink_safe(&[4], seed * 31 + 28);
        check_graph_op("stack_cols", &[4], &s2, &|g, t| {
            let a = g.input(s1.clone());
            let b = g.param(t);
            let c = g.input(s3.clone());
            let out = g.stack_cols(&[a, b, c]).unwrap();
            (b, g.l2_sq(out))
        });

        // softmax family.
        let x = kink_safe(&[2, 4], seed * 31 + 29);
        check_graph_op("softmax_rows", &[2, 4], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.softmax_rows(xn).unwrap();
            (xn, g.l2_sq(out))
        });
        let x = kink_safe(&[3, 4], seed * 31 + 30);
        check_graph_op("softmax_cross_entropy", &[3, 4], &x, &|g, t| {
            let xn = g.param(t);
            let loss = g.softmax_cross_entropy(xn, &[0, 3, 1]).unwrap();
            (xn, loss)
        });
        let x = kink_safe(&[2, 4], seed * 31 + 31);
        check_graph_op("log_softmax_col", &[2, 4], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.log_softmax_col(xn, 1).unwrap();
            (xn, g.l2_sq(out))
        });
        let x = kink_safe(&[2, 4], seed * 31 + 32);
        check_graph_op("log_one_minus_softmax_col", &[2, 4], &x, &|g, t| {
            let xn = g.param(t);
            let out = g.log_one_minus_softmax_col(xn, 3).unwrap();
            (xn, g.l2_sq(out))
        });

        // l2_sq directly.
        let x = kink_safe(&[2, 3], seed * 31 + 33);
        check_graph_op("l2_sq", &[2, 3], &x, &|g, t| {
            let xn = g.param(t);
            (xn, g.l2_sq(xn))
        });

        // scale_rows, both inputs.
        let sx = kink_safe(&[3, 4], seed * 31 + 34);
        let ss = kink_safe(&[3], seed * 31 + 35);
        check_graph_op("scale_rows/x", &[3, 4], &sx, &|g, t| {
            let xn = g.param(t);
            let sn = g.input(ss.clone());
            let out = g.scale_rows(xn, sn).unwrap();
            (xn, g.l2_sq(out))
        });
        check_graph_op("scale_rows/s", &[3], &ss, &|g, t| {
            let xn = g.input(sx.clone());
            let sn = g.param(t);
            let out = g.scale_rows(xn, sn).unwrap();
            (sn, g.l2_sq(out))
        });
    }

    // Model forwards.
    for seed in 0..instances {
        gradcheck_logreg(seed);
        gradcheck_cnn(seed);
        gradcheck_bigru(seed);
        gradcheck_discriminator(seed);
        gradcheck_generator(seed);
        gradcheck_tsne_kl(seed);
    }

    let elapsed = start.elapsed();
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}, budget 2 min");
    println!("criterion 1 (gradient correctness): PASS in {elapsed:?}");
}

fn gradcheck_logreg(seed: u64) {
    let mut rng = stream(seed + 100, Component::Data);
    let dim = 5;
    let rows: Vec<SparseVector<f64>> = (0..4)
        .map(|_| {
            let dense: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
            SparseVector::from_dense(&dense)
        })
        .collect();
    let row_refs: Vec<&SparseVector<f64>> = rows.iter().collect();
    let labels = vec![0u8, 1, 1, 0];
    let w0: Vec<f64> = (0..dim).map(|_| rng.gen::<f64>() - 0.5).collect();
    let b0: f64 = rng.gen::<f64>() - 0.5;
    let l2 = 0.05;

    let (_, grad_w, grad_b) = logreg_loss_and_grad(&w0, b0, &row_refs, &labels, None, l2);
    let mut packed = w0.clone();
    packed.push(b0);
    let mut analytic = grad_w.clone();
    analytic.push(grad_b);
    fd_check(
        &mut |x| {
            let (w, b) = x.split_at(dim);
            logreg_loss_and_grad(w, b[0], &row_refs, &labels, None, l2).0
        },
        &packed,
        &analytic,
        "logreg",
    );
}

fn flatten_params(tensors: &[&Tensor<f64>]) -> Vec<f64> {
    tensors.iter().flat_map(|t| t.data().iter().copied()).collect()
}

fn unflatten_into(tensors: &mut [&mut Tensor<f64>], flat: &[f64]) {
    let mut offset = 0;
    for t in tensors.iter_mut() {
        let n = t.numel();
        t.data_mut().copy_from_slice(&flat[offset..offset + n]);
        offset += n;
    }
}

fn gradcheck_cnn(seed: u64) {
    let d = 3;
    let mut init = stream(seed + 200, Component::Init);
    let model = CnnModel::<f64>::init(d, &[2, 3], 2, 0.0, &mut init);
    let emb = kink_safe(&[6, d], seed + 201);
    let ids: Vec<Vec<usize>> = vec![vec![1, 3, 5, 2], vec![4, 0, 2, 5]];
    let targets = vec![0usize, 1];

    let loss_and_grads = |m: &CnnModel<f64>| -> (f64, Vec<f64>) {
        let mut g = Graph::new();
        let mut noop = stream(0, Component::Dropout);
        let (params, logits) = cnn_forward(m, &mut g, &ids, &emb, false, &mut noop).unwrap();
        let loss = g.softmax_cross_entropy(logits, &targets).unwrap();
        g.backward(loss).unwrap();
        let grads: Vec<f64> = params
            .iter()
            .flat_map(|p| g.grad(*p).unwrap().data().to_vec())
            .collect();
        (g.value(loss).item(), grads)
    };

    let mut probe = model.clone();
    let x0 = flatten_params(&[
        &model.conv_weights[0],
        &model.conv_weights[1],
        &model.conv_biases[0],
        &model.conv_biases[1],
        &model.out_w,
        &model.out_b,
    ]);
    let (_, analytic) = loss_and_grads(&model);
    fd_check(
        &mut |x| {
            let mut tensors: Vec<&mut Tensor<f64>> = Vec::new();
            let (cw, rest) = probe.conv_weights.split_at_mut(1);
            tensors.push(&mut cw[0]);
            tensors.push(&mut rest[0]);
            let (cb, rest_b) = probe.conv_biases.split_at_mut(1);
            tensors.push(&mut cb[0]);
            tensors.push(&mut rest_b[0]);
            tensors.push(&mut probe.out_w);
            tensors.push(&mut probe.out_b);
            unflatten_into(&mut tensors, x);
            loss_and_grads(&probe).0
        },
        &x0,
        &analytic,
        "cnn_forward",
    );
}

fn gradcheck_bigru(seed: u64) {
    let mut init = stream(seed + 300, Component::Init);
    let model = BiGruAttnModel::<f64>::init(2, 2, 0.0, &mut init);
    let emb = kink_safe(&[5, 2], seed + 301);
    let ids: Vec<Vec<usize>> = vec![vec![1, 3, 4], vec![2, 0, 1]];
    let targets = vec![1usize, 0];

    let loss_and_grads = |m: &BiGruAttnModel<f64>| -> (f64, Vec<f64>) {
        let mut g = Graph::new();
        let mut noop = stream(0, Component::Dropout);
        let (params, logits, _) =
            bigru_attn_forward(m, &mut g, &ids, &emb, false, &mut noop).unwrap();
        let loss = g.softmax_cross_entropy(logits, &targets).unwrap();
        g.backward(loss).unwrap();
        let grads: Vec<f64> = params
            .iter()
            .flat_map(|p| g.grad(*p).unwrap().data().to_vec())
            .collect();
        (g.value(loss).item(), grads)
    };

    // Flatten parameters via the public fields in forward order.
    let collect = |m: &BiGruAttnModel<f64>| -> Vec<f64> {
        let cells = [&m.forward_cell, &m.backward_cell];
        let mut flat = Vec::new();
        for c in cells {
            for t in [
                &c.w_update, &c.u_update, &c.b_update, &c.w_reset, &c.u_reset, &c.b_reset,
                &c.w_cand, &c.u_cand, &c.b_cand,
            ] {
                flat.extend(t.data());
            }
        }
        for t in [&m.attn_w, &m.attn_b, &m.attn_u, &m.out_w, &m.out_b] {
            flat.extend(t.data());
        }
        flat
    };
    let restore = |m: &mut BiGruAttnModel<f64>, flat: &[f64]| {
        let mut offset = 0;
        let mut put = |t: &mut Tensor<f64>| {
            let n = t.numel();
            t.data_mut().copy_from_slice(&flat[offset..offset + n]);
            offset += n;
        };
        for c in [&mut m.forward_cell, &mut m.backward_cell] {
            put(&mut c.w_update);
            put(&mut c.u_update);
            put(&mut c.b_update);
            put(&mut c.w_reset);
            put(&mut c.u_reset);
            put(&mut c.b_reset);
            put(&mut c.w_cand);
            put(&mut c.u_cand);
            put(&mut c.b_cand);
        }
        put(&mut m.attn_w);
        put(&mut m.attn_b);
        put(&mut m.attn_u);
        put(&mut m.out_w);
        put(&mut m.out_b);
    };

    let x0 = collect(&model);
    let (_, analytic) = loss_and_grads(&model);
    let mut probe = model.clone();
    fd_check(
        &mut |x| {
            restore(&mut probe, x);
            loss_and_grads(&probe).0
        },
        &x0,
        &analytic,
        "bigru_attn_forward",
    );
}

fn gradcheck_discriminator(seed: u64) {
    // Total discriminator loss (supervised + both unsupervised terms)
    // against its four parameter tensors.
    let d = 4;
    let mut init = stream(seed + 400, Component::Init);
    let disc = Discriminator::<f64>::init(d, 3, 2, 0.2, 0.0, &mut init);
    let labeled = kink_safe(&[2, d], seed + 401);
    let unlabeled = kink_safe(&[2, d], seed + 402);
    let fakes = kink_safe(&[4, d], seed + 403);

    let loss_and_grads = |disc: &Discriminator<f64>| -> (f64, Vec<f64>) {
        // The three-part training loss assembled from the same ops the
        // trainer uses, with the parameters under test as leaves.
        let mut g = Graph::new();
        let all = Tensor::vstack(&[&labeled, &unlabeled, &fakes]).unwrap();
        let x = g.input(all);
        let w1 = g.param(disc.w1.clone());
        let b1 = g.param(disc.b1.clone());
        let w2 = g.param(disc.w2.clone());
        let b2 = g.param(disc.b2.clone());
        let h = g.matmul(x, w1).unwrap();
        let h = g.add_bias(h, b1).unwrap();
        let feats = g.leaky_relu(h, 0.2);
        let logits = g.matmul(feats, w2).unwrap();
        let logits = g.add_bias(logits, b2).unwrap();

        let lab_logits = g.slice_rows(logits, 0, 2).unwrap();
        let real_classes = g.slice_cols(lab_logits, 0, 2).unwrap();
        let d_sup = g
            .softmax_cross_entropy(real_classes, &[0usize, 1])
            .unwrap();
        let real_logits = g.slice_rows(logits, 0, 4).unwrap();
        let lnf = g.log_one_minus_softmax_col(real_logits, 2).unwrap();
        let mnf = g.mean_all(lnf);
        let d_real = g.affine(mnf, -1.0, 0.0);
        let fake_logits = g.slice_rows(logits, 4, 8).unwrap();
        let lf = g.log_softmax_col(fake_logits, 2).unwrap();
        let mf = g.mean_all(lf);
        let d_fake = g.affine(mf, -1.0, 0.0);
        let unsup = g.add(d_real, d_fake).unwrap();
        let total = g.add(d_sup, unsup).unwrap();
        g.backward(total).unwrap();
        let grads: Vec<f64> = [w1, b1, w2, b2]
            .iter()
            .flat_map(|p| g.grad(*p).unwrap().data().to_vec())
            .collect();
        (g.value(total).item(), grads)
    };

    let x0 = flatten_params(&[&disc.w1, &disc.b1, &disc.w2, &disc.b2]);
    let (_, analytic) = loss_and_grads(&disc);
    let mut probe = disc.clone();
    fd_check(
        &mut |x| {
            let mut tensors: Vec<&mut Tensor<f64>> =
                vec![&mut probe.w1, &mut probe.b1, &mut probe.w2, &mut probe.b2];
            unflatten_into(&mut tensors, x);
            loss_and_grads(&probe).0
        },
        &x0,
        &analytic,
        "discriminator_loss",
    );
}

fn gradcheck_generator(seed: u64) {
    // Generator loss (feature matching + not-fake) through a frozen
    // discriminator, against the generator's four tensors.
    let d = 4;
    let mut init = stream(seed + 500, Component::Init);
    let gen = Generator::<f64>::init(d, 3, 5, 0.2, 0.0, &mut init);
    let disc = Discriminator::<f64>::init(d, 3, 2, 0.2, 0.0, &mut init);
    let noise = kink_safe(&[3, 5], seed + 501);
    let real = kink_safe(&[3, d], seed + 502);

    let loss_and_grads = |gen: &Generator<f64>| -> (f64, Vec<f64>) {
        let mut g = Graph::new();
        let z = g.input(noise.clone());
        let w1 = g.param(gen.w1.clone());
        let b1 = g.param(gen.b1.clone());
        let w2 = g.param(gen.w2.clone());
        let b2 = g.param(gen.b2.clone());
        let h = g.matmul(z, w1).unwrap();
        let h = g.add_bias(h, b1).unwrap();
        let h = g.leaky_relu(h, 0.2);
        let fake = g.matmul(h, w2).unwrap();
        let fake = g.add_bias(fake, b2).unwrap();

        // Frozen discriminator ops.
        let dw1 = g.input(disc.w1.clone());
        let db1 = g.input(disc.b1.clone());
        let dw2 = g.input(disc.w2.clone());
        let db2 = g.input(disc.b2.clone());
        let fh = g.matmul(fake, dw1).unwrap();
        let fh = g.add_bias(fh, db1).unwrap();
        let fake_feats = g.leaky_relu(fh, 0.2);
        let flog = g.matmul(fake_feats, dw2).unwrap();
        let flog = g.add_bias(flog, db2).unwrap();

        let rx = g.input(real.clone());
        let rh = g.matmul(rx, dw1).unwrap();
        let rh = g.add_bias(rh, db1).unwrap();
        let real_feats = g.leaky_relu(rh, 0.2);

        let rm = g.mean_axis(real_feats, 0).unwrap();
        let fm_mean = g.mean_axis(fake_feats, 0).unwrap();
        let rm2 = g.reshape(rm, &[1, 3]).unwrap();
        let fm2 = g.reshape(fm_mean, &[1, 3]).unwrap();
        let diff = g.sub(rm2, fm2).unwrap();
        let fm = g.l2_sq(diff);

        let lnf = g.log_one_minus_softmax_col(flog, 2).unwrap();
        let mnf = g.mean_all(lnf);
        let g_unsup = g.affine(mnf, -1.0, 0.0);
        let total = g.add(fm, g_unsup).unwrap();
        g.backward(total).unwrap();
        let grads: Vec<f64> = [w1, b1, w2, b2]
            .iter()
            .flat_map(|p| g.grad(*p).unwrap().data().to_vec())
            .collect();
        (g.value(total).item(), grads)
    };

    let x0 = flatten_params(&[&gen.w1, &gen.b1, &gen.w2, &gen.b2]);
    let (_, analytic) = loss_and_grads(&gen);
    let mut probe = gen.clone();
    fd_check(
        &mut |x| {
            let mut tensors: Vec<&mut Tensor<f64>> =
                vec![&mut probe.w1, &mut probe.b1, &mut probe.w2, &mut probe.b2];
            unflatten_into(&mut tensors, x);
            loss_and_grads(&probe).0
        },
        &x0,
        &analytic,
        "generator_loss",
    );
}

fn gradcheck_tsne_kl(seed: u64) {
    let mut rng = stream(seed + 600, Component::Data);
    let points = Tensor::<f64>::randn(&[10, 3], 1.0, &mut rng);
    let p = joint_affinities(&points, 2.5).unwrap();
    let y0 = Tensor::<f64>::randn(&[10, 2], 0.7, &mut rng);
    let grad = kl_gradient(&p, &y0);
    fd_check(
        &mut |flat| {
            let y = Tensor::from_vec(vec![10, 2], flat.to_vec()).unwrap();
            kl_divergence(&p, &y)
        },
        y0.data(),
        grad.data(),
        "tsne_kl",
    );
}

// ---------------------------------------------------------------------------
// criterion 2: adversarial training beats the supervised baseline
// ---------------------------------------------------------------------------

#[test]
fn criterion_02_ssgan_beats_supervised_on_scarce_labels() {
    let start = Instant::now();
    let d = 20;
    let mu = 1.6;
    let seeds = [0u64, 1, 2, 3, 4];

    let mut ssgan_acc = Vec::new();
    let mut mlp_acc = Vec::new();
    for &seed in &seeds {
        // 10 labeled, 1000 unlabeled, 500 test points.
        let (labeled, y_lab) = two_gaussians(5, d, mu, 1000 + seed);
        let (unlabeled, _) = two_gaussians(500, d, mu, 2000 + seed);
        let (test, y_test) = two_gaussians(250, d, mu, 3000 + seed);

        let gan_config = GanTrainConfig {
            epochs: 30,
            batch_size: 64,
            max_lr: 2e-3,
            warmup_frac: 0.1,
            weight_decay: 0.01,
            seed,
            adversarial: true,
        };
        let mut init = stream(seed, Component::Init);
        let gen = Generator::init(d, d, 100, 0.2, 0.1, &mut init);
        let disc = Discriminator::init(d, d, 2, 0.2, 0.1, &mut init);
        let (disc, _, _) =
            train_ssgan_reps(gen, disc, &labeled, &y_lab, &unlabeled, None, &gan_config)
                .unwrap();
        let pred = predict(&disc, &test).unwrap();
        let report = classification_report(&y_test, &pred.labels).unwrap();
        ssgan_acc.push(report.accuracy);

        // Supervised MLP with the discriminator's architecture on the same
        // 10 labeled points, same optimizer family and schedule.
        let train_config = TrainConfig {
            epochs: 30,
            batch_size: 64,
            max_lr: 2e-3,
            schedule: ScheduleKind::LinearWarmup(0.1),
            l2: 0.0,
            dropout: 0.1,
            seed,
            class_weights: None,
        };
        let mut init = stream(seed, Component::Init);
        let mlp = MlpModel::init(d, d, 2, 0.2, 0.1, &mut init);
        let mut trainer = MlpTrainer::new(
            mlp,
            &labeled,
            &y_lab,
            None,
            &train_config,
            AdamConfig::adamw(0.01),
        )
        .unwrap();
        let (trained, _) = run_training(&mut trainer, &train_config).unwrap();
        let pred = trained.predict(&test).unwrap();
        let report = classification_report(&y_test, &pred).unwrap();
        mlp_acc.push(report.accuracy);
    }

    let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
    let ssgan_mean = mean(&ssgan_acc);
    let mlp_mean = mean(&mlp_acc);
    let elapsed = start.elapsed();
    assert!(
        ssgan_mean >= mlp_mean + 0.02,
        "ssgan mean {ssgan_mean:.4} vs supervised {mlp_mean:.4} (per-seed ssgan {ssgan_acc:?}, mlp {mlp_acc:?})"
    );
    assert!(elapsed.as_secs() < 300, "took {elapsed:?}, budget 5 min");
    println!(
        "criterion 2 (ssgan direction): PASS ssgan {ssgan_mean:.4} vs supervised {mlp_mean:.4} in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 3: reduction equivalence
// ---------------------------------------------------------------------------

#[test]
fn criterion_03_reduction_to_supervised_training() {
    let d = 6;
    let hidden = 5;
    let seed = 42;
    let (x, y) = two_gaussians(20, d, 2.0, 77);

    // Discriminator and an MLP sharing its real-class parameter slice.
    let mut init = stream(seed, Component::Init);
    let disc = Discriminator::<f64>::init(d, hidden, 2, 0.2, 0.0, &mut init);
    let w2_slice = {
        let mut data = Vec::new();
        for r in 0..hidden {
            data.extend_from_slice(&disc.w2.row(r)[..2]);
        }
        Tensor::from_vec(vec![hidden, 2], data).unwrap()
    };
    let b2_slice = Tensor::from_vec(vec![2], disc.b2.data()[..2].to_vec()).unwrap();
    let mlp = MlpModel::with_params(
        disc.w1.clone(),
        disc.b1.clone(),
        w2_slice,
        b2_slice,
        0.2,
        0.0,
    );

    let epochs = 4;
    let batch = 8;
    let lr = 1e-3;
    let wd = 0.01;

    let gen = Generator::<f64>::zeros(d, 4, 100);
    let gan_config = GanTrainConfig {
        epochs,
        batch_size: batch,
        max_lr: lr,
        warmup_frac: 0.1,
        weight_decay: wd,
        seed,
        adversarial: false,
    };
    let empty = Tensor::zeros(&[0, d]);
    let (_, _, gan_history) =
        train_ssgan_reps(gen, disc, &x, &y, &empty, None, &gan_config).unwrap();

    let train_config = TrainConfig {
        epochs,
        batch_size: batch,
        max_lr: lr,
        schedule: ScheduleKind::LinearWarmup(0.1),
        l2: 0.0,
        dropout: 0.0,
        seed,
        class_weights: None,
    };
    let mut trainer =
        MlpTrainer::new(mlp, &x, &y, None, &train_config, AdamConfig::adamw(wd)).unwrap();
    let (_, sup_history) = run_training(&mut trainer, &train_config).unwrap();

    assert_eq!(
        gan_history.d_sup_batch_losses.len(),
        sup_history.batch_losses.len(),
        "step counts must match"
    );
    for (step, (gan, sup)) in gan_history
        .d_sup_batch_losses
        .iter()
        .zip(&sup_history.batch_losses)
        .enumerate()
    {
        assert!(
            (gan - sup).abs() <= 1e-10,
            "step {step}: d_supervised {gan} vs supervised {sup}"
        );
    }
    println!(
        "criterion 3 (reduction equivalence): PASS over {} steps",
        sup_history.batch_losses.len()
    );
}

// ---------------------------------------------------------------------------
// criterion 4: statistics oracles
// ---------------------------------------------------------------------------

#[test]
fn criterion_04_statistics_oracles() {
    // Fleiss' kappa in exact rational arithmetic.
    let fixture = AnnotationMatrix::new(vec![vec![1, 1, 0], vec![0, 0, 0]], 2).unwrap();
    let exact: KappaResult<Ratio<i64>> = fleiss_kappa(&fixture).unwrap();
    assert_eq!(exact.kappa, Ratio::new(1, 4));
    assert_eq!(exact.p_bar, Ratio::new(2, 3));
    assert_eq!(exact.p_e, Ratio::new(5, 9));

    let unanimous = AnnotationMatrix::new(vec![vec![1, 1, 1], vec![0, 0, 0]], 2).unwrap();
    let perfect: KappaResult<Ratio<i64>> = fleiss_kappa(&unanimous).unwrap();
    assert_eq!(perfect.kappa, Ratio::new(1, 1));

    // AUC fixture and the pair-count oracle on 1000 random score vectors.
    let gold = [1u8, 0, 1, 0];
    let scores = [0.9, 0.8, 0.7, 0.2];
    let auc = roc_curve(&gold, &scores).unwrap().auc;
    assert!((auc - 0.75).abs() < 1e-15);

    let mut rng = stream(404, Component::Data);
    for _ in 0..1000 {
        let n = rng.gen_range(4..40);
        let labels: Vec<u8> = (0..n).map(|_| rng.gen_range(0..2u8)).collect();
        if labels.iter().all(|&l| l == 0) || labels.iter().all(|&l| l == 1) {
            continue;
        }
        // Quantized scores so tie handling is exercised.
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.gen::<f64>() * 6.0).round() / 6.0)
            .collect();
        let auc = roc_curve(&labels, &scores).unwrap().auc;
        let mut concordant = 0.0;
        let mut pairs = 0.0;
        for i in 0..n {
            if labels[i] != 1 {
                continue;
            }
            for j in 0..n {
                if labels[j] != 0 {
                    continue;
                }
                pairs += 1.0;
                if scores[i] > scores[j] {
                    concordant += 1.0;
                } else if scores[i] == scores[j] {
                    concordant += 0.5;
                }
            }
        }
        assert!(
            (auc - concordant / pairs).abs() < 1e-12,
            "auc {auc} vs pair count {}",
            concordant / pairs
        );
    }

    // McNemar exact path equals the direct binomial sum for every b+c <= 24.
    let binom_cdf = |n: usize, m: usize| -> f64 {
        // Pascal's triangle row, summed with exact dyadic terms.
        let mut row = vec![1u128];
        for _ in 0..n {
            let mut next = vec![1u128; row.len() + 1];
            for i in 1..row.len() {
                next[i] = row[i - 1] + row[i];
            }
            row = next;
        }
        let half_pow = 0.5f64.powi(n as i32);
        row[..=m].iter().map(|&c| c as f64 * half_pow).sum()
    };
    for total in 1..=24usize {
        for b in 0..=total {
            let c = total - b;
            let gold = vec![1u8; total + 4];
            let mut pred_a = vec![1u8; total + 4];
            let mut pred_b = vec![1u8; total + 4];
            for i in 0..b {
                pred_b[i] = 0;
            }
            for i in b..total {
                pred_a[i] = 0;
            }
            let result = mcnemar(&gold, &pred_a, &pred_b).unwrap();
            assert_eq!(result.method, McNemarMethod::Exact);
            assert_eq!((result.b, result.c), (b, c));
            let expected = (2.0 * binom_cdf(total, b.min(c))).min(1.0);
            assert!(
                (result.p_value - expected).abs() < 1e-12,
                "b={b} c={c}: {} vs {expected}",
                result.p_value
            );
        }
    }
    println!("criterion 4 (statistics oracles): PASS");
}

// ---------------------------------------------------------------------------
// criterion 5: Levenshtein against the quadratic DP oracle
// ---------------------------------------------------------------------------

#[test]
fn criterion_05_levenshtein_oracle_and_metric_axioms() {
    fn oracle(a: &str, b: &str) -> usize {
        let a: Vec<char> = a.chars().collect();
        let b: Vec<char> = b.chars().collect();
        let mut dp = vec![vec![0usize; b.len() + 1]; a.len() + 1];
        for (i, row) in dp.iter_mut().enumerate() {
            row[0] = i;
        }
        for j in 0..=b.len() {
            dp[0][j] = j;
        }
        for i in 1..=a.len() {
            for j in 1..=b.len() {
                let sub = dp[i - 1][j - 1] + usize::from(a[i - 1] != b[j - 1]);
                dp[i][j] = sub.min(dp[i - 1][j] + 1).min(dp[i][j - 1] + 1);
            }
        }
        dp[a.len()][b.len()]
    }

    let alphabet: Vec<char> = "abcdeঅআইক!? ".chars().collect();
    let mut rng = stream(505, Component::Data);
    let random_string = |rng: &mut rand_chacha::ChaCha8Rng| -> String {
        let len = rng.gen_range(0..=30);
        (0..len)
            .map(|_| alphabet[rng.gen_range(0..alphabet.len())])
            .collect()
    };

    for _ in 0..1000 {
        let a = random_string(&mut rng);
        let b = random_string(&mut rng);
        assert_eq!(levenshtein(&a, &b), oracle(&a, &b), "{a:?} vs {b:?}");
    }

    // Metric axioms on random triples.
    for _ in 0..300 {
        let a = random_string(&mut rng);
        let b = random_string(&mut rng);
        let c = random_string(&mut rng);
        let dab = levenshtein(&a, &b);
        assert_eq!(dab, levenshtein(&b, &a));
        assert_eq!(dab == 0, a == b);
        assert!(dab <= levenshtein(&a, &c) + levenshtein(&c, &b));
    }
    println!("criterion 5 (levenshtein oracle): PASS");
}

// ---------------------------------------------------------------------------
// criterion 6: pipeline determinism and split proportions
// ---------------------------------------------------------------------------

fn write_experiment_config(
    dir: &std::path::Path,
    corpus: &std::path::Path,
    out_dir: &std::path::Path,
    model: &str,
    extra: &str,
) -> std::path::PathBuf {
    let path = dir.join(format!("{model}.toml"));
    std::fs::write(
        &path,
        format!(
            r#"
model = "{model}"
features = "C3+C4+C5"
output_dir = "{}"

[data]
labeled = "{}"

[train]
epochs = 40
batch = 32
lr = 0.5
seeds = [0, 1, 2, 3, 4]
l2 = 1e-6
{extra}
"#,
            out_dir.display(),
            corpus.display()
        ),
    )
    .unwrap();
    path
}

#[test]
fn criterion_06_pipeline_determinism() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = planted_keyword_corpus(60, 606);
    let corpus_path = dir.path().join("corpus.jsonl");
    save_jsonl(&corpus, &corpus_path).unwrap();

    let out_a = dir.path().join("run_a");
    let out_b = dir.path().join("run_b");
    let config_path = write_experiment_config(dir.path(), &corpus_path, &out_a, "logreg", "");
    let mut config = ExperimentConfig::load(&config_path).unwrap();
    config.train.epochs = 6;
    config.train.seeds = vec![0, 1];
    run_experiment(&config).unwrap();
    config.output_dir = out_b.clone();
    run_experiment(&config).unwrap();

    for file in ["results.csv", "summary.csv", "seed0_predictions.csv", "seed1_history.csv"] {
        let a = std::fs::read(out_a.join(file)).unwrap();
        let b = std::fs::read(out_b.join(file)).unwrap();
        assert_eq!(a, b, "{file} differs between identical runs");
    }

    // Split proportions within one item per class at 70:10:20.
    let spec = SplitSpec::parse_ratio("70:10:20", 0).unwrap();
    let (train, valid, test) = stratified_split(&corpus, &spec).unwrap();
    for label in [0u8, 1] {
        let class_n = corpus
            .articles
            .iter()
            .filter(|a| a.label == Some(label))
            .count() as f64;
        for (split, frac) in [(&train, 0.7), (&valid, 0.1), (&test, 0.2)] {
            let count = split
                .articles
                .iter()
                .filter(|a| a.label == Some(label))
                .count() as f64;
            assert!(
                (count - frac * class_n).abs() < 1.0,
                "class {label}: {count} vs {frac} x {class_n}"
            );
        }
    }
    println!("criterion 6 (pipeline determinism): PASS");
}

// ---------------------------------------------------------------------------
// criterion 7: classical baselines on the planted-keyword corpus
// ---------------------------------------------------------------------------

#[test]
fn criterion_07_classical_baseline_sanity() {
    let start = Instant::now();
    let dir = tempfile::tempdir().unwrap();
    let corpus = planted_keyword_corpus(200, 707);
    let corpus_path = dir.path().join("corpus.jsonl");
    save_jsonl(&corpus, &corpus_path).unwrap();

    let out_logreg = dir.path().join("logreg");
    let config_path =
        write_experiment_config(dir.path(), &corpus_path, &out_logreg, "logreg", "");
    let config = ExperimentConfig::load(&config_path).unwrap();
    let result = run_experiment(&config).unwrap();
    assert!(
        result.mean.f1 >= 0.9,
        "logreg mean F1 {} below 0.9 (per-seed {:?})",
        result.mean.f1,
        result
            .seeds
            .iter()
            .map(|s| s.report.positive_f1())
            .collect::<Vec<_>>()
    );

    let out_forest = dir.path().join("forest");
    let config_path = write_experiment_config(
        dir.path(),
        &corpus_path,
        &out_forest,
        "forest",
        "\n[forest]\nn_trees = 40\nmax_depth = 12\n",
    );
    let config = ExperimentConfig::load(&config_path).unwrap();
    let result = run_experiment(&config).unwrap();
    let elapsed = start.elapsed();
    assert!(
        result.mean.f1 >= 0.85,
        "forest mean F1 {} below 0.85",
        result.mean.f1
    );
    assert!(elapsed.as_secs() < 180, "took {elapsed:?}, budget 3 min");
    println!(
        "criterion 7 (classical baselines): PASS logreg/forest in {elapsed:?}"
    );
}

// ---------------------------------------------------------------------------
// criterion 8: schedule endpoints
// ---------------------------------------------------------------------------

#[test]
fn criterion_08_schedule_endpoints_exact() {
    for (max_lr, total) in [(2e-5f64, 100usize), (1e-3, 977), (0.4, 10)] {
        let s = LrSchedule::one_cycle(max_lr, total).unwrap();
        assert_eq!(s.lr_at(0).unwrap(), max_lr / 25.0);
        let peak = ((total as f64) * 0.3).floor() as usize;
        assert_eq!(s.lr_at(peak).unwrap(), max_lr);
        assert_eq!(s.lr_at(total - 1).unwrap(), max_lr / 1e4);
    }
    for (max_lr, total, warmup) in [(1e-5f64, 1000usize, 100usize), (3e-4, 64, 7)] {
        let s = LrSchedule::linear_warmup(max_lr, total, warmup).unwrap();
        assert_eq!(s.lr_at(warmup).unwrap(), max_lr);
        assert_eq!(s.lr_at(0).unwrap(), 0.0);
        assert_eq!(s.lr_at(total - 1).unwrap(), max_lr);
    }
    println!("criterion 8 (schedule endpoints): PASS");
}

// ---------------------------------------------------------------------------
// criterion 9: t-SNE calibration and separation
// ---------------------------------------------------------------------------

#[test]
fn criterion_09_tsne_perplexity_and_separation() {
    let start = Instant::now();

    // Per-row realized perplexity within 1% on random input.
    let mut rng = stream(909, Component::Data);
    let points = Tensor::<f64>::randn(&[200, 10], 1.0, &mut rng);
    let target = 30.0;
    let (p_cond, _) = conditional_affinities(&points, target).unwrap();
    for i in 0..200 {
        let row = &p_cond[i * 200..(i + 1) * 200];
        let entropy: f64 = row
            .iter()
            .filter(|v| **v > 0.0)
            .map(|v| -v * v.ln())
            .sum();
        let perplexity = entropy.exp();
        assert!(
            (perplexity - target).abs() / target < 0.01,
            "row {i}: realized perplexity {perplexity}"
        );
    }

    // Symmetrized affinities sum to 1.
    let p_joint = joint_affinities(&points, target).unwrap();
    let sum: f64 = p_joint.iter().sum();
    assert!((sum - 1.0).abs() < 1e-9, "sum {sum}");

    // Two separated clusters keep a silhouette above 0.5 in 2-D.
    let (clusters, labels) = two_gaussians(60, 10, 8.0, 910);
    let config = TsneConfig {
        perplexity: 15.0,
        iterations: 400,
        seed: 9,
        ..TsneConfig::default()
    };
    let embedding = tsne(&clusters, &config).unwrap();
    let silhouette = silhouette_2d(&embedding, &labels);
    let elapsed = start.elapsed();
    assert!(silhouette > 0.5, "silhouette {silhouette}");
    assert!(elapsed.as_secs() < 120, "took {elapsed:?}, budget 2 min");
    println!("criterion 9 (t-SNE): PASS silhouette {silhouette:.3} in {elapsed:?}");
}

// ---------------------------------------------------------------------------
// criterion 10: summary-statistics machinery
// ---------------------------------------------------------------------------

#[test]
fn criterion_10_corpus_statistics() {
    let make = |id: usize, title: &str, label: u8| Article {
        id: format!("f{id}"),
        domain: "fixture".to_string(),
        date: "2021-01-01".to_string(),
        title: title.to_string(),
        content: String::new(),
        label: Some(label),
        category: None,
        translated_title: None,
        translated_content: None,
    };
    // Class 1: chars 6+5+4+4+7=26, words 2+1+2+1+4=10, token chars 21,
    // punct 1+2+0+0+0=3. Class 0: chars 11+3+5+8+5=32, words 9, token
    // chars 28, punct 1.
    let corpus = Corpus::new(
        vec![
            make(0, "ab cd!", 1),
            make(1, "wow!!", 1),
            make(2, "x yz", 1),
            make(3, "aaaa", 1),
            make(4, "q r s t", 1),
            make(5, "hello world", 0),
            make(6, "a b", 0),
            make(7, "name?", 0),
            make(8, "zz zz zz", 0),
            make(9, "plain", 0),
        ],
        CorpusKind::Labeled,
    );
    let punct = baitline::corpus::default_punct();
    let stats = corpus_stats(&corpus, &punct).unwrap();
    let class1 = stats.classes.iter().find(|c| c.label == 1).unwrap();
    assert_eq!(class1.count, 5);
    assert_eq!(class1.avg_chars, 26.0 / 5.0);
    assert_eq!(class1.avg_words, 10.0 / 5.0);
    assert_eq!(class1.avg_word_length, 21.0 / 10.0);
    assert_eq!(class1.avg_punct, 3.0 / 5.0);
    let class0 = stats.classes.iter().find(|c| c.label == 0).unwrap();
    assert_eq!(class0.count, 5);
    assert_eq!(class0.avg_chars, 32.0 / 5.0);
    assert_eq!(class0.avg_words, 9.0 / 5.0);
    assert_eq!(class0.avg_word_length, 28.0 / 9.0);
    assert_eq!(class0.avg_punct, 1.0 / 5.0);

    // Real-dataset check is data-dependent and optional: runs only when the
    // corpus files are present.
    match std::env::var("BANGLABAIT_JSONL") {
        Ok(path) => {
            let corpus = load_jsonl(std::path::Path::new(&path), CorpusKind::Labeled).unwrap();
            let stats = corpus_stats(&corpus, &punct).unwrap();
            let clickbait = stats.classes.iter().find(|c| c.label == 1).unwrap();
            let non = stats.classes.iter().find(|c| c.label == 0).unwrap();
            assert_eq!(clickbait.count, 5239);
            assert_eq!(non.count, 9817);
            assert_eq!(corpus.len(), 15056);
            if let Ok(unlabeled) = std::env::var("BANGLABAIT_UNLABELED_JSONL") {
                let pool =
                    load_jsonl(std::path::Path::new(&unlabeled), CorpusKind::Unlabeled).unwrap();
                assert_eq!(pool.len(), 65406);
            }
            println!("criterion 10 (summary statistics): PASS including dataset counts");
        }
        Err(_) => {
            println!(
                "criterion 10 (summary statistics): PASS (fixture); dataset check SKIPPED (set BANGLABAIT_JSONL to enable)"
            );
        }
    }
}

//! Experiment runner: split, featurize, train, evaluate, aggregate.
//!
//! One experiment trains a single model kind over a seed list. Seeds run in
//! parallel worker threads; all file output happens afterwards on the main
//! thread, in seed order, so repeated runs produce byte-identical files.

use std::collections::HashMap;
use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};

use baitline::corpus::{self, Corpus, CorpusKind, SplitSpec};
use baitline::eval::{classification_report, mcnemar, roc_curve, EvalReport, McNemarResult};
use baitline::features::{
    assemble, char_ngrams, embed_mean, fit_tfidf, load_embeddings, load_pos_sidecar, pos_freq,
    punct_features, tokenize, transform_tfidf, word_ngrams, EmbeddingTable, FeatureMatrix,
};
use baitline::models::{
    run_training, train_logreg, train_random_forest, BiGruAttnModel, BiGruTrainer, CnnModel,
    CnnTrainer, ForestConfig, FrozenEncoder, MlpModel, MlpTrainer, ScheduleKind, TokenIndex,
    TrainConfig, TrainHistory,
};
use baitline::rng::{self, Component};
use baitline::ssgan::{train_ssgan_reps, Discriminator, GanTrainConfig, Generator};
use baitline::{Real, RealTensor};

use crate::config::{ExperimentConfig, FeatureBlockSpec, ModelKind};

/// Evaluation of one seed's run.
#[derive(Debug, Clone)]
pub struct SeedResult {
    pub seed: u64,
    pub report: EvalReport,
    pub auc: f64,
    pub best_epoch: Option<usize>,
}

/// Positive-class metrics plus accuracy and AUC.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSummary {
    pub f1: f64,
    pub precision: f64,
    pub recall: f64,
    pub accuracy: f64,
    pub auc: f64,
}

#[derive(Debug, Clone)]
pub struct RunResult {
    pub seeds: Vec<SeedResult>,
    pub mean: MetricSummary,
    pub std: MetricSummary,
}

/// One run's raw per-seed output before aggregation.
struct SeedOutcome {
    seed: u64,
    test_ids: Vec<String>,
    gold: Vec<u8>,
    pred: Vec<u8>,
    score: Vec<f64>,
    best_epoch: Option<usize>,
    history_csv: String,
}

struct SharedInputs {
    corpus: Corpus,
    unlabeled: Option<Corpus>,
    pos_by_id: Option<HashMap<String, Vec<String>>>,
    tagset: Option<Vec<String>>,
    word2vec: Option<EmbeddingTable<Real>>,
    fasttext: Option<EmbeddingTable<Real>>,
    blocks: Vec<FeatureBlockSpec>,
}

enum ModelData {
    Sparse {
        train: FeatureMatrix<Real>,
        valid: FeatureMatrix<Real>,
        test: FeatureMatrix<Real>,
    },
    Seq {
        train: Vec<Vec<usize>>,
        valid: Vec<Vec<usize>>,
        test: Vec<Vec<usize>>,
        emb: RealTensor,
    },
    Dense {
        train: RealTensor,
        valid: RealTensor,
        test: RealTensor,
    },
}

struct Prepared {
    y_train: Vec<u8>,
    y_valid: Vec<u8>,
    y_test: Vec<u8>,
    test_ids: Vec<String>,
    data: ModelData,
    unlabeled_reps: Option<RealTensor>,
}

fn load_inputs(config: &ExperimentConfig) -> Result<SharedInputs> {
    let blocks = config.feature_blocks()?;
    let mut corpus = corpus::load_jsonl(&config.data.labeled, CorpusKind::Labeled)
        .with_context(|| format!("loading {}", config.data.labeled.display()))?;
    let punct = corpus::default_punct();
    for article in &mut corpus.articles {
        article.title = corpus::normalize_text(&article.title, &punct);
    }

    let needs_unlabeled = config.model == ModelKind::Ssgan;
    let unlabeled = match (&config.data.unlabeled, needs_unlabeled) {
        (Some(path), _) => {
            let mut u = corpus::load_jsonl(path, CorpusKind::Unlabeled)
                .with_context(|| format!("loading {}", path.display()))?;
            for article in &mut u.articles {
                article.title = corpus::normalize_text(&article.title, &punct);
            }
            Some(u)
        }
        (None, true) => None, // adversarial-fake-only training
        (None, false) => None,
    };

    let needs_pos = blocks.contains(&FeatureBlockSpec::Pos);
    let (pos_by_id, tagset) = if needs_pos {
        let path = config
            .data
            .pos_sidecar
            .as_ref()
            .ok_or_else(|| anyhow!("feature spec uses POS but data.pos_sidecar is unset"))?;
        let rows = load_pos_sidecar(path)?;
        if rows.len() != corpus.len() {
            bail!(
                "POS sidecar has {} lines but corpus has {} articles",
                rows.len(),
                corpus.len()
            );
        }
        let mut map = HashMap::with_capacity(rows.len());
        let mut tags: Vec<String> = rows.iter().flatten().cloned().collect();
        tags.sort_unstable();
        tags.dedup();
        for (article, row) in corpus.articles.iter().zip(rows) {
            if map.insert(article.id.clone(), row).is_some() {
                bail!("duplicate article id `{}` breaks POS alignment", article.id);
            }
        }
        (Some(map), Some(tags))
    } else {
        (None, None)
    };

    let load_table = |path: &Option<std::path::PathBuf>, which: &str| -> Result<Option<EmbeddingTable<Real>>> {
        match path {
            Some(p) => Ok(Some(
                load_embeddings(p).with_context(|| format!("loading {which} embeddings"))?,
            )),
            None => Ok(None),
        }
    };
    let word2vec = if blocks.contains(&FeatureBlockSpec::EmbeddingWord2vec) {
        let t = load_table(&config.data.embeddings_word2vec, "word2vec")?;
        if t.is_none() {
            bail!("feature spec uses `E W` but data.embeddings_word2vec is unset");
        }
        t
    } else {
        None
    };
    let fasttext = if blocks.contains(&FeatureBlockSpec::EmbeddingFasttext) {
        let t = load_table(&config.data.embeddings_fasttext, "fasttext")?;
        if t.is_none() {
            bail!("feature spec uses `E F` but data.embeddings_fasttext is unset");
        }
        t
    } else {
        None
    };

    Ok(SharedInputs {
        corpus,
        unlabeled,
        pos_by_id,
        tagset,
        word2vec,
        fasttext,
        blocks,
    })
}

/// The embedding table that sequence and encoder models run on: the first
/// embedding block named in the spec.
fn embedding_table<'a>(shared: &'a SharedInputs) -> Result<&'a EmbeddingTable<Real>> {
    for block in &shared.blocks {
        match block {
            FeatureBlockSpec::EmbeddingWord2vec => {
                return shared
                    .word2vec
                    .as_ref()
                    .ok_or_else(|| anyhow!("word2vec table missing"));
            }
            FeatureBlockSpec::EmbeddingFasttext => {
                return shared
                    .fasttext
                    .as_ref()
                    .ok_or_else(|| anyhow!("fasttext table missing"));
            }
            _ => {}
        }
    }
    bail!("this model needs an embedding block (`E W` or `E F`) in `features`")
}

fn sparse_blocks(
    shared: &SharedInputs,
    config: &ExperimentConfig,
    splits: [&Corpus; 3],
) -> Result<[FeatureMatrix<Real>; 3]> {
    let punct = corpus::default_punct();
    let min_df = config.model_params.min_df;
    let titles: Vec<Vec<&str>> = splits
        .iter()
        .map(|c| c.titles().collect::<Vec<_>>())
        .collect();
    let tokens: Vec<Vec<Vec<String>>> = titles
        .iter()
        .map(|split| split.iter().map(|t| tokenize(t)).collect())
        .collect();

    let mut per_split: Vec<Vec<FeatureMatrix<Real>>> = vec![Vec::new(), Vec::new(), Vec::new()];
    for block in &shared.blocks {
        match block {
            FeatureBlockSpec::WordUnigram
            | FeatureBlockSpec::WordBigram
            | FeatureBlockSpec::WordTrigram => {
                let n = match block {
                    FeatureBlockSpec::WordUnigram => 1,
                    FeatureBlockSpec::WordBigram => 2,
                    _ => 3,
                };
                let docs: Vec<Vec<Vec<String>>> = tokens
                    .iter()
                    .map(|split| {
                        split
                            .iter()
                            .map(|toks| word_ngrams(toks, n, n))
                            .collect::<Result<_, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                let vocab = fit_tfidf::<Real>(&docs[0], min_df)?;
                for (s, split_docs) in docs.iter().enumerate() {
                    let rows = split_docs
                        .iter()
                        .map(|d| transform_tfidf(d, &vocab))
                        .collect();
                    per_split[s].push(FeatureMatrix::from_rows(block.name(), rows));
                }
            }
            FeatureBlockSpec::Char3 | FeatureBlockSpec::Char4 | FeatureBlockSpec::Char5 => {
                let n = match block {
                    FeatureBlockSpec::Char3 => 3,
                    FeatureBlockSpec::Char4 => 4,
                    _ => 5,
                };
                let docs: Vec<Vec<Vec<String>>> = titles
                    .iter()
                    .map(|split| {
                        split
                            .iter()
                            .map(|t| char_ngrams(t, n, n))
                            .collect::<Result<_, _>>()
                    })
                    .collect::<Result<_, _>>()?;
                let vocab = fit_tfidf::<Real>(&docs[0], min_df)?;
                for (s, split_docs) in docs.iter().enumerate() {
                    let rows = split_docs
                        .iter()
                        .map(|d| transform_tfidf(d, &vocab))
                        .collect();
                    per_split[s].push(FeatureMatrix::from_rows(block.name(), rows));
                }
            }
            FeatureBlockSpec::Pos => {
                let map = shared
                    .pos_by_id
                    .as_ref()
                    .ok_or_else(|| anyhow!("POS tags not loaded"))?;
                let tagset = shared.tagset.as_ref().expect("tagset with POS map");
                for (s, split) in splits.iter().enumerate() {
                    let rows: Vec<Vec<Real>> = split
                        .articles
                        .iter()
                        .map(|a| {
                            let tags = map.get(&a.id).ok_or_else(|| {
                                anyhow!("article `{}` missing from POS sidecar", a.id)
                            })?;
                            Ok(pos_freq::<Real, _>(tags, tagset)?)
                        })
                        .collect::<Result<_>>()?;
                    per_split[s].push(FeatureMatrix::from_dense_rows("POS", &rows));
                }
            }
            FeatureBlockSpec::EmbeddingWord2vec | FeatureBlockSpec::EmbeddingFasttext => {
                let table = if *block == FeatureBlockSpec::EmbeddingWord2vec {
                    shared.word2vec.as_ref().expect("checked at load")
                } else {
                    shared.fasttext.as_ref().expect("checked at load")
                };
                for (s, split_tokens) in tokens.iter().enumerate() {
                    let rows: Vec<Vec<Real>> = split_tokens
                        .iter()
                        .map(|toks| {
                            let cut = toks.len().min(config.title_len);
                            embed_mean(&toks[..cut], table).0
                        })
                        .collect();
                    per_split[s].push(FeatureMatrix::from_dense_rows(block.name(), &rows));
                }
            }
            FeatureBlockSpec::Punct => {
                for (s, split_titles) in titles.iter().enumerate() {
                    let rows: Vec<Vec<Real>> = split_titles
                        .iter()
                        .map(|t| punct_features(t, &punct))
                        .collect();
                    per_split[s].push(FeatureMatrix::from_dense_rows("P", &rows));
                }
            }
        }
    }
    let mut out = per_split
        .into_iter()
        .map(|blocks| Ok(assemble(&blocks)?))
        .collect::<Result<Vec<_>>>()?;
    let test = out.pop().unwrap();
    let valid = out.pop().unwrap();
    let train = out.pop().unwrap();
    Ok([train, valid, test])
}

fn prepare(shared: &SharedInputs, config: &ExperimentConfig, split_seed: u64) -> Result<Prepared> {
    let spec = SplitSpec::parse_ratio(&config.split.ratio, split_seed)?;
    let (train, valid, test) = corpus::stratified_split(&shared.corpus, &spec)?;
    let y_train = train.labels()?;
    let y_valid = valid.labels()?;
    let y_test = test.labels()?;
    let test_ids = test.articles.iter().map(|a| a.id.clone()).collect();

    let (data, unlabeled_reps) = match config.model {
        ModelKind::Logreg | ModelKind::Forest => {
            let [train_x, valid_x, test_x] = sparse_blocks(shared, config, [&train, &valid, &test])?;
            (
                ModelData::Sparse {
                    train: train_x,
                    valid: valid_x,
                    test: test_x,
                },
                None,
            )
        }
        ModelKind::Cnn | ModelKind::BigruAttn => {
            let table = embedding_table(shared)?;
            let index = TokenIndex::from_table(table);
            let encode =
                |c: &Corpus| index.encode_titles(c.titles(), config.title_len);
            let data = ModelData::Seq {
                train: encode(&train),
                valid: encode(&valid),
                test: encode(&test),
                emb: index.matrix().clone(),
            };
            (data, None)
        }
        ModelKind::SupervisedMlp | ModelKind::Ssgan => {
            let table = embedding_table(shared)?;
            let encoder = FrozenEncoder::new(table, config.title_len);
            let data = ModelData::Dense {
                train: encoder.encode_titles(train.titles()),
                valid: encoder.encode_titles(valid.titles()),
                test: encoder.encode_titles(test.titles()),
            };
            let unlabeled_reps = match (&shared.unlabeled, config.model) {
                (Some(u), ModelKind::Ssgan) => Some(encoder.encode_titles(u.titles())),
                _ => None,
            };
            (data, unlabeled_reps)
        }
    };

    Ok(Prepared {
        y_train,
        y_valid,
        y_test,
        test_ids,
        data,
        unlabeled_reps,
    })
}

fn schedule_kind(config: &ExperimentConfig) -> ScheduleKind {
    match config.train.schedule.as_str() {
        "linear_warmup" => ScheduleKind::LinearWarmup(config.ssgan.warmup_frac),
        "constant" => ScheduleKind::Constant,
        _ => ScheduleKind::OneCycle,
    }
}

fn supervised_history_csv(history: &TrainHistory<Real>) -> String {
    let mut out = String::from("epoch,train_loss,valid_f1\n");
    for e in &history.epochs {
        let f1 = e.valid_f1.map(|v| v.to_string()).unwrap_or_default();
        let _ = writeln!(out, "{},{},{f1}", e.epoch, e.train_loss);
    }
    out
}

fn run_seed(config: &ExperimentConfig, prepared: &Prepared, seed: u64) -> Result<SeedOutcome> {
    let tc = TrainConfig {
        epochs: config.train.epochs,
        batch_size: config.train.batch,
        max_lr: config.train.lr,
        schedule: schedule_kind(config),
        l2: config.train.l2,
        dropout: config.train.dropout,
        seed,
        class_weights: None,
    };
    let context = format!("model={} features={} seed={seed}", config.model, config.features);

    let (pred, score, best_epoch, history_csv) = match (&prepared.data, config.model) {
        (ModelData::Sparse { train, valid, test }, ModelKind::Logreg) => {
            let valid_opt = (!prepared.y_valid.is_empty()).then_some((valid, &prepared.y_valid[..]));
            let (model, history) =
                train_logreg(train, &prepared.y_train, valid_opt, &tc).context(context)?;
            let pred = model.predict_all(test);
            let score = model.proba_all(test);
            (pred, score, history.best_epoch, supervised_history_csv(&history))
        }
        (ModelData::Sparse { train, test, .. }, ModelKind::Forest) => {
            let fc = ForestConfig {
                n_trees: config.forest.n_trees,
                max_depth: config.forest.max_depth,
                seed,
                ..ForestConfig::default()
            };
            let forest = train_random_forest(train, &prepared.y_train, &fc).context(context)?;
            let pred = forest.predict_all(test);
            let score = test.rows().iter().map(|r| forest.vote_fraction(r)).collect();
            (pred, score, None, String::from("epoch,train_loss,valid_f1\n"))
        }
        (ModelData::Seq { train, valid, test, emb }, ModelKind::Cnn) => {
            let mut init = rng::stream(seed, Component::Init);
            let model = CnnModel::init(
                emb.shape()[1],
                &config.model_params.filter_widths,
                config.model_params.filters_per_width,
                tc.dropout,
                &mut init,
            );
            let valid_opt =
                (!prepared.y_valid.is_empty()).then_some((&valid[..], &prepared.y_valid[..]));
            let mut trainer =
                CnnTrainer::new(model, train, &prepared.y_train, emb, valid_opt, &tc)
                    .context(context.clone())?;
            let (best, history) = run_training(&mut trainer, &tc).context(context)?;
            let pred = best.predict(test, emb)?;
            let score = best.predict_proba(test, emb)?;
            (pred, score, history.best_epoch, supervised_history_csv(&history))
        }
        (ModelData::Seq { train, valid, test, emb }, ModelKind::BigruAttn) => {
            let mut init = rng::stream(seed, Component::Init);
            let model = BiGruAttnModel::init(
                emb.shape()[1],
                config.model_params.hidden,
                tc.dropout,
                &mut init,
            );
            let valid_opt =
                (!prepared.y_valid.is_empty()).then_some((&valid[..], &prepared.y_valid[..]));
            let mut trainer =
                BiGruTrainer::new(model, train, &prepared.y_train, emb, valid_opt, &tc)
                    .context(context.clone())?;
            let (best, history) = run_training(&mut trainer, &tc).context(context)?;
            let pred = best.predict(test, emb)?;
            let score = best.predict_proba(test, emb)?;
            (pred, score, history.best_epoch, supervised_history_csv(&history))
        }
        (ModelData::Dense { train, valid, test }, ModelKind::SupervisedMlp) => {
            let mut init = rng::stream(seed, Component::Init);
            let model = MlpModel::init(
                train.shape()[1],
                config.model_params.hidden,
                2,
                0.2,
                tc.dropout,
                &mut init,
            );
            let valid_opt = (!prepared.y_valid.is_empty()).then_some((valid, &prepared.y_valid[..]));
            let mut trainer = MlpTrainer::new(
                model,
                train,
                &prepared.y_train,
                valid_opt,
                &tc,
                baitline::autodiff::AdamConfig::adam(),
            )
            .context(context.clone())?;
            let (best, history) = run_training(&mut trainer, &tc).context(context)?;
            let pred = best.predict(test)?;
            let score = best.predict_proba(test)?;
            (pred, score, history.best_epoch, supervised_history_csv(&history))
        }
        (ModelData::Dense { train, valid, test }, ModelKind::Ssgan) => {
            let d = train.shape()[1];
            let mut init = rng::stream(seed, Component::Init);
            let gen = Generator::init(d, d, 100, 0.2, 0.1, &mut init);
            let disc = Discriminator::init(d, d, 2, 0.2, 0.1, &mut init);
            let gc = GanTrainConfig {
                epochs: config.train.epochs,
                batch_size: config.train.batch,
                max_lr: config.train.lr,
                warmup_frac: config.ssgan.warmup_frac,
                weight_decay: config.ssgan.weight_decay,
                seed,
                adversarial: true,
            };
            let empty = RealTensor::zeros(&[0, d]);
            let unlabeled = prepared.unlabeled_reps.as_ref().unwrap_or(&empty);
            let valid_opt = (!prepared.y_valid.is_empty()).then_some((valid, &prepared.y_valid[..]));
            let (disc, _, history) = train_ssgan_reps(
                gen,
                disc,
                train,
                &prepared.y_train,
                unlabeled,
                valid_opt,
                &gc,
            )
            .context(context)?;
            let prediction = baitline::ssgan::predict(&disc, test)?;
            let score = prediction.probs.iter().map(|p| p[1]).collect();
            let mut csv = Vec::new();
            history.write_csv(&mut csv)?;
            (
                prediction.labels,
                score,
                history.best_epoch,
                String::from_utf8(csv).expect("utf8 csv"),
            )
        }
        _ => bail!("internal: model data does not match model kind"),
    };

    Ok(SeedOutcome {
        seed,
        test_ids: prepared.test_ids.clone(),
        gold: prepared.y_test.clone(),
        pred,
        score,
        best_epoch,
        history_csv,
    })
}

fn summarize(results: &[SeedResult]) -> (MetricSummary, MetricSummary) {
    let pull = |f: &dyn Fn(&SeedResult) -> f64| -> (f64, f64) {
        let values: Vec<f64> = results.iter().map(f).collect();
        let n = values.len() as f64;
        let mean = values.iter().sum::<f64>() / n;
        let std = if values.len() > 1 {
            (values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)).sqrt()
        } else {
            0.0
        };
        (mean, std)
    };
    let metric = |r: &SeedResult, which: usize| -> f64 {
        let c = r.report.class(1);
        match which {
            0 => c.map(|c| c.f1).unwrap_or(0.0),
            1 => c.map(|c| c.precision).unwrap_or(0.0),
            2 => c.map(|c| c.recall).unwrap_or(0.0),
            3 => r.report.accuracy,
            _ => r.auc,
        }
    };
    let (f1_m, f1_s) = pull(&|r| metric(r, 0));
    let (p_m, p_s) = pull(&|r| metric(r, 1));
    let (r_m, r_s) = pull(&|r| metric(r, 2));
    let (a_m, a_s) = pull(&|r| metric(r, 3));
    let (auc_m, auc_s) = pull(&|r| metric(r, 4));
    (
        MetricSummary {
            f1: f1_m,
            precision: p_m,
            recall: r_m,
            accuracy: a_m,
            auc: auc_m,
        },
        MetricSummary {
            f1: f1_s,
            precision: p_s,
            recall: r_s,
            accuracy: a_s,
            auc: auc_s,
        },
    )
}

/// Runs the experiment over every seed and writes `results.csv`,
/// `summary.csv`, and per-seed prediction and history files to the
/// configured output directory.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunResult> {
    config.validate()?;
    let shared = load_inputs(config)?;
    let fixed = if config.split.resplit_per_seed {
        None
    } else {
        Some(prepare(&shared, config, config.split.seed)?)
    };

    let outcomes: Vec<Result<SeedOutcome>> = std::thread::scope(|scope| {
        let handles: Vec<_> = config
            .train
            .seeds
            .iter()
            .map(|&seed| {
                let shared = &shared;
                let fixed = &fixed;
                scope.spawn(move || -> Result<SeedOutcome> {
                    let local;
                    let prepared = match fixed {
                        Some(p) => p,
                        None => {
                            local = prepare(shared, config, seed)?;
                            &local
                        }
                    };
                    run_seed(config, prepared, seed)
                })
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("seed worker panicked"))
            .collect()
    });

    fs::create_dir_all(&config.output_dir)
        .with_context(|| format!("creating {}", config.output_dir.display()))?;

    let mut seed_results = Vec::new();
    let mut results_csv = String::from("model,features,f1,precision,recall,accuracy,auc,seed\n");
    for outcome in outcomes {
        let outcome = outcome?;
        let report = classification_report(&outcome.gold, &outcome.pred)?;
        let auc = roc_curve(&outcome.gold, &outcome.score)?.auc;
        let class1 = report.class(1);
        let _ = writeln!(
            results_csv,
            "{},{},{},{},{},{},{},{}",
            config.model,
            config.features,
            class1.map(|c| c.f1).unwrap_or(0.0),
            class1.map(|c| c.precision).unwrap_or(0.0),
            class1.map(|c| c.recall).unwrap_or(0.0),
            report.accuracy,
            auc,
            outcome.seed
        );

        write_predictions(
            &config
                .output_dir
                .join(format!("seed{}_predictions.csv", outcome.seed)),
            &outcome.test_ids,
            &outcome.gold,
            &outcome.pred,
            &outcome.score,
        )?;
        fs::write(
            config
                .output_dir
                .join(format!("seed{}_history.csv", outcome.seed)),
            &outcome.history_csv,
        )?;

        seed_results.push(SeedResult {
            seed: outcome.seed,
            report,
            auc,
            best_epoch: outcome.best_epoch,
        });
    }
    fs::write(config.output_dir.join("results.csv"), &results_csv)?;

    let (mean, std) = summarize(&seed_results);
    let mut summary = String::from("metric,mean,std\n");
    for (name, m, s) in [
        ("f1", mean.f1, std.f1),
        ("precision", mean.precision, std.precision),
        ("recall", mean.recall, std.recall),
        ("accuracy", mean.accuracy, std.accuracy),
        ("auc", mean.auc, std.auc),
    ] {
        let _ = writeln!(summary, "{name},{m},{s}");
    }
    fs::write(config.output_dir.join("summary.csv"), &summary)?;

    Ok(RunResult {
        seeds: seed_results,
        mean,
        std,
    })
}

/// Aligned per-item predictions of one model on one test set.
#[derive(Debug, Clone, PartialEq)]
pub struct PredictionFile {
    pub ids: Vec<String>,
    pub gold: Vec<u8>,
    pub pred: Vec<u8>,
    pub score: Vec<f64>,
}

pub fn write_predictions(
    path: &Path,
    ids: &[String],
    gold: &[u8],
    pred: &[u8],
    score: &[f64],
) -> Result<()> {
    let mut out = String::from("id,gold,pred,score\n");
    for i in 0..ids.len() {
        let _ = writeln!(out, "{},{},{},{}", ids[i], gold[i], pred[i], score[i]);
    }
    fs::write(path, out).with_context(|| format!("writing {}", path.display()))?;
    Ok(())
}

pub fn read_predictions(path: &Path) -> Result<PredictionFile> {
    let text =
        fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut lines = text.lines();
    let header = lines.next().unwrap_or_default();
    if header != "id,gold,pred,score" {
        bail!("bad predictions header `{header}` in {}", path.display());
    }
    let mut file = PredictionFile {
        ids: Vec::new(),
        gold: Vec::new(),
        pred: Vec::new(),
        score: Vec::new(),
    };
    for (idx, line) in lines.enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let parts: Vec<&str> = line.split(',').collect();
        if parts.len() != 4 {
            bail!("bad predictions row {} in {}", idx + 2, path.display());
        }
        file.ids.push(parts[0].to_string());
        file.gold.push(parts[1].parse()?);
        file.pred.push(parts[2].parse()?);
        file.score.push(parts[3].parse()?);
    }
    Ok(file)
}

/// McNemar comparison of two aligned prediction files plus a side-by-side
/// metric table.
pub fn compare_predictions(
    name_a: &str,
    a: &PredictionFile,
    name_b: &str,
    b: &PredictionFile,
) -> Result<(McNemarResult, String)> {
    if a.ids != b.ids || a.gold != b.gold {
        bail!("prediction files are not aligned on the same test items");
    }
    let result = mcnemar(&a.gold, &a.pred, &b.pred)?;
    let mut csv = String::from("model,f1,precision,recall,accuracy,p_value\n");
    for (name, file) in [(name_a, a), (name_b, b)] {
        let report = classification_report(&file.gold, &file.pred)?;
        let c = report.class(1);
        let _ = writeln!(
            csv,
            "{name},{},{},{},{},{}",
            c.map(|c| c.f1).unwrap_or(0.0),
            c.map(|c| c.precision).unwrap_or(0.0),
            c.map(|c| c.recall).unwrap_or(0.0),
            report.accuracy,
            result.p_value
        );
    }
    Ok((result, csv))
}

//! `baitline` command-line interface.
//!
//! Binds the pipeline into subcommands: ingest → dedup → curate-test →
//! split → stats / kappa / featurize → train → eval / roc / tsne / compare.
//! Exit codes: 0 success, 1 user error (bad input, missing file, invalid
//! flag), 2 internal error.

use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Parser, Subcommand};
use num_rational::Ratio;
use num_traits::ToPrimitive;

use baitline::annotation::{fleiss_kappa, majority_vote, AnnotationMatrix, KappaResult};
use baitline::autodiff::Tensor;
use baitline::corpus::{
    self, corpus_stats, curate_test_split, dedup_exact, load_jsonl, save_jsonl, stratified_split,
    write_stats_csv, CorpusKind, SplitSpec,
};
use baitline::eval::{
    classification_report, roc_curve, tsne, write_roc_csv, write_tsne_csv, TsneConfig,
};
use baitline::features::{
    assemble, char_ngrams, fit_tfidf, tokenize, transform_tfidf, word_ngrams, FeatureMatrix,
};
use baitline::Real;

use baitline_cli::config::{parse_feature_spec, ExperimentConfig, FeatureBlockSpec};
use baitline_cli::experiment::{compare_predictions, read_predictions, run_experiment};

#[derive(Parser)]
#[command(name = "baitline", version, about = "Semi-supervised clickbait detection toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Validate a raw JSONL corpus and normalize titles and contents.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_parser = parse_kind, default_value = "labeled")]
        kind: CorpusKind,
        /// Drop articles whose titles normalize to empty instead of failing.
        #[arg(long)]
        drop_empty: bool,
    },
    /// Remove exact (title, content) duplicates, keeping first occurrences.
    Dedup {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, value_parser = parse_kind, default_value = "labeled")]
        kind: CorpusKind,
    },
    /// Drop test articles whose titles are near-duplicates of training titles.
    CurateTest {
        #[arg(long)]
        train: PathBuf,
        #[arg(long)]
        test: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Normalized similarity threshold in (0, 1].
        #[arg(long, default_value_t = 0.8)]
        threshold: f64,
    },
    /// Stratified train/valid/test split of a labeled corpus.
    Split {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output_dir: PathBuf,
        #[arg(long, default_value = "70:10:20")]
        ratio: String,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Per-class title statistics of a labeled corpus.
    Stats {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Majority vote and Fleiss' kappa of an annotation CSV.
    Kappa {
        #[arg(long)]
        ratings: PathBuf,
        /// Treat the first CSV row as a header.
        #[arg(long)]
        header: bool,
        /// Write the majority-vote labels here, one per line.
        #[arg(long)]
        votes: Option<PathBuf>,
    },
    /// Sparse feature extraction to triplet CSV plus block descriptors.
    Featurize {
        #[arg(long)]
        input: PathBuf,
        /// Feature spec, e.g. "C3+C4+C5" or "U+B+T".
        #[arg(long)]
        features: String,
        /// Output prefix; writes <prefix>_triplets.csv and <prefix>_blocks.json.
        #[arg(long)]
        output_prefix: String,
        #[arg(long, default_value_t = 2)]
        min_df: usize,
    },
    /// Run a configured experiment over its seed list.
    Train {
        #[arg(long)]
        config: PathBuf,
        /// Override the config's seed list.
        #[arg(long, value_delimiter = ',')]
        seeds: Option<Vec<u64>>,
        /// Override the config's output directory.
        #[arg(long)]
        output_dir: Option<PathBuf>,
    },
    /// Classification report of a predictions file.
    Eval {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// ROC curve and AUC of a predictions file.
    Roc {
        #[arg(long)]
        predictions: PathBuf,
        #[arg(long)]
        output: PathBuf,
    },
    /// Exact t-SNE projection of a numeric CSV to x,y,label.
    Tsne {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        output: PathBuf,
        /// Input rows end with a label column.
        #[arg(long)]
        labeled: bool,
        #[arg(long, default_value_t = 30.0)]
        perplexity: f64,
        #[arg(long, default_value_t = 500)]
        iterations: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// McNemar comparison of two aligned prediction files.
    Compare {
        #[arg(long)]
        a: PathBuf,
        #[arg(long)]
        b: PathBuf,
        #[arg(long)]
        output: PathBuf,
        #[arg(long, default_value = "model_a")]
        name_a: String,
        #[arg(long, default_value = "model_b")]
        name_b: String,
    },
}

fn parse_kind(s: &str) -> Result<CorpusKind, String> {
    match s {
        "labeled" => Ok(CorpusKind::Labeled),
        "unlabeled" => Ok(CorpusKind::Unlabeled),
        other => Err(format!("`{other}` is not `labeled` or `unlabeled`")),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0u8,
                _ => 1u8,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            // I/O failures while writing results are internal; everything
            // else stems from user input.
            let internal = e.chain().any(|c| {
                c.downcast_ref::<std::io::Error>()
                    .is_some_and(|io| io.kind() != std::io::ErrorKind::NotFound)
            });
            ExitCode::from(if internal { 2 } else { 1 })
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Ingest {
            input,
            output,
            kind,
            drop_empty,
        } => {
            let mut corpus = load_jsonl(&input, kind)?;
            let punct = corpus::default_punct();
            for article in &mut corpus.articles {
                article.title = corpus::normalize_text(&article.title, &punct);
                article.content = corpus::normalize_text(&article.content, &punct);
            }
            if drop_empty {
                let before = corpus.len();
                corpus.articles.retain(|a| !a.title.is_empty());
                if corpus.len() < before {
                    log::warn!("dropped {} articles with empty titles", before - corpus.len());
                }
            } else if let Some(bad) = corpus.articles.iter().find(|a| a.title.is_empty()) {
                bail!(
                    "article `{}` has an empty title after normalization (use --drop-empty to filter)",
                    bad.id
                );
            }
            save_jsonl(&corpus, &output)?;
            println!("ingested {} articles", corpus.len());
        }
        Command::Dedup { input, output, kind } => {
            let corpus = load_jsonl(&input, kind)?;
            let deduped = dedup_exact(&corpus);
            println!("kept {} of {} articles", deduped.len(), corpus.len());
            save_jsonl(&deduped, &output)?;
        }
        Command::CurateTest {
            train,
            test,
            output,
            threshold,
        } => {
            let train = load_jsonl(&train, CorpusKind::Labeled)?;
            let test = load_jsonl(&test, CorpusKind::Labeled)?;
            let curated = curate_test_split(&train, &test, threshold)?;
            println!("kept {} of {} test articles", curated.len(), test.len());
            save_jsonl(&curated, &output)?;
        }
        Command::Split {
            input,
            output_dir,
            ratio,
            seed,
        } => {
            let corpus = load_jsonl(&input, CorpusKind::Labeled)?;
            let spec = SplitSpec::parse_ratio(&ratio, seed)?;
            let (train, valid, test) = stratified_split(&corpus, &spec)?;
            std::fs::create_dir_all(&output_dir)?;
            save_jsonl(&train, &output_dir.join("train.jsonl"))?;
            save_jsonl(&valid, &output_dir.join("valid.jsonl"))?;
            save_jsonl(&test, &output_dir.join("test.jsonl"))?;
            println!(
                "split {} -> {}/{}/{}",
                corpus.len(),
                train.len(),
                valid.len(),
                test.len()
            );
        }
        Command::Stats { input, output } => {
            let corpus = load_jsonl(&input, CorpusKind::Labeled)?;
            let stats = corpus_stats(&corpus, &corpus::default_punct())?;
            for class in &stats.classes {
                println!("class {}: {} articles", class.label, class.count);
            }
            let file = std::fs::File::create(&output)?;
            write_stats_csv(&stats, file)?;
        }
        Command::Kappa {
            ratings,
            header,
            votes,
        } => {
            let matrix = AnnotationMatrix::from_csv_path(&ratings, header)?;
            // Counts are integers, so the whole computation is exact over
            // rationals; display the rounded decimal of the exact value.
            let result: KappaResult<Ratio<i128>> = fleiss_kappa(&matrix)?;
            let show = |r: &Ratio<i128>| r.to_f64().unwrap_or(f64::NAN);
            println!("kappa {}", show(&result.kappa));
            println!("p_bar {}", show(&result.p_bar));
            println!("p_e {}", show(&result.p_e));
            if let Some(path) = votes {
                let labels = majority_vote(&matrix)?;
                let text: String = labels.iter().map(|l| format!("{l}\n")).collect();
                std::fs::write(path, text)?;
            }
        }
        Command::Featurize {
            input,
            features,
            output_prefix,
            min_df,
        } => {
            let blocks = parse_feature_spec(&features)?;
            let corpus = load_jsonl(&input, CorpusKind::Unlabeled)?;
            let punct = corpus::default_punct();
            let titles: Vec<String> = corpus
                .titles()
                .map(|t| corpus::normalize_text(t, &punct))
                .collect();
            let matrix = featurize_simple(&titles, &blocks, min_df, &punct)?;
            let triplets = std::fs::File::create(format!("{output_prefix}_triplets.csv"))?;
            matrix.write_triplets(triplets)?;
            let blocks_file = std::fs::File::create(format!("{output_prefix}_blocks.json"))?;
            matrix.write_blocks_json(blocks_file)?;
            println!(
                "featurized {} titles into width {}",
                matrix.n_rows(),
                matrix.dim()
            );
        }
        Command::Train {
            config,
            seeds,
            output_dir,
        } => {
            let mut config = ExperimentConfig::load(&config)?;
            if let Some(seeds) = seeds {
                config.train.seeds = seeds;
            }
            if let Some(dir) = output_dir {
                config.output_dir = dir;
            }
            let result = run_experiment(&config)?;
            println!(
                "mean over {} seeds: f1 {:.4} precision {:.4} recall {:.4} accuracy {:.4} auc {:.4}",
                result.seeds.len(),
                result.mean.f1,
                result.mean.precision,
                result.mean.recall,
                result.mean.accuracy,
                result.mean.auc
            );
            println!("results written to {}", config.output_dir.display());
        }
        Command::Eval {
            predictions,
            output,
        } => {
            let file = read_predictions(&predictions)?;
            let report = classification_report(&file.gold, &file.pred)?;
            let mut csv = String::from("class,tp,fp,fn,tn,precision,recall,f1,accuracy\n");
            for c in &report.classes {
                csv.push_str(&format!(
                    "{},{},{},{},{},{},{},{},{}\n",
                    c.label, c.tp, c.fp, c.fn_, c.tn, c.precision, c.recall, c.f1, report.accuracy
                ));
            }
            std::fs::write(&output, csv)?;
            println!("accuracy {}", report.accuracy);
        }
        Command::Roc {
            predictions,
            output,
        } => {
            let file = read_predictions(&predictions)?;
            let curve = roc_curve(&file.gold, &file.score)?;
            let out = std::fs::File::create(&output)?;
            write_roc_csv(&curve, out)?;
            println!("auc {}", curve.auc);
        }
        Command::Tsne {
            input,
            output,
            labeled,
            perplexity,
            iterations,
            seed,
        } => {
            let (points, labels) = read_points_csv(&input, labeled)?;
            let config = TsneConfig {
                perplexity,
                iterations,
                seed,
                ..TsneConfig::default()
            };
            let embedding = tsne(&points, &config)?;
            let out = std::fs::File::create(&output)?;
            write_tsne_csv(&embedding, &labels, out)?;
            println!("projected {} points", points.shape()[0]);
        }
        Command::Compare {
            a,
            b,
            output,
            name_a,
            name_b,
        } => {
            let file_a = read_predictions(&a)?;
            let file_b = read_predictions(&b)?;
            let (result, csv) = compare_predictions(&name_a, &file_a, &name_b, &file_b)?;
            std::fs::write(&output, csv)?;
            if result.no_disagreements {
                println!("no disagreements between the models");
            }
            println!(
                "b {} c {} statistic {} p {} ({:?})",
                result.b, result.c, result.statistic, result.p_value, result.method
            );
        }
    }
    Ok(())
}

/// Whole-corpus featurization for the `featurize` subcommand: lexical and
/// punctuation blocks only (POS and embeddings need sidecar inputs that the
/// experiment config supplies).
fn featurize_simple(
    titles: &[String],
    blocks: &[FeatureBlockSpec],
    min_df: usize,
    punct: &[char],
) -> Result<FeatureMatrix<Real>> {
    let tokens: Vec<Vec<String>> = titles.iter().map(|t| tokenize(t)).collect();
    let mut built = Vec::new();
    for block in blocks {
        match block {
            FeatureBlockSpec::WordUnigram
            | FeatureBlockSpec::WordBigram
            | FeatureBlockSpec::WordTrigram => {
                let n = match block {
                    FeatureBlockSpec::WordUnigram => 1,
                    FeatureBlockSpec::WordBigram => 2,
                    _ => 3,
                };
                let docs: Vec<Vec<String>> = tokens
                    .iter()
                    .map(|t| word_ngrams(t, n, n))
                    .collect::<Result<_, _>>()?;
                let vocab = fit_tfidf::<Real>(&docs, min_df)?;
                let rows = docs.iter().map(|d| transform_tfidf(d, &vocab)).collect();
                built.push(FeatureMatrix::from_rows(block.name(), rows));
            }
            FeatureBlockSpec::Char3 | FeatureBlockSpec::Char4 | FeatureBlockSpec::Char5 => {
                let n = match block {
                    FeatureBlockSpec::Char3 => 3,
                    FeatureBlockSpec::Char4 => 4,
                    _ => 5,
                };
                let docs: Vec<Vec<String>> = titles
                    .iter()
                    .map(|t| char_ngrams(t, n, n))
                    .collect::<Result<_, _>>()?;
                let vocab = fit_tfidf::<Real>(&docs, min_df)?;
                let rows = docs.iter().map(|d| transform_tfidf(d, &vocab)).collect();
                built.push(FeatureMatrix::from_rows(block.name(), rows));
            }
            FeatureBlockSpec::Punct => {
                let rows: Vec<Vec<Real>> = titles
                    .iter()
                    .map(|t| baitline::features::punct_features(t, punct))
                    .collect();
                built.push(FeatureMatrix::from_dense_rows("P", &rows));
            }
            other => bail!(
                "block `{}` needs sidecar inputs; run it through an experiment config",
                other.name()
            ),
        }
    }
    Ok(assemble(&built)?)
}

/// Reads a numeric CSV (no header) into a points tensor, optionally taking
/// the final column as integer labels.
fn read_points_csv(path: &PathBuf, labeled: bool) -> Result<(Tensor<Real>, Vec<u8>)> {
    let text =
        std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut rows: Vec<Vec<Real>> = Vec::new();
    let mut labels = Vec::new();
    for (idx, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let mut values: Vec<Real> = line
            .split(',')
            .map(|f| {
                f.trim()
                    .parse::<Real>()
                    .map_err(|_| anyhow!("bad value `{f}` at line {}", idx + 1))
            })
            .collect::<Result<_>>()?;
        if labeled {
            let label = values
                .pop()
                .ok_or_else(|| anyhow!("empty row at line {}", idx + 1))?;
            labels.push(label as u8);
        }
        rows.push(values);
    }
    let dim = rows.first().map(|r| r.len()).unwrap_or(0);
    if rows.iter().any(|r| r.len() != dim) {
        bail!("ragged rows in {}", path.display());
    }
    let flat: Vec<Real> = rows.into_iter().flatten().collect();
    let n = if dim == 0 { 0 } else { flat.len() / dim };
    Ok((
        Tensor::from_vec(vec![n, dim], flat).map_err(|e| anyhow!("{e}"))?,
        labels,
    ))
}

//! Declarative experiment configuration (TOML) and the feature-spec grammar.
//!
//! Feature specs name column blocks joined by `+`, mirroring the sweep-table
//! row names: `U` (word unigrams), `B` (bigrams), `T` (trigrams), `C3`-`C5`
//! (char n-grams), `POS` (tag frequencies), `E W` / `E F` (word2vec /
//! fasttext mean embeddings), `P` (punctuation counts), plus the shorthands
//! `L` = `U+B+T+C3+C4+C5` and `ALL` = `L+POS+E W+E F+P`.

use std::fmt;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use serde::{Deserialize, Serialize};

/// One column-block family.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureBlockSpec {
    WordUnigram,
    WordBigram,
    WordTrigram,
    Char3,
    Char4,
    Char5,
    Pos,
    EmbeddingWord2vec,
    EmbeddingFasttext,
    Punct,
}

impl FeatureBlockSpec {
    pub fn name(&self) -> &'static str {
        match self {
            FeatureBlockSpec::WordUnigram => "U",
            FeatureBlockSpec::WordBigram => "B",
            FeatureBlockSpec::WordTrigram => "T",
            FeatureBlockSpec::Char3 => "C3",
            FeatureBlockSpec::Char4 => "C4",
            FeatureBlockSpec::Char5 => "C5",
            FeatureBlockSpec::Pos => "POS",
            FeatureBlockSpec::EmbeddingWord2vec => "E W",
            FeatureBlockSpec::EmbeddingFasttext => "E F",
            FeatureBlockSpec::Punct => "P",
        }
    }
}

/// Parses a `+`-joined feature spec into its blocks, expanding shorthands.
pub fn parse_feature_spec(spec: &str) -> Result<Vec<FeatureBlockSpec>> {
    use FeatureBlockSpec::*;
    let mut blocks = Vec::new();
    for token in spec.split('+') {
        let token = token.trim();
        match token {
            "U" => blocks.push(WordUnigram),
            "B" => blocks.push(WordBigram),
            "T" => blocks.push(WordTrigram),
            "C3" => blocks.push(Char3),
            "C4" => blocks.push(Char4),
            "C5" => blocks.push(Char5),
            "POS" => blocks.push(Pos),
            "E W" | "EW" => blocks.push(EmbeddingWord2vec),
            "E F" | "EF" => blocks.push(EmbeddingFasttext),
            "P" => blocks.push(Punct),
            "L" => blocks.extend([WordUnigram, WordBigram, WordTrigram, Char3, Char4, Char5]),
            "ALL" => {
                blocks.extend([
                    WordUnigram,
                    WordBigram,
                    WordTrigram,
                    Char3,
                    Char4,
                    Char5,
                    Pos,
                    EmbeddingWord2vec,
                    EmbeddingFasttext,
                    Punct,
                ]);
            }
            other => bail!("unknown feature block `{other}` in spec `{spec}`"),
        }
    }
    if blocks.is_empty() {
        bail!("empty feature spec");
    }
    Ok(blocks)
}

/// Renders blocks back into the canonical `+`-joined spec.
pub fn feature_spec_name(blocks: &[FeatureBlockSpec]) -> String {
    blocks
        .iter()
        .map(|b| b.name())
        .collect::<Vec<_>>()
        .join("+")
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    Logreg,
    Forest,
    Cnn,
    BigruAttn,
    Ssgan,
    SupervisedMlp,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let name = match self {
            ModelKind::Logreg => "logreg",
            ModelKind::Forest => "forest",
            ModelKind::Cnn => "cnn",
            ModelKind::BigruAttn => "bigru_attn",
            ModelKind::Ssgan => "ssgan",
            ModelKind::SupervisedMlp => "supervised_mlp",
        };
        f.write_str(name)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataSection {
    pub labeled: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub unlabeled: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pos_sidecar: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings_word2vec: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub embeddings_fasttext: Option<PathBuf>,
}

fn default_ratio() -> String {
    "70:10:20".to_string()
}

fn default_split_seed() -> u64 {
    0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitSection {
    #[serde(default = "default_ratio")]
    pub ratio: String,
    /// Seed for the (fixed) split. With `resplit_per_seed`, each run seed
    /// redraws the split instead.
    #[serde(default = "default_split_seed")]
    pub seed: u64,
    #[serde(default)]
    pub resplit_per_seed: bool,
}

impl Default for SplitSection {
    fn default() -> Self {
        SplitSection {
            ratio: default_ratio(),
            seed: default_split_seed(),
            resplit_per_seed: false,
        }
    }
}

fn default_epochs() -> usize {
    40
}
fn default_batch() -> usize {
    64
}
fn default_lr() -> f64 {
    2e-5
}
fn default_schedule() -> String {
    "one_cycle".to_string()
}
fn default_seeds() -> Vec<u64> {
    vec![0, 1, 2, 3, 4]
}
fn default_l2() -> f64 {
    1e-4
}
fn default_dropout() -> f64 {
    0.2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainSection {
    #[serde(default = "default_epochs")]
    pub epochs: usize,
    #[serde(default = "default_batch")]
    pub batch: usize,
    #[serde(default = "default_lr")]
    pub lr: f64,
    /// `one_cycle`, `linear_warmup`, or `constant`.
    #[serde(default = "default_schedule")]
    pub schedule: String,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    #[serde(default = "default_l2")]
    pub l2: f64,
    #[serde(default = "default_dropout")]
    pub dropout: f64,
}

impl Default for TrainSection {
    fn default() -> Self {
        TrainSection {
            epochs: default_epochs(),
            batch: default_batch(),
            lr: default_lr(),
            schedule: default_schedule(),
            seeds: default_seeds(),
            l2: default_l2(),
            dropout: default_dropout(),
        }
    }
}

fn default_n_trees() -> usize {
    100
}
fn default_max_depth() -> usize {
    16
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ForestSection {
    #[serde(default = "default_n_trees")]
    pub n_trees: usize,
    #[serde(default = "default_max_depth")]
    pub max_depth: usize,
}

impl Default for ForestSection {
    fn default() -> Self {
        ForestSection {
            n_trees: default_n_trees(),
            max_depth: default_max_depth(),
        }
    }
}

fn default_hidden() -> usize {
    128
}
fn default_filters() -> usize {
    100
}
fn default_filter_widths() -> Vec<usize> {
    vec![3, 4, 5]
}
fn default_min_df() -> usize {
    2
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSection {
    /// GRU hidden size per direction; also the MLP/discriminator hidden
    /// width for dense models.
    #[serde(default = "default_hidden")]
    pub hidden: usize,
    #[serde(default = "default_filters")]
    pub filters_per_width: usize,
    #[serde(default = "default_filter_widths")]
    pub filter_widths: Vec<usize>,
    #[serde(default = "default_min_df")]
    pub min_df: usize,
}

impl Default for ModelSection {
    fn default() -> Self {
        ModelSection {
            hidden: default_hidden(),
            filters_per_width: default_filters(),
            filter_widths: default_filter_widths(),
            min_df: default_min_df(),
        }
    }
}

fn default_warmup_frac() -> f64 {
    0.1
}
fn default_weight_decay() -> f64 {
    0.01
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SsganSection {
    #[serde(default = "default_warmup_frac")]
    pub warmup_frac: f64,
    #[serde(default = "default_weight_decay")]
    pub weight_decay: f64,
}

impl Default for SsganSection {
    fn default() -> Self {
        SsganSection {
            warmup_frac: default_warmup_frac(),
            weight_decay: default_weight_decay(),
        }
    }
}

fn default_title_len() -> usize {
    64
}

/// Full experiment description; round-trips through TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelKind,
    /// Feature spec for statistical models; embedding selector (`E W` or
    /// `E F`) for neural and encoder-based models.
    pub features: String,
    #[serde(default = "default_title_len")]
    pub title_len: usize,
    pub data: DataSection,
    #[serde(default)]
    pub split: SplitSection,
    #[serde(default)]
    pub train: TrainSection,
    #[serde(default)]
    pub forest: ForestSection,
    #[serde(default)]
    pub model_params: ModelSection,
    #[serde(default)]
    pub ssgan: SsganSection,
    pub output_dir: PathBuf,
}

impl ExperimentConfig {
    pub fn from_toml(text: &str) -> Result<Self> {
        let config: ExperimentConfig = toml::from_str(text).context("parsing config")?;
        config.validate()?;
        Ok(config)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .with_context(|| format!("reading config {}", path.display()))?;
        Self::from_toml(&text)
    }

    pub fn to_toml(&self) -> Result<String> {
        Ok(toml::to_string_pretty(self)?)
    }

    pub fn validate(&self) -> Result<()> {
        if self.train.seeds.is_empty() {
            bail!("seed list must not be empty");
        }
        if self.train.batch == 0 {
            bail!("batch must be at least 1");
        }
        parse_feature_spec(&self.features)?;
        match self.train.schedule.as_str() {
            "one_cycle" | "linear_warmup" | "constant" => {}
            other => bail!("unknown schedule `{other}`"),
        }
        Ok(())
    }

    /// Blocks of the parsed feature spec.
    pub fn feature_blocks(&self) -> Result<Vec<FeatureBlockSpec>> {
        parse_feature_spec(&self.features)
    }
}

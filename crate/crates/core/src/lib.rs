//! # baitline
//!
//! A desk-scale toolkit for semi-supervised adversarial text classification,
//! aimed at clickbait detection over headline corpora.
//!
//! The crate covers the full pipeline:
//!
//! - [`corpus`]: article data model, JSONL ingestion, text normalization,
//!   duplicate control, Levenshtein-based test curation, stratified splits,
//!   and summary statistics.
//! - [`annotation`]: majority-vote label aggregation and Fleiss' kappa.
//! - [`features`]: word/char n-gram TF-IDF, pretrained-embedding mean vectors,
//!   POS frequencies, punctuation counts, and block-wise concatenation.
//! - [`autodiff`]: a dense-tensor reverse-mode differentiation engine with
//!   Adam/AdamW and 1cycle / linear-warmup schedules.
//! - [`models`]: logistic regression, random forest, multi-channel CNN,
//!   BiGRU with attention pooling, an MLP, and a frozen mean-embedding
//!   encoder, plus a generic supervised training loop.
//! - [`ssgan`]: a noise-fed generator and (k+1)-class discriminator trained
//!   adversarially over encoder outputs, mixing labeled, unlabeled, and
//!   generated examples.
//! - [`eval`]: classification reports, ROC/AUC, McNemar's test, and exact
//!   t-SNE projection.
//!
//! Numeric code is generic over the [`scalar::Scalar`] trait (any `f32`/`f64`
//! float); the aliases below pin the concrete type the pipeline runs at.

pub mod annotation;
pub mod autodiff;
pub mod corpus;
pub mod eval;
pub mod features;
pub mod models;
pub mod rng;
pub mod scalar;
pub mod ssgan;

pub use scalar::Scalar;

/// Scalar type used by the end-to-end pipeline.
pub type Real = f64;

/// Dense tensor at the pipeline scalar type.
pub type RealTensor = autodiff::Tensor<Real>;

/// Differentiation graph at the pipeline scalar type.
pub type RealGraph = autodiff::Graph<Real>;

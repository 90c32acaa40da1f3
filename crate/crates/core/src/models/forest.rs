//! Random forest of Gini-split decision trees.
//!
//! Each tree fits a bootstrap resample with √width candidate features per
//! split; the forest predicts by majority vote over tree-level hard
//! predictions. Zero-gain splits are taken when a node is impure, so
//! XOR-style interactions resolve at depth 2.

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::features::{FeatureMatrix, SparseVector};
use crate::rng::{self, Component};
use crate::scalar::Scalar;

use super::ModelError;

/// Split or leaf; children are indices into the tree's node arena.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum TreeNode<S> {
    Split {
        feature: usize,
        threshold: S,
        left: usize,
        right: usize,
    },
    Leaf {
        counts: [usize; 2],
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree<S> {
    nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> DecisionTree<S> {
    pub fn predict(&self, row: &SparseVector<S>) -> u8 {
        let mut idx = 0usize;
        loop {
            match &self.nodes[idx] {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => {
                    idx = if row.get(*feature) <= *threshold {
                        *left
                    } else {
                        *right
                    };
                }
                TreeNode::Leaf { counts } => {
                    return u8::from(counts[1] > counts[0]);
                }
            }
        }
    }

    pub fn depth(&self) -> usize {
        fn walk<S>(nodes: &[TreeNode<S>], idx: usize) -> usize {
            match &nodes[idx] {
                TreeNode::Leaf { .. } => 0,
                TreeNode::Split { left, right, .. } => {
                    1 + walk(nodes, *left).max(walk(nodes, *right))
                }
            }
        }
        walk(&self.nodes, 0)
    }
}

/// Which features each split considers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FeatureSubsample {
    /// √width features drawn per split.
    Sqrt,
    /// Every feature considered.
    All,
}

#[derive(Debug, Clone)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub bootstrap: bool,
    pub feature_subsample: FeatureSubsample,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 16,
            bootstrap: true,
            feature_subsample: FeatureSubsample::Sqrt,
            seed: 0,
        }
    }
}

/// Trees plus the per-tree bootstrap seeds they were grown from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Forest<S> {
    pub trees: Vec<DecisionTree<S>>,
    pub seeds: Vec<u64>,
}

impl<S: Scalar> Forest<S> {
    /// Majority vote over tree predictions; class 0 wins ties.
    pub fn predict(&self, row: &SparseVector<S>) -> u8 {
        let ones = self
            .trees
            .iter()
            .filter(|t| t.predict(row) == 1)
            .count();
        u8::from(2 * ones > self.trees.len())
    }

    pub fn predict_all(&self, x: &FeatureMatrix<S>) -> Vec<u8> {
        x.rows().iter().map(|r| self.predict(r)).collect()
    }

    /// Fraction of trees voting class 1, as a ranking score.
    pub fn vote_fraction(&self, row: &SparseVector<S>) -> S {
        let ones = self
            .trees
            .iter()
            .filter(|t| t.predict(row) == 1)
            .count();
        S::from_usize_lossy(ones) / S::from_usize_lossy(self.trees.len())
    }

    pub fn to_json(&self) -> serde_json::Result<String> {
        serde_json::to_string(self)
    }

    pub fn from_json(json: &str) -> serde_json::Result<Self> {
        serde_json::from_str(json)
    }
}

fn gini(counts: [usize; 2]) -> f64 {
    let n = (counts[0] + counts[1]) as f64;
    if n == 0.0 {
        return 0.0;
    }
    let p0 = counts[0] as f64 / n;
    let p1 = counts[1] as f64 / n;
    1.0 - p0 * p0 - p1 * p1
}

struct TreeBuilder<'a, S: Scalar> {
    x: &'a FeatureMatrix<S>,
    y: &'a [u8],
    max_depth: usize,
    n_candidates: usize,
    nodes: Vec<TreeNode<S>>,
}

impl<S: Scalar> TreeBuilder<'_, S> {
    fn build(&mut self, rows: &[usize], depth: usize, rng: &mut ChaCha8Rng) -> usize {
        let mut counts = [0usize; 2];
        for &r in rows {
            counts[self.y[r] as usize] += 1;
        }
        let impure = counts[0] > 0 && counts[1] > 0;
        if !impure || depth >= self.max_depth {
            self.nodes.push(TreeNode::Leaf { counts });
            return self.nodes.len() - 1;
        }

        let width = self.x.dim();
        let mut candidates: Vec<usize> = (0..width).collect();
        if self.n_candidates < width {
            candidates.shuffle(rng);
            candidates.truncate(self.n_candidates);
            candidates.sort_unstable();
        }

        // Best split: minimal weighted child Gini; ties keep the first
        // candidate in (feature, threshold) order.
        let mut best: Option<(f64, usize, S)> = None;
        let mut column: Vec<(S, u8)> = Vec::with_capacity(rows.len());
        for &feature in &candidates {
            column.clear();
            for &r in rows {
                column.push((self.x.row(r).get(feature), self.y[r]));
            }
            column.sort_by(|a, b| a.0.partial_cmp(&b.0).expect("finite feature values"));
            let total = counts;
            let mut left = [0usize; 2];
            for i in 0..column.len() - 1 {
                left[column[i].1 as usize] += 1;
                if column[i].0 == column[i + 1].0 {
                    continue;
                }
                let right = [total[0] - left[0], total[1] - left[1]];
                let n_left = (i + 1) as f64;
                let n_right = (column.len() - i - 1) as f64;
                let score =
                    (n_left * gini(left) + n_right * gini(right)) / column.len() as f64;
                let better = match &best {
                    Some((best_score, _, _)) => score < *best_score - 1e-15,
                    None => true,
                };
                if better {
                    let two = S::from_f64_lossy(2.0);
                    let threshold = (column[i].0 + column[i + 1].0) / two;
                    best = Some((score, feature, threshold));
                }
            }
        }

        let Some((_, feature, threshold)) = best else {
            // No candidate feature separates the rows.
            self.nodes.push(TreeNode::Leaf { counts });
            return self.nodes.len() - 1;
        };

        let (left_rows, right_rows): (Vec<usize>, Vec<usize>) = rows
            .iter()
            .partition(|&&r| self.x.row(r).get(feature) <= threshold);
        debug_assert!(!left_rows.is_empty() && !right_rows.is_empty());

        let placeholder = self.nodes.len();
        self.nodes.push(TreeNode::Leaf { counts });
        let left = self.build(&left_rows, depth + 1, rng);
        let right = self.build(&right_rows, depth + 1, rng);
        self.nodes[placeholder] = TreeNode::Split {
            feature,
            threshold,
            left,
            right,
        };
        placeholder
    }
}

/// Fits a forest. Each tree draws its bootstrap sample and split-candidate
/// features from its own seed, so trees are independent and the fit is
/// reproducible.
pub fn train_random_forest<S: Scalar>(
    x: &FeatureMatrix<S>,
    y: &[u8],
    config: &ForestConfig,
) -> Result<Forest<S>, ModelError> {
    if config.n_trees == 0 {
        return Err(ModelError::BadConfig("n_trees must be at least 1".to_string()));
    }
    if x.n_rows() != y.len() {
        return Err(ModelError::BadConfig(format!(
            "{} rows vs {} labels",
            x.n_rows(),
            y.len()
        )));
    }
    if x.n_rows() == 0 {
        return Err(ModelError::EmptySplit("train"));
    }
    let n = x.n_rows();
    let width = x.dim();
    let n_candidates = match config.feature_subsample {
        FeatureSubsample::Sqrt => ((width as f64).sqrt().floor() as usize).max(1),
        FeatureSubsample::All => width,
    };

    let mut seed_rng = rng::stream(config.seed, Component::Bootstrap);
    let seeds: Vec<u64> = (0..config.n_trees).map(|_| seed_rng.gen()).collect();

    let trees = seeds
        .iter()
        .map(|&seed| {
            let mut tree_rng = ChaCha8Rng::seed_from_u64(seed);
            let rows: Vec<usize> = if config.bootstrap {
                (0..n).map(|_| tree_rng.gen_range(0..n)).collect()
            } else {
                (0..n).collect()
            };
            let mut builder = TreeBuilder {
                x,
                y,
                max_depth: config.max_depth,
                n_candidates,
                nodes: Vec::new(),
            };
            builder.build(&rows, 0, &mut tree_rng);
            DecisionTree {
                nodes: builder.nodes,
            }
        })
        .collect();

    Ok(Forest { trees, seeds })
}

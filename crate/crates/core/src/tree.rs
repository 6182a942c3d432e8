//! Gini-split classification trees.

use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::classifier::{check_arity, Classifier};
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};

/// Minimum impurity decrease for a split to count as an improvement.
const MIN_DECREASE: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum TreeNode {
    Split {
        feature: usize,
        threshold: f64,
        /// Training rows (with bootstrap multiplicity) that reached the node.
        samples: u32,
        /// Gini decrease achieved by this split.
        decrease: f64,
        left: Box<TreeNode>,
        right: Box<TreeNode>,
    },
    Leaf {
        class_counts: Vec<u32>,
    },
}

impl TreeNode {
    /// Leaf reached by `x`. Rows with `x[feature] <= threshold` go left.
    pub fn leaf_counts(&self, x: &[f64]) -> &[u32] {
        let mut node = self;
        loop {
            match node {
                TreeNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                    ..
                } => {
                    node = if x[*feature] <= *threshold { left } else { right };
                }
                TreeNode::Leaf { class_counts } => return class_counts,
            }
        }
    }

    /// Class frequencies at the leaf reached by `x`.
    pub fn leaf_posterior(&self, x: &[f64]) -> Vec<f64> {
        let counts = self.leaf_counts(x);
        let total: u32 = counts.iter().sum();
        counts.iter().map(|&c| c as f64 / total as f64).collect()
    }

    pub fn depth(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => 1 + left.depth().max(right.depth()),
            TreeNode::Leaf { .. } => 0,
        }
    }

    pub fn n_leaves(&self) -> usize {
        match self {
            TreeNode::Split { left, right, .. } => left.n_leaves() + right.n_leaves(),
            TreeNode::Leaf { .. } => 1,
        }
    }

    /// Visits every split as `(feature, samples, decrease)`.
    pub fn for_each_split(&self, f: &mut impl FnMut(usize, u32, f64)) {
        if let TreeNode::Split {
            feature,
            samples,
            decrease,
            left,
            right,
            ..
        } = self
        {
            f(*feature, *samples, *decrease);
            left.for_each_split(f);
            right.for_each_split(f);
        }
    }

    /// Row count seen at the root.
    pub fn root_samples(&self) -> u32 {
        match self {
            TreeNode::Split { samples, .. } => *samples,
            TreeNode::Leaf { class_counts } => class_counts.iter().sum(),
        }
    }
}

/// How many features are drawn as split candidates at each node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FeaturesPerSplit {
    /// `floor(sqrt(arity))`, at least 1.
    Sqrt,
    All,
    Fixed(usize),
}

impl FeaturesPerSplit {
    pub fn resolve(self, arity: usize) -> usize {
        match self {
            FeaturesPerSplit::Sqrt => ((arity as f64).sqrt().floor() as usize).max(1),
            FeaturesPerSplit::All => arity,
            FeaturesPerSplit::Fixed(k) => k,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TreeConfig {
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub features_per_split: FeaturesPerSplit,
}

impl Default for TreeConfig {
    fn default() -> Self {
        Self {
            max_depth: None,
            min_samples_leaf: 1,
            features_per_split: FeaturesPerSplit::All,
        }
    }
}

impl TreeConfig {
    pub(crate) fn validate(&self, arity: usize) -> Result<()> {
        if self.min_samples_leaf == 0 {
            return Err(KisanError::InvalidInput("min_samples_leaf must be >= 1".into()));
        }
        match self.features_per_split {
            FeaturesPerSplit::Fixed(k) if k == 0 || k > arity => Err(KisanError::InvalidInput(format!(
                "features_per_split fixed({k}) outside 1..={arity}"
            ))),
            _ => Ok(()),
        }
    }
}

/// A chosen split.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Split {
    pub feature: usize,
    pub threshold: f64,
    pub impurity_decrease: f64,
}

/// `1 - sum (c_i / n)^2`.
pub fn gini_impurity(class_counts: &[usize]) -> Result<f64> {
    let n: usize = class_counts.iter().sum();
    if n == 0 {
        return Err(KisanError::InvalidInput("gini of all-zero counts".into()));
    }
    let n = n as f64;
    Ok(1.0 - class_counts.iter().map(|&c| (c as f64 / n).powi(2)).sum::<f64>())
}

/// Exhaustive best split over `candidate_features`, scanning midpoints
/// between consecutive distinct values. Returns `None` when no split
/// strictly decreases Gini impurity.
pub fn best_split(rows: &[Vec<f64>], labels: &[usize], candidate_features: &[usize]) -> Option<Split> {
    if rows.len() < 2 || rows.len() != labels.len() {
        return None;
    }
    let n_classes = labels.iter().max().map_or(0, |m| m + 1);
    let idx: Vec<usize> = (0..rows.len()).collect();
    let mut features = candidate_features.to_vec();
    features.sort_unstable();
    let mut scratch = SplitScratch::new(n_classes);
    find_best_split(rows, labels, &idx, &features, 1, &mut scratch)
}

pub(crate) struct SplitScratch {
    pairs: Vec<(f64, usize)>,
    left: Vec<u32>,
    right: Vec<u32>,
}

impl SplitScratch {
    pub(crate) fn new(n_classes: usize) -> Self {
        Self {
            pairs: Vec::new(),
            left: vec![0; n_classes],
            right: vec![0; n_classes],
        }
    }
}

/// Core scan. `features` must be ascending so the first strictly-better
/// candidate wins ties by (feature, threshold).
pub(crate) fn find_best_split(
    rows: &[Vec<f64>],
    labels: &[usize],
    idx: &[usize],
    features: &[usize],
    min_leaf: usize,
    scratch: &mut SplitScratch,
) -> Option<Split> {
    let n = idx.len();
    if n < 2 * min_leaf {
        return None;
    }
    scratch.right.iter_mut().for_each(|c| *c = 0);
    for &i in idx {
        scratch.right[labels[i]] += 1;
    }
    let total: Vec<u32> = scratch.right.clone();
    let sum_sq_total: f64 = total.iter().map(|&c| (c as f64).powi(2)).sum();
    let nf = n as f64;
    let parent = 1.0 - sum_sq_total / (nf * nf);
    if parent <= MIN_DECREASE {
        return None;
    }

    let mut best: Option<Split> = None;
    for &f in features {
        scratch.pairs.clear();
        scratch.pairs.extend(idx.iter().map(|&i| (rows[i][f], labels[i])));
        scratch.pairs.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
        scratch.left.iter_mut().for_each(|c| *c = 0);
        scratch.right.copy_from_slice(&total);
        let mut sq_left = 0.0;
        let mut sq_right = sum_sq_total;
        for j in 0..n - 1 {
            let (value, label) = scratch.pairs[j];
            let cl = scratch.left[label] as f64;
            let cr = scratch.right[label] as f64;
            sq_left += 2.0 * cl + 1.0;
            sq_right -= 2.0 * cr - 1.0;
            scratch.left[label] += 1;
            scratch.right[label] -= 1;

            let next = scratch.pairs[j + 1].0;
            let n_left = j + 1;
            let n_right = n - n_left;
            if next <= value || n_left < min_leaf || n_right < min_leaf {
                continue;
            }
            let weighted = (nf - sq_left / n_left as f64 - sq_right / n_right as f64) / nf;
            let decrease = parent - weighted;
            let improves = match best {
                None => decrease > MIN_DECREASE,
                Some(b) => decrease > b.impurity_decrease + MIN_DECREASE,
            };
            if improves {
                let mut threshold = value + (next - value) / 2.0;
                if threshold >= next {
                    threshold = value;
                }
                best = Some(Split {
                    feature: f,
                    threshold,
                    impurity_decrease: decrease,
                });
            }
        }
    }
    best
}

/// Recursive grower shared by single trees and forests.
pub(crate) struct TreeGrower<'a> {
    pub rows: &'a [Vec<f64>],
    pub labels: &'a [usize],
    pub n_classes: usize,
    pub config: TreeConfig,
}

impl TreeGrower<'_> {
    pub(crate) fn grow(&self, idx: Vec<usize>, rng: &mut ChaCha8Rng) -> TreeNode {
        let arity = self.rows.first().map_or(0, |r| r.len());
        let k = self.config.features_per_split.resolve(arity).min(arity);
        let mut scratch = SplitScratch::new(self.n_classes);
        self.grow_node(idx, 0, k, arity, &mut scratch, rng)
    }

    fn grow_node(
        &self,
        idx: Vec<usize>,
        depth: usize,
        k: usize,
        arity: usize,
        scratch: &mut SplitScratch,
        rng: &mut ChaCha8Rng,
    ) -> TreeNode {
        let mut counts = vec![0u32; self.n_classes];
        for &i in &idx {
            counts[self.labels[i]] += 1;
        }
        let pure = counts.iter().filter(|&&c| c > 0).count() <= 1;
        let depth_reached = self.config.max_depth.is_some_and(|d| depth >= d);
        if pure || depth_reached || idx.len() < 2 * self.config.min_samples_leaf {
            return TreeNode::Leaf { class_counts: counts };
        }

        let features = if k >= arity {
            (0..arity).collect::<Vec<_>>()
        } else {
            let mut f = rand::seq::index::sample(rng, arity, k).into_vec();
            f.sort_unstable();
            f
        };
        let split = find_best_split(
            self.rows,
            self.labels,
            &idx,
            &features,
            self.config.min_samples_leaf,
            scratch,
        );
        let Some(split) = split else {
            return TreeNode::Leaf { class_counts: counts };
        };
        let samples = idx.len() as u32;
        let (left, right): (Vec<usize>, Vec<usize>) = idx
            .into_iter()
            .partition(|&i| self.rows[i][split.feature] <= split.threshold);
        let left = self.grow_node(left, depth + 1, k, arity, scratch, rng);
        let right = self.grow_node(right, depth + 1, k, arity, scratch, rng);
        TreeNode::Split {
            feature: split.feature,
            threshold: split.threshold,
            samples,
            decrease: split.impurity_decrease,
            left: Box::new(left),
            right: Box::new(right),
        }
    }
}

/// A single fitted classification tree.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionTree {
    pub root: TreeNode,
    pub class_catalog: Vec<String>,
    pub arity: usize,
}

impl Classifier for DecisionTree {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        self.root.leaf_posterior(x)
    }
}

impl DecisionTree {
    pub fn predict_proba_checked(&self, x: &[f64]) -> Result<Vec<f64>> {
        check_arity(self.arity, x)?;
        Ok(self.posterior(x))
    }
}

/// Greedy Gini tree on all rows. Feature subsampling, when configured,
/// draws from a generator seeded with 0.
pub fn fit_decision_tree(train: &LabeledDataset, config: &TreeConfig) -> Result<DecisionTree> {
    if train.is_empty() {
        return Err(KisanError::Empty("cannot fit a tree on an empty dataset"));
    }
    config.validate(train.arity())?;
    let grower = TreeGrower {
        rows: &train.rows,
        labels: &train.labels,
        n_classes: train.n_classes(),
        config: *config,
    };
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let root = grower.grow((0..train.len()).collect(), &mut rng);
    Ok(DecisionTree {
        root,
        class_catalog: train.class_catalog.clone(),
        arity: train.arity(),
    })
}

/// Draws `n` row indices with replacement.
pub(crate) fn bootstrap_indices(n: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    (0..n).map(|_| rng.random_range(0..n)).collect()
}

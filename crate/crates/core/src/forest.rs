//! Bootstrap-aggregated Gini forests with out-of-bag scoring and
//! mean-decrease-in-impurity feature importances.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::classifier::{argmax, Classifier};
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};
use crate::tree::{bootstrap_indices, FeaturesPerSplit, TreeConfig, TreeGrower, TreeNode};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub features_per_split: FeaturesPerSplit,
    pub max_depth: Option<usize>,
    pub min_samples_leaf: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        Self {
            n_trees: 500,
            features_per_split: FeaturesPerSplit::Sqrt,
            max_depth: None,
            min_samples_leaf: 1,
            bootstrap: true,
            seed: 42,
        }
    }
}

impl ForestConfig {
    fn tree_config(&self) -> TreeConfig {
        TreeConfig {
            max_depth: self.max_depth,
            min_samples_leaf: self.min_samples_leaf,
            features_per_split: self.features_per_split,
        }
    }
}

/// Fixed-length bit set, serialized as `"<len>:<hex words>"`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BitMask {
    len: usize,
    words: Vec<u64>,
}

impl BitMask {
    pub fn new(len: usize) -> Self {
        Self {
            len,
            words: vec![0; len.div_ceil(64)],
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn set(&mut self, i: usize) {
        self.words[i / 64] |= 1 << (i % 64);
    }

    pub fn get(&self, i: usize) -> bool {
        self.words[i / 64] >> (i % 64) & 1 == 1
    }

    pub fn count_ones(&self) -> usize {
        self.words.iter().map(|w| w.count_ones() as usize).sum()
    }
}

impl Serialize for BitMask {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        let hex: String = self.words.iter().map(|w| format!("{w:016x}")).collect();
        serializer.serialize_str(&format!("{}:{}", self.len, hex))
    }
}

impl<'de> Deserialize<'de> for BitMask {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        use serde::de::Error;
        let s = String::deserialize(deserializer)?;
        let (len, hex) = s
            .split_once(':')
            .ok_or_else(|| D::Error::custom("bitmask missing ':'"))?;
        let len: usize = len.parse().map_err(D::Error::custom)?;
        if hex.len() != len.div_ceil(64) * 16 {
            return Err(D::Error::custom("bitmask length does not match payload"));
        }
        let words = (0..hex.len() / 16)
            .map(|i| u64::from_str_radix(&hex[i * 16..(i + 1) * 16], 16))
            .collect::<std::result::Result<Vec<_>, _>>()
            .map_err(D::Error::custom)?;
        Ok(Self { len, words })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RandomForestModel {
    pub trees: Vec<TreeNode>,
    pub class_catalog: Vec<String>,
    pub feature_arity: usize,
    /// Per tree, the training rows left out of its bootstrap sample.
    /// Empty when bootstrap was off.
    pub oob_masks: Vec<BitMask>,
    pub config: ForestConfig,
}

impl Classifier for RandomForestModel {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.feature_arity
    }

    /// Mean of the per-tree leaf frequency vectors.
    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut acc = vec![0.0; self.class_catalog.len()];
        for tree in &self.trees {
            let counts = tree.leaf_counts(x);
            let total: u32 = counts.iter().sum();
            for (a, &c) in acc.iter_mut().zip(counts) {
                *a += c as f64 / total as f64;
            }
        }
        let n = self.trees.len() as f64;
        acc.iter_mut().for_each(|a| *a /= n);
        acc
    }
}

/// Fits `n_trees` trees in parallel. Tree `t` draws from a generator
/// seeded with `seed + t`, so the result does not depend on scheduling.
pub fn fit_random_forest(train: &LabeledDataset, config: &ForestConfig) -> Result<RandomForestModel> {
    if train.is_empty() {
        return Err(KisanError::Empty("cannot fit a forest on an empty dataset"));
    }
    if config.n_trees == 0 {
        return Err(KisanError::InvalidInput("n_trees must be >= 1".into()));
    }
    let tree_config = config.tree_config();
    tree_config.validate(train.arity())?;
    let n = train.len();
    let grower = TreeGrower {
        rows: &train.rows,
        labels: &train.labels,
        n_classes: train.n_classes(),
        config: tree_config,
    };
    let fitted: Vec<(TreeNode, Option<BitMask>)> = (0..config.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(config.seed.wrapping_add(t as u64));
            if config.bootstrap {
                let idx = bootstrap_indices(n, &mut rng);
                let mut seen = BitMask::new(n);
                idx.iter().for_each(|&i| seen.set(i));
                let mut oob = BitMask::new(n);
                (0..n).filter(|&i| !seen.get(i)).for_each(|i| oob.set(i));
                (grower.grow(idx, &mut rng), Some(oob))
            } else {
                (grower.grow((0..n).collect(), &mut rng), None)
            }
        })
        .collect();
    let (trees, masks): (Vec<_>, Vec<_>) = fitted.into_iter().unzip();
    Ok(RandomForestModel {
        trees,
        class_catalog: train.class_catalog.clone(),
        feature_arity: train.arity(),
        oob_masks: masks.into_iter().flatten().collect(),
        config: *config,
    })
}

/// Out-of-bag evaluation result.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OobScore {
    pub accuracy: f64,
    /// Rows out-of-bag for at least one tree.
    pub scored_rows: usize,
    /// Rows every tree saw; excluded from the score.
    pub excluded_rows: usize,
}

/// Predicted class and averaged posterior over the trees that did not see
/// a row.
pub type OobPrediction = (usize, Vec<f64>);

/// Majority-vote OOB prediction per training row (`None` when the row was
/// in every bootstrap sample), plus the averaged OOB posterior.
pub fn oob_predictions(model: &RandomForestModel, train: &LabeledDataset) -> Result<Vec<Option<OobPrediction>>> {
    if !model.config.bootstrap || model.oob_masks.is_empty() {
        return Err(KisanError::OobUndefined("forest was fit without bootstrap"));
    }
    if model.oob_masks.iter().any(|m| m.len() != train.len()) {
        return Err(KisanError::InvalidInput(
            "OOB masks do not match the training set size".into(),
        ));
    }
    let k = model.class_catalog.len();
    Ok((0..train.len())
        .into_par_iter()
        .map(|i| {
            let row = &train.rows[i];
            let mut votes = vec![0usize; k];
            let mut proba = vec![0.0; k];
            let mut n_trees = 0usize;
            for (tree, mask) in model.trees.iter().zip(&model.oob_masks) {
                if !mask.get(i) {
                    continue;
                }
                let p = tree.leaf_posterior(row);
                votes[argmax(&p)] += 1;
                proba.iter_mut().zip(&p).for_each(|(a, b)| *a += b);
                n_trees += 1;
            }
            if n_trees == 0 {
                return None;
            }
            proba.iter_mut().for_each(|a| *a /= n_trees as f64);
            let winner = votes
                .iter()
                .enumerate()
                .fold(0, |best, (c, &v)| if v > votes[best] { c } else { best });
            Some((winner, proba))
        })
        .collect())
}

pub fn oob_accuracy(model: &RandomForestModel, train: &LabeledDataset) -> Result<OobScore> {
    let preds = oob_predictions(model, train)?;
    let mut hits = 0;
    let mut scored = 0;
    for (pred, &label) in preds.iter().zip(&train.labels) {
        if let Some((class, _)) = pred {
            scored += 1;
            if *class == label {
                hits += 1;
            }
        }
    }
    if scored == 0 {
        return Err(KisanError::OobUndefined("no row is out-of-bag for any tree"));
    }
    Ok(OobScore {
        accuracy: hits as f64 / scored as f64,
        scored_rows: scored,
        excluded_rows: train.len() - scored,
    })
}

/// Mean decrease in Gini impurity per feature, each split weighted by the
/// fraction of its tree's samples reaching it, normalized to sum to 1.
/// A forest without any split yields the uniform vector.
pub fn feature_importances(model: &RandomForestModel) -> Vec<f64> {
    let arity = model.feature_arity;
    let mut acc = vec![0.0; arity];
    for tree in &model.trees {
        let root = tree.root_samples() as f64;
        tree.for_each_split(&mut |feature, samples, decrease| {
            acc[feature] += samples as f64 / root * decrease;
        });
    }
    let total: f64 = acc.iter().sum();
    if total <= 0.0 {
        return vec![1.0 / arity as f64; arity];
    }
    acc.iter().map(|a| a / total).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Schema;
    use crate::tree::fit_decision_tree;

    fn blobs(n_per: usize, arity: usize) -> LabeledDataset {
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for c in 0..3 {
            for i in 0..n_per {
                let mut row: Vec<f64> = (0..arity)
                    .map(|j| ((i * 31 + j * 17 + c * 7) % 23) as f64 / 23.0)
                    .collect();
                row[0] += c as f64 * 3.0;
                rows.push(row);
                labels.push(["a", "b", "c"][c]);
            }
        }
        let schema = Schema::new("t", (0..arity).map(|j| format!("x{j}")).collect());
        LabeledDataset::from_labels(schema, rows, &labels).unwrap()
    }

    #[test]
    fn degenerate_forest_equals_single_tree() {
        let ds = blobs(20, 4);
        let config = ForestConfig {
            n_trees: 1,
            bootstrap: false,
            features_per_split: FeaturesPerSplit::All,
            ..ForestConfig::default()
        };
        let forest = fit_random_forest(&ds, &config).unwrap();
        let tree = fit_decision_tree(&ds, &TreeConfig::default()).unwrap();
        assert_eq!(forest.trees[0], tree.root);
        for row in &ds.rows {
            assert_eq!(forest.predict_proba(row).unwrap(), tree.predict_proba(row).unwrap());
        }
    }

    #[test]
    fn forest_is_deterministic() {
        let ds = blobs(15, 9);
        let config = ForestConfig {
            n_trees: 25,
            ..ForestConfig::default()
        };
        let a = fit_random_forest(&ds, &config).unwrap();
        let b = fit_random_forest(&ds, &config).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.trees.len(), 25);
    }

    #[test]
    fn pure_leaf_forest_is_one_hot() {
        let model = RandomForestModel {
            trees: vec![TreeNode::Leaf {
                class_counts: vec![0, 4, 0],
            }],
            class_catalog: vec!["a".into(), "b".into(), "c".into()],
            feature_arity: 2,
            oob_masks: vec![],
            config: ForestConfig::default(),
        };
        assert_eq!(model.predict_proba(&[0.0, 0.0]).unwrap(), vec![0.0, 1.0, 0.0]);
        assert!(model.predict_proba(&[0.0]).is_err());
        // No splits anywhere: uniform importances.
        assert_eq!(feature_importances(&model), vec![0.5, 0.5]);
    }

    #[test]
    fn oob_requires_bootstrap() {
        let ds = blobs(10, 3);
        let config = ForestConfig {
            n_trees: 3,
            bootstrap: false,
            ..ForestConfig::default()
        };
        let model = fit_random_forest(&ds, &config).unwrap();
        assert!(matches!(oob_accuracy(&model, &ds), Err(KisanError::OobUndefined(_))));
    }

    #[test]
    fn oob_scores_only_the_left_out_row() {
        // Every tree saw every row except row 1, and each tree is a correct
        // stump for the data.
        let schema = Schema::new("t", vec!["x".into()]);
        let ds = LabeledDataset::from_labels(
            schema,
            vec![vec![0.0], vec![1.0], vec![10.0], vec![11.0]],
            &["a", "a", "b", "b"],
        )
        .unwrap();
        let stump = TreeNode::Split {
            feature: 0,
            threshold: 5.5,
            samples: 4,
            decrease: 0.5,
            left: Box::new(TreeNode::Leaf {
                class_counts: vec![2, 0],
            }),
            right: Box::new(TreeNode::Leaf {
                class_counts: vec![0, 2],
            }),
        };
        let mut mask = BitMask::new(4);
        mask.set(1);
        let model = RandomForestModel {
            trees: vec![stump.clone(), stump],
            class_catalog: ds.class_catalog.clone(),
            feature_arity: 1,
            oob_masks: vec![mask.clone(), mask],
            config: ForestConfig {
                n_trees: 2,
                ..ForestConfig::default()
            },
        };
        let score = oob_accuracy(&model, &ds).unwrap();
        assert_eq!(score.accuracy, 1.0);
        assert_eq!(score.scored_rows, 1);
        assert_eq!(score.excluded_rows, 3);
    }

    #[test]
    fn importances_find_the_signal_feature() {
        // label = sign(x0); x1..x3 are label-independent noise.
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for i in 0..200 {
            let x0 = (i as f64 - 99.5) / 10.0;
            let noise: Vec<f64> = (1..4).map(|j| ((i * 37 * j + 11) % 97) as f64).collect();
            let mut row = vec![x0];
            row.extend(noise);
            rows.push(row);
            labels.push(if x0 > 0.0 { "pos" } else { "neg" });
        }
        let schema = Schema::new("t", (0..4).map(|j| format!("x{j}")).collect());
        let ds = LabeledDataset::from_labels(schema, rows, &labels).unwrap();
        let config = ForestConfig {
            n_trees: 50,
            ..ForestConfig::default()
        };
        let model = fit_random_forest(&ds, &config).unwrap();
        let imp = feature_importances(&model);
        assert!((imp.iter().sum::<f64>() - 1.0).abs() < 1e-9);
        assert!(imp.iter().all(|v| *v >= 0.0));
        assert!(imp[0] > 0.9, "importances {imp:?}");
    }

    #[test]
    fn bitmask_round_trip() {
        let mut m = BitMask::new(130);
        for i in [0, 63, 64, 129] {
            m.set(i);
        }
        let json = serde_json::to_string(&m).unwrap();
        let back: BitMask = serde_json::from_str(&json).unwrap();
        assert_eq!(back, m);
        assert_eq!(back.count_ones(), 4);
        assert!(serde_json::from_str::<BitMask>("\"5:zz\"").is_err());
    }
}

//! Classical baselines for the benchmark roster.
//!
//! `knn`, `logistic_softmax` and `linear_svm` expect standardized inputs;
//! the benchmark runner standardizes every model's features.

mod gbt;
mod knn;
mod logistic;
mod naive_bayes;
mod svm;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

pub use gbt::{GradientBoostedTrees, RegressionNode};
pub use knn::Knn;
pub use logistic::LogisticSoftmax;
pub use naive_bayes::GaussianNb;
pub use svm::LinearSvm;

use crate::classifier::Classifier;
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};
use crate::tree::{fit_decision_tree, DecisionTree, TreeConfig};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BaselineKind {
    GaussianNb,
    Knn,
    LogisticSoftmax,
    GradientBoostedTrees,
    LinearSvm,
    SingleTree,
}

impl BaselineKind {
    pub const ALL: [BaselineKind; 6] = [
        BaselineKind::GaussianNb,
        BaselineKind::Knn,
        BaselineKind::LogisticSoftmax,
        BaselineKind::GradientBoostedTrees,
        BaselineKind::LinearSvm,
        BaselineKind::SingleTree,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            BaselineKind::GaussianNb => "gaussian_nb",
            BaselineKind::Knn => "knn",
            BaselineKind::LogisticSoftmax => "logistic_softmax",
            BaselineKind::GradientBoostedTrees => "gradient_boosted_trees",
            BaselineKind::LinearSvm => "linear_svm",
            BaselineKind::SingleTree => "single_tree",
        }
    }
}

impl fmt::Display for BaselineKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for BaselineKind {
    type Err = KisanError;

    fn from_str(s: &str) -> Result<Self> {
        BaselineKind::ALL
            .into_iter()
            .find(|k| k.as_str() == s)
            .ok_or_else(|| KisanError::UnknownCategory {
                kind: "baseline kind",
                value: s.to_string(),
                known: BaselineKind::ALL.iter().map(|k| k.as_str().to_string()).collect(),
            })
    }
}

/// Hyperparameters for every baseline kind; each kind reads its own fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparams {
    pub knn_k: usize,
    pub logistic_epochs: usize,
    pub logistic_learning_rate: f64,
    pub gbt_stages: usize,
    pub gbt_max_depth: usize,
    pub gbt_learning_rate: f64,
    pub svm_epochs: usize,
    pub svm_learning_rate: f64,
    pub svm_lambda: f64,
    pub tree_max_depth: Option<usize>,
    pub seed: u64,
}

impl Default for Hyperparams {
    fn default() -> Self {
        Self {
            knn_k: 5,
            logistic_epochs: 1000,
            logistic_learning_rate: 0.5,
            gbt_stages: 100,
            gbt_max_depth: 3,
            gbt_learning_rate: 0.1,
            svm_epochs: 500,
            svm_learning_rate: 0.1,
            svm_lambda: 1e-4,
            tree_max_depth: None,
            seed: 42,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum BaselineModel {
    GaussianNb(GaussianNb),
    Knn(Knn),
    LogisticSoftmax(LogisticSoftmax),
    GradientBoostedTrees(GradientBoostedTrees),
    LinearSvm(LinearSvm),
    SingleTree(DecisionTree),
}

impl BaselineModel {
    pub fn kind(&self) -> BaselineKind {
        match self {
            BaselineModel::GaussianNb(_) => BaselineKind::GaussianNb,
            BaselineModel::Knn(_) => BaselineKind::Knn,
            BaselineModel::LogisticSoftmax(_) => BaselineKind::LogisticSoftmax,
            BaselineModel::GradientBoostedTrees(_) => BaselineKind::GradientBoostedTrees,
            BaselineModel::LinearSvm(_) => BaselineKind::LinearSvm,
            BaselineModel::SingleTree(_) => BaselineKind::SingleTree,
        }
    }

    fn inner(&self) -> &dyn Classifier {
        match self {
            BaselineModel::GaussianNb(m) => m,
            BaselineModel::Knn(m) => m,
            BaselineModel::LogisticSoftmax(m) => m,
            BaselineModel::GradientBoostedTrees(m) => m,
            BaselineModel::LinearSvm(m) => m,
            BaselineModel::SingleTree(m) => m,
        }
    }
}

impl Classifier for BaselineModel {
    fn class_catalog(&self) -> &[String] {
        self.inner().class_catalog()
    }

    fn arity(&self) -> usize {
        self.inner().arity()
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        self.inner().posterior(x)
    }
}

pub fn fit_baseline(kind: BaselineKind, train: &LabeledDataset, params: &Hyperparams) -> Result<BaselineModel> {
    if train.is_empty() {
        return Err(KisanError::Empty("cannot fit a baseline on an empty dataset"));
    }
    Ok(match kind {
        BaselineKind::GaussianNb => BaselineModel::GaussianNb(GaussianNb::fit(train)),
        BaselineKind::Knn => BaselineModel::Knn(Knn::fit(train, params.knn_k)?),
        BaselineKind::LogisticSoftmax => BaselineModel::LogisticSoftmax(LogisticSoftmax::fit(
            train,
            params.logistic_epochs,
            params.logistic_learning_rate,
            params.seed,
        )?),
        BaselineKind::GradientBoostedTrees => BaselineModel::GradientBoostedTrees(GradientBoostedTrees::fit(
            train,
            params.gbt_stages,
            params.gbt_max_depth,
            params.gbt_learning_rate,
        )?),
        BaselineKind::LinearSvm => BaselineModel::LinearSvm(LinearSvm::fit(
            train,
            params.svm_epochs,
            params.svm_learning_rate,
            params.svm_lambda,
        )?),
        BaselineKind::SingleTree => BaselineModel::SingleTree(fit_decision_tree(
            train,
            &TreeConfig {
                max_depth: params.tree_max_depth,
                ..TreeConfig::default()
            },
        )?),
    })
}

/// `fit_baseline` with the kind given by name.
pub fn fit_baseline_named(kind: &str, train: &LabeledDataset, params: &Hyperparams) -> Result<BaselineModel> {
    fit_baseline(kind.parse()?, train, params)
}

#[cfg(test)]
pub(crate) mod test_data {
    use crate::domain::{LabeledDataset, Schema};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, Normal};

    /// Two Gaussian blobs with unit spread, centers `separation` apart on
    /// every axis.
    pub fn two_blobs(n_per: usize, separation: f64, seed: u64) -> LabeledDataset {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let noise = Normal::new(0.0, 1.0).unwrap();
        let mut rows = Vec::new();
        let mut labels = Vec::new();
        for (c, center) in [0.0, separation].into_iter().enumerate() {
            for _ in 0..n_per {
                rows.push((0..2).map(|_| center + noise.sample(&mut rng)).collect());
                labels.push(["east", "west"][c]);
            }
        }
        LabeledDataset::from_labels(Schema::new("blobs", vec!["x".into(), "y".into()]), rows, &labels).unwrap()
    }

    pub fn accuracy(model: &impl crate::classifier::Classifier, ds: &LabeledDataset) -> f64 {
        let hits = ds
            .rows
            .iter()
            .zip(&ds.labels)
            .filter(|(r, &l)| model.predict_class(r).unwrap() == l)
            .count();
        hits as f64 / ds.len() as f64
    }
}

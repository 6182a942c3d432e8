//! Multiclass gradient boosting: per stage, one regression tree per class
//! fit to the softmax residuals, with Newton-step leaf values.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::classifier::{softmax_in_place, Classifier};
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};

const MIN_GAIN: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum RegressionNode {
    Split {
        feature: usize,
        threshold: f64,
        left: Box<RegressionNode>,
        right: Box<RegressionNode>,
    },
    Leaf {
        value: f64,
    },
}

impl RegressionNode {
    pub fn predict(&self, x: &[f64]) -> f64 {
        let mut node = self;
        loop {
            match node {
                RegressionNode::Split {
                    feature,
                    threshold,
                    left,
                    right,
                } => node = if x[*feature] <= *threshold { left } else { right },
                RegressionNode::Leaf { value } => return *value,
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GradientBoostedTrees {
    pub class_catalog: Vec<String>,
    pub arity: usize,
    pub learning_rate: f64,
    /// Log class priors.
    pub init_scores: Vec<f64>,
    /// `stages[s][k]` is the class-`k` tree of stage `s`.
    pub stages: Vec<Vec<RegressionNode>>,
}

impl GradientBoostedTrees {
    pub fn fit(train: &LabeledDataset, n_stages: usize, max_depth: usize, learning_rate: f64) -> Result<Self> {
        if max_depth == 0 || learning_rate.is_nan() || learning_rate <= 0.0 {
            return Err(KisanError::InvalidInput(
                "gbt needs max_depth >= 1 and learning_rate > 0".into(),
            ));
        }
        let n = train.len();
        let k = train.n_classes();
        let d = train.arity();
        let counts = train.class_counts();
        let init_scores: Vec<f64> = counts.iter().map(|&c| ((c.max(1)) as f64 / n as f64).ln()).collect();
        let sorted: Vec<Vec<usize>> = (0..d)
            .map(|f| {
                let mut idx: Vec<usize> = (0..n).collect();
                idx.sort_by(|&a, &b| train.rows[a][f].total_cmp(&train.rows[b][f]).then(a.cmp(&b)));
                idx
            })
            .collect();
        let mut scores: Vec<Vec<f64>> = vec![init_scores.clone(); n];
        let scale = (k as f64 - 1.0) / k as f64;
        let mut stages = Vec::with_capacity(n_stages);
        for _ in 0..n_stages {
            let proba: Vec<Vec<f64>> = scores
                .iter()
                .map(|s| {
                    let mut p = s.clone();
                    softmax_in_place(&mut p);
                    p
                })
                .collect();
            let trees: Vec<(RegressionNode, Vec<f64>)> = (0..k)
                .into_par_iter()
                .map(|c| {
                    let residual: Vec<f64> = (0..n)
                        .map(|i| (train.labels[i] == c) as u8 as f64 - proba[i][c])
                        .collect();
                    let tree = fit_regression_tree(&train.rows, &sorted, &residual, max_depth, scale);
                    let update = train.rows.iter().map(|r| tree.predict(r)).collect();
                    (tree, update)
                })
                .collect();
            let mut stage = Vec::with_capacity(k);
            for (c, (tree, update)) in trees.into_iter().enumerate() {
                for (s, u) in scores.iter_mut().zip(&update) {
                    s[c] += learning_rate * u;
                }
                stage.push(tree);
            }
            stages.push(stage);
        }
        Ok(Self {
            class_catalog: train.class_catalog.clone(),
            arity: d,
            learning_rate,
            init_scores,
            stages,
        })
    }

    pub fn raw_scores(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.init_scores.clone();
        for stage in &self.stages {
            for (c, tree) in stage.iter().enumerate() {
                s[c] += self.learning_rate * tree.predict(x);
            }
        }
        s
    }
}

impl Classifier for GradientBoostedTrees {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.arity
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.raw_scores(x);
        softmax_in_place(&mut s);
        s
    }
}

struct Pending {
    sum: f64,
    hess: f64,
    count: usize,
}

enum Built {
    Leaf(f64),
    Split {
        feature: usize,
        threshold: f64,
        left: usize,
        right: usize,
    },
}

/// Level-wise least-squares tree over presorted feature orders; each level
/// costs one pass over every feature's order.
fn fit_regression_tree(
    rows: &[Vec<f64>],
    sorted: &[Vec<usize>],
    residual: &[f64],
    max_depth: usize,
    scale: f64,
) -> RegressionNode {
    let n = rows.len();
    let hess = |r: f64| r.abs() * (1.0 - r.abs());
    let mut pending = vec![Pending {
        sum: residual.iter().sum(),
        hess: residual.iter().map(|&r| hess(r)).sum(),
        count: n,
    }];
    let mut built: Vec<Option<Built>> = vec![None];
    let mut node_of = vec![0usize; n];
    let mut active = vec![0usize];

    for _ in 0..max_depth {
        if active.is_empty() {
            break;
        }
        let mut slot = vec![usize::MAX; pending.len()];
        for (s, &id) in active.iter().enumerate() {
            slot[id] = s;
        }
        let m = active.len();
        let mut best: Vec<Option<(f64, usize, f64)>> = vec![None; m];
        for (f, order) in sorted.iter().enumerate() {
            let mut left_sum = vec![0.0; m];
            let mut left_count = vec![0usize; m];
            let mut last: Vec<Option<f64>> = vec![None; m];
            for &i in order {
                let s = slot[node_of[i]];
                if s == usize::MAX {
                    continue;
                }
                let v = rows[i][f];
                if let Some(prev) = last[s] {
                    if v > prev {
                        let node = &pending[active[s]];
                        let (nl, nr) = (left_count[s] as f64, (node.count - left_count[s]) as f64);
                        let right_sum = node.sum - left_sum[s];
                        let gain = left_sum[s] * left_sum[s] / nl + right_sum * right_sum / nr
                            - node.sum * node.sum / node.count as f64;
                        let better = match best[s] {
                            None => gain > MIN_GAIN,
                            Some((g, _, _)) => gain > g + MIN_GAIN,
                        };
                        if better {
                            let mut t = prev + (v - prev) / 2.0;
                            if t >= v {
                                t = prev;
                            }
                            best[s] = Some((gain, f, t));
                        }
                    }
                }
                left_sum[s] += residual[i];
                left_count[s] += 1;
                last[s] = Some(v);
            }
        }

        let mut next_active = Vec::new();
        let mut child_of: Vec<Option<(usize, f64, usize, usize)>> = vec![None; m];
        for (s, &id) in active.iter().enumerate() {
            match best[s] {
                Some((_, feature, threshold)) => {
                    let left = pending.len();
                    let right = left + 1;
                    for _ in 0..2 {
                        pending.push(Pending {
                            sum: 0.0,
                            hess: 0.0,
                            count: 0,
                        });
                        built.push(None);
                    }
                    built[id] = Some(Built::Split {
                        feature,
                        threshold,
                        left,
                        right,
                    });
                    child_of[s] = Some((feature, threshold, left, right));
                    next_active.extend([left, right]);
                }
                None => built[id] = Some(Built::Leaf(leaf_value(&pending[id], scale))),
            }
        }
        for i in 0..n {
            let s = slot[node_of[i]];
            if s == usize::MAX {
                continue;
            }
            if let Some((feature, threshold, left, right)) = child_of[s] {
                let child = if rows[i][feature] <= threshold { left } else { right };
                node_of[i] = child;
                let p = &mut pending[child];
                p.sum += residual[i];
                p.hess += hess(residual[i]);
                p.count += 1;
            }
        }
        active = next_active;
    }
    for id in active {
        built[id] = Some(Built::Leaf(leaf_value(&pending[id], scale)));
    }
    assemble(&built, 0)
}

fn leaf_value(node: &Pending, scale: f64) -> f64 {
    if node.hess.abs() < 1e-150 {
        0.0
    } else {
        scale * node.sum / node.hess
    }
}

fn assemble(built: &[Option<Built>], id: usize) -> RegressionNode {
    match built[id].as_ref().expect("every reachable node is built") {
        Built::Leaf(value) => RegressionNode::Leaf { value: *value },
        Built::Split {
            feature,
            threshold,
            left,
            right,
        } => RegressionNode::Split {
            feature: *feature,
            threshold: *threshold,
            left: Box::new(assemble(built, *left)),
            right: Box::new(assemble(built, *right)),
        },
    }
}

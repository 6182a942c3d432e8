use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};

/// Brute-force k-nearest neighbours under Euclidean distance. Equal
/// distances are ordered by training row index.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Knn {
    pub class_catalog: Vec<String>,
    pub k: usize,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
}

impl Knn {
    pub fn fit(train: &LabeledDataset, k: usize) -> Result<Self> {
        if k == 0 {
            return Err(KisanError::InvalidInput("knn k must be >= 1".into()));
        }
        Ok(Self {
            class_catalog: train.class_catalog.clone(),
            k,
            rows: train.rows.clone(),
            labels: train.labels.clone(),
        })
    }
}

impl Classifier for Knn {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.rows.first().map_or(0, |r| r.len())
    }

    /// Vote fractions among the k nearest training rows.
    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut dist: Vec<(f64, usize)> = self
            .rows
            .iter()
            .enumerate()
            .map(|(i, r)| (r.iter().zip(x).map(|(a, b)| (a - b) * (a - b)).sum::<f64>(), i))
            .collect();
        let k = self.k.min(dist.len());
        let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < dist.len() {
            dist.select_nth_unstable_by(k - 1, cmp);
        }
        let mut votes = vec![0.0; self.class_catalog.len()];
        for &(_, i) in &dist[..k] {
            votes[self.labels[i]] += 1.0;
        }
        votes.iter_mut().for_each(|v| *v /= k as f64);
        votes
    }
}

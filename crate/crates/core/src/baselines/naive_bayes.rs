use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::domain::LabeledDataset;

const VARIANCE_FLOOR: f64 = 1e-9;

/// Gaussian naive Bayes with per-class feature means and variances.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GaussianNb {
    pub class_catalog: Vec<String>,
    pub means: Vec<Vec<f64>>,
    pub variances: Vec<Vec<f64>>,
    pub priors: Vec<f64>,
}

impl GaussianNb {
    pub fn fit(train: &LabeledDataset) -> Self {
        let k = train.n_classes();
        let d = train.arity();
        let counts = train.class_counts();
        let mut means = vec![vec![0.0; d]; k];
        for (row, &l) in train.rows.iter().zip(&train.labels) {
            means[l].iter_mut().zip(row).for_each(|(m, v)| *m += v);
        }
        for (m, &c) in means.iter_mut().zip(&counts) {
            if c > 0 {
                m.iter_mut().for_each(|v| *v /= c as f64);
            }
        }
        let mut variances = vec![vec![0.0; d]; k];
        for (row, &l) in train.rows.iter().zip(&train.labels) {
            for ((acc, v), m) in variances[l].iter_mut().zip(row).zip(&means[l]) {
                *acc += (v - m) * (v - m);
            }
        }
        for (var, &c) in variances.iter_mut().zip(&counts) {
            var.iter_mut()
                .for_each(|v| *v = (*v / c.max(1) as f64).max(VARIANCE_FLOOR));
        }
        let n = train.len() as f64;
        let priors = counts.iter().map(|&c| c as f64 / n).collect();
        Self {
            class_catalog: train.class_catalog.clone(),
            means,
            variances,
            priors,
        }
    }
}

impl Classifier for GaussianNb {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.means.first().map_or(0, |m| m.len())
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let log_joint: Vec<f64> = (0..self.priors.len())
            .map(|c| {
                if self.priors[c] == 0.0 {
                    return f64::NEG_INFINITY;
                }
                let ll: f64 = x
                    .iter()
                    .zip(self.means[c].iter().zip(&self.variances[c]))
                    .map(|(v, (m, var))| -0.5 * ((2.0 * std::f64::consts::PI * var).ln() + (v - m).powi(2) / var))
                    .sum();
                self.priors[c].ln() + ll
            })
            .collect();
        let max = log_joint.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let mut p: Vec<f64> = log_joint.iter().map(|l| (l - max).exp()).collect();
        let sum: f64 = p.iter().sum();
        p.iter_mut().for_each(|v| *v /= sum);
        p
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_data::{accuracy, two_blobs};
    use crate::domain::Schema;

    #[test]
    fn separated_blobs_are_classified_perfectly() {
        // Centers 12 sigma apart on each axis.
        let train = two_blobs(100, 12.0, 1);
        let test = two_blobs(100, 12.0, 2);
        let model = GaussianNb::fit(&train);
        assert_eq!(accuracy(&model, &test), 1.0);
    }

    #[test]
    fn symmetric_classes_give_uniform_posterior() {
        // Both classes share identical per-feature statistics and priors.
        let schema = Schema::new("s", vec!["x".into()]);
        let ds = LabeledDataset::from_labels(
            schema,
            vec![vec![-1.0], vec![1.0], vec![-1.0], vec![1.0]],
            &["a", "a", "b", "b"],
        )
        .unwrap();
        let model = GaussianNb::fit(&ds);
        let p = model.predict_proba(&[0.3]).unwrap();
        assert_eq!(p, vec![0.5, 0.5]);
    }

    #[test]
    fn constant_feature_hits_the_floor() {
        let schema = Schema::new("s", vec!["x".into(), "c".into()]);
        let ds = LabeledDataset::from_labels(
            schema,
            vec![vec![0.0, 1.0], vec![0.1, 1.0], vec![5.0, 1.0], vec![5.1, 1.0]],
            &["a", "a", "b", "b"],
        )
        .unwrap();
        let model = GaussianNb::fit(&ds);
        assert_eq!(model.variances[0][1], VARIANCE_FLOOR);
        let p = model.predict_proba(&[0.05, 1.0]).unwrap();
        assert!(p.iter().all(|v| v.is_finite()));
        assert_eq!(model.predict_class(&[0.05, 1.0]).unwrap(), 0);
    }
}

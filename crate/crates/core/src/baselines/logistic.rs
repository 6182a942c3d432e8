use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::classifier::{softmax_in_place, Classifier};
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};

/// Multinomial logistic regression fit by full-batch gradient descent on
/// mean cross-entropy.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LogisticSoftmax {
    pub class_catalog: Vec<String>,
    /// One row of weights per class.
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LogisticSoftmax {
    pub fn fit(train: &LabeledDataset, epochs: usize, learning_rate: f64, seed: u64) -> Result<Self> {
        if !(learning_rate > 0.0 && learning_rate.is_finite()) {
            return Err(KisanError::InvalidInput(format!(
                "learning rate {learning_rate} must be positive"
            )));
        }
        let k = train.n_classes();
        let d = train.arity();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let init = Normal::new(0.0, 0.01).expect("valid normal");
        let mut model = Self {
            class_catalog: train.class_catalog.clone(),
            weights: (0..k)
                .map(|_| (0..d).map(|_| init.sample(&mut rng)).collect())
                .collect(),
            bias: vec![0.0; k],
        };
        let n = train.len() as f64;
        let mut grad_w = vec![vec![0.0; d]; k];
        let mut grad_b = vec![0.0; k];
        for _ in 0..epochs {
            grad_w.iter_mut().for_each(|g| g.iter_mut().for_each(|v| *v = 0.0));
            grad_b.iter_mut().for_each(|v| *v = 0.0);
            for (row, &label) in train.rows.iter().zip(&train.labels) {
                let mut p = model.scores(row);
                softmax_in_place(&mut p);
                p[label] -= 1.0;
                for (c, err) in p.iter().enumerate() {
                    grad_b[c] += err;
                    grad_w[c].iter_mut().zip(row).for_each(|(g, x)| *g += err * x);
                }
            }
            for c in 0..k {
                model.bias[c] -= learning_rate * grad_b[c] / n;
                model.weights[c]
                    .iter_mut()
                    .zip(&grad_w[c])
                    .for_each(|(w, g)| *w -= learning_rate * g / n);
            }
        }
        Ok(model)
    }

    fn scores(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }
}

impl Classifier for LogisticSoftmax {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let mut s = self.scores(x);
        softmax_in_place(&mut s);
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_data::{accuracy, two_blobs};

    #[test]
    fn separable_data_is_fit_exactly() {
        let train = two_blobs(50, 10.0, 11);
        let model = LogisticSoftmax::fit(&train, 300, 0.5, 42).unwrap();
        assert_eq!(accuracy(&model, &train), 1.0);
    }

    #[test]
    fn loss_decreases_with_training() {
        let train = two_blobs(50, 2.0, 12);
        let mean_nll = |m: &LogisticSoftmax| {
            train
                .rows
                .iter()
                .zip(&train.labels)
                .map(|(r, &l)| -m.posterior(r)[l].ln())
                .sum::<f64>()
                / train.len() as f64
        };
        let short = LogisticSoftmax::fit(&train, 5, 0.1, 1).unwrap();
        let long = LogisticSoftmax::fit(&train, 200, 0.1, 1).unwrap();
        assert!(mean_nll(&long) < mean_nll(&short));
        assert!(LogisticSoftmax::fit(&train, 5, 0.0, 1).is_err());
    }
}

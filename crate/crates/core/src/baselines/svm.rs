use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::domain::LabeledDataset;
use crate::error::{KisanError, Result};

/// One-vs-rest linear SVMs trained by full-batch subgradient descent on the
/// L2-regularized hinge loss.
///
/// The posterior is the vector of positive margins normalized to sum to 1
/// (uniform when no margin is positive). It is a score, not a calibrated
/// probability.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LinearSvm {
    pub class_catalog: Vec<String>,
    pub weights: Vec<Vec<f64>>,
    pub bias: Vec<f64>,
}

impl LinearSvm {
    pub fn fit(train: &LabeledDataset, epochs: usize, learning_rate: f64, lambda: f64) -> Result<Self> {
        if !(learning_rate > 0.0 && lambda >= 0.0) {
            return Err(KisanError::InvalidInput(
                "svm needs learning_rate > 0 and lambda >= 0".into(),
            ));
        }
        let k = train.n_classes();
        let d = train.arity();
        let n = train.len() as f64;
        let mut weights = vec![vec![0.0; d]; k];
        let mut bias = vec![0.0; k];
        for c in 0..k {
            let w = &mut weights[c];
            let b = &mut bias[c];
            let mut grad = vec![0.0; d];
            for _ in 0..epochs {
                grad.iter_mut().zip(w.iter()).for_each(|(g, wi)| *g = lambda * wi);
                let mut grad_b = 0.0;
                for (row, &label) in train.rows.iter().zip(&train.labels) {
                    let y = if label == c { 1.0 } else { -1.0 };
                    let margin = *b + w.iter().zip(row).map(|(a, x)| a * x).sum::<f64>();
                    if y * margin < 1.0 {
                        grad.iter_mut().zip(row).for_each(|(g, x)| *g -= y * x / n);
                        grad_b -= y / n;
                    }
                }
                w.iter_mut().zip(&grad).for_each(|(wi, g)| *wi -= learning_rate * g);
                *b -= learning_rate * grad_b;
            }
        }
        Ok(Self {
            class_catalog: train.class_catalog.clone(),
            weights,
            bias,
        })
    }

    pub fn margins(&self, x: &[f64]) -> Vec<f64> {
        self.weights
            .iter()
            .zip(&self.bias)
            .map(|(w, b)| b + w.iter().zip(x).map(|(a, v)| a * v).sum::<f64>())
            .collect()
    }
}

impl Classifier for LinearSvm {
    fn class_catalog(&self) -> &[String] {
        &self.class_catalog
    }

    fn arity(&self) -> usize {
        self.weights.first().map_or(0, |w| w.len())
    }

    fn posterior(&self, x: &[f64]) -> Vec<f64> {
        let clipped: Vec<f64> = self.margins(x).into_iter().map(|m| m.max(0.0)).collect();
        let sum: f64 = clipped.iter().sum();
        if sum > 0.0 {
            clipped.into_iter().map(|m| m / sum).collect()
        } else {
            vec![1.0 / clipped.len() as f64; clipped.len()]
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::baselines::test_data::{accuracy, two_blobs};

    #[test]
    fn separable_blobs() {
        let train = two_blobs(50, 8.0, 21);
        let model = LinearSvm::fit(&train, 300, 0.1, 1e-4).unwrap();
        assert_eq!(accuracy(&model, &train), 1.0);
        // The winning class holds all of the positive margin mass here.
        let p = model.predict_proba(&train.rows[0]).unwrap();
        assert_eq!(p, vec![1.0, 0.0]);
    }

    #[test]
    fn no_positive_margin_is_uniform() {
        let model = LinearSvm {
            class_catalog: vec!["a".into(), "b".into(), "c".into()],
            weights: vec![vec![0.0]; 3],
            bias: vec![-1.0; 3],
        };
        assert_eq!(model.predict_proba(&[4.0]).unwrap(), vec![1.0 / 3.0; 3]);
    }
}

//! Confusion matrix, macro-averaged classification metrics and log loss.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{KisanError, Result};

/// Probability floor applied to the true-class posterior in [`log_loss`].
pub const LOG_LOSS_CLIP: f64 = 1e-15;

/// Rows are the true class, columns the predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub class_catalog: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    /// Builds from label indices already resolved against `class_catalog`.
    pub fn from_indices(truth: &[usize], predicted: &[usize], class_catalog: &[String]) -> Result<Self> {
        if truth.len() != predicted.len() {
            return Err(KisanError::InvalidInput(format!(
                "{} truths but {} predictions",
                truth.len(),
                predicted.len()
            )));
        }
        let k = class_catalog.len();
        let mut counts = vec![vec![0u64; k]; k];
        for (&t, &p) in truth.iter().zip(predicted) {
            if t >= k || p >= k {
                return Err(KisanError::InvalidInput(format!("label index outside catalog of {k}")));
            }
            counts[t][p] += 1;
        }
        Ok(Self {
            class_catalog: class_catalog.to_vec(),
            counts,
        })
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn trace(&self) -> u64 {
        (0..self.counts.len()).map(|i| self.counts[i][i]).sum()
    }

    /// CSV with a header row of predicted classes and one row per true class.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("true\\predicted");
        for c in &self.class_catalog {
            out.push(',');
            out.push_str(c);
        }
        out.push('\n');
        for (c, row) in self.class_catalog.iter().zip(&self.counts) {
            out.push_str(c);
            for v in row {
                out.push(',');
                out.push_str(&v.to_string());
            }
            out.push('\n');
        }
        out
    }
}

/// Builds a confusion matrix from class names.
pub fn confusion_matrix<S: AsRef<str>>(
    truth: &[S],
    predicted: &[S],
    class_catalog: &[String],
) -> Result<ConfusionMatrix> {
    let index: BTreeMap<&str, usize> = class_catalog.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
    let resolve = |labels: &[S]| -> Result<Vec<usize>> {
        labels
            .iter()
            .map(|l| {
                index
                    .get(l.as_ref())
                    .copied()
                    .ok_or_else(|| KisanError::UnknownCategory {
                        kind: "class",
                        value: l.as_ref().to_string(),
                        known: class_catalog.to_vec(),
                    })
            })
            .collect()
    };
    if truth.len() != predicted.len() {
        return Err(KisanError::InvalidInput(format!(
            "{} truths but {} predictions",
            truth.len(),
            predicted.len()
        )));
    }
    ConfusionMatrix::from_indices(&resolve(truth)?, &resolve(predicted)?, class_catalog)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub class: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision_macro: f64,
    pub recall_macro: f64,
    pub f1_macro: f64,
    /// Absent when only hard predictions were scored.
    pub log_loss: Option<f64>,
    pub per_class: Vec<ClassMetrics>,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

/// Accuracy and macro precision/recall/F1. Undefined ratios (0/0) are 0.
pub fn classification_metrics(cm: &ConfusionMatrix) -> Result<MetricsReport> {
    let total = cm.total();
    if total == 0 {
        return Err(KisanError::Empty("confusion matrix has no samples"));
    }
    let k = cm.class_catalog.len();
    let per_class: Vec<ClassMetrics> = (0..k)
        .map(|i| {
            let tp = cm.counts[i][i];
            let row: u64 = cm.counts[i].iter().sum();
            let col: u64 = cm.counts.iter().map(|r| r[i]).sum();
            let precision = ratio(tp, col);
            let recall = ratio(tp, row);
            let f1 = if precision + recall > 0.0 {
                2.0 * precision * recall / (precision + recall)
            } else {
                0.0
            };
            ClassMetrics {
                class: cm.class_catalog[i].clone(),
                precision,
                recall,
                f1,
                support: row,
            }
        })
        .collect();
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / k as f64;
    Ok(MetricsReport {
        accuracy: ratio(cm.trace(), total),
        precision_macro: mean(|c| c.precision),
        recall_macro: mean(|c| c.recall),
        f1_macro: mean(|c| c.f1),
        log_loss: None,
        per_class,
    })
}

/// Mean negative log posterior of the true class, clipped at
/// [`LOG_LOSS_CLIP`]. Posteriors must each sum to 1 within 1e-6.
pub fn log_loss(truth: &[usize], posteriors: &[Vec<f64>], class_catalog: &[String]) -> Result<f64> {
    if truth.len() != posteriors.len() {
        return Err(KisanError::InvalidInput(format!(
            "{} truths but {} posteriors",
            truth.len(),
            posteriors.len()
        )));
    }
    if truth.is_empty() {
        return Err(KisanError::Empty("log loss of zero samples"));
    }
    let mut total = 0.0;
    for (i, (&t, p)) in truth.iter().zip(posteriors).enumerate() {
        if p.len() != class_catalog.len() || t >= p.len() {
            return Err(KisanError::InvalidInput(format!(
                "posterior {i} does not match the catalog of {}",
                class_catalog.len()
            )));
        }
        let sum: f64 = p.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(KisanError::InvalidInput(format!("posterior {i} sums to {sum}, not 1")));
        }
        total -= p[t].clamp(LOG_LOSS_CLIP, 1.0).ln();
    }
    Ok(total / truth.len() as f64)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn cat(names: &[&str]) -> Vec<String> {
        names.iter().map(|s| s.to_string()).collect()
    }

    #[test]
    fn confusion_examples() {
        let c = cat(&["A", "B"]);
        let cm = confusion_matrix(&["A", "B", "A"], &["A", "B", "A"], &c).unwrap();
        assert_eq!(cm.counts, vec![vec![2, 0], vec![0, 1]]);

        let cm = confusion_matrix(&["A", "A", "B"], &["A", "B", "B"], &c).unwrap();
        assert_eq!(cm.counts, vec![vec![1, 1], vec![0, 1]]);

        let empty: [&str; 0] = [];
        let cm = confusion_matrix(&empty, &empty, &c).unwrap();
        assert_eq!(cm.total(), 0);

        assert!(confusion_matrix(&["A"], &["A", "B"], &c).is_err());
        assert!(confusion_matrix(&["A"], &["Z"], &c).is_err());
    }

    #[test]
    fn perfect_diagonal() {
        let cm = ConfusionMatrix {
            class_catalog: cat(&["a", "b", "c"]),
            counts: vec![vec![3, 0, 0], vec![0, 4, 0], vec![0, 0, 5]],
        };
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(
            (m.accuracy, m.precision_macro, m.recall_macro, m.f1_macro),
            (1.0, 1.0, 1.0, 1.0)
        );
    }

    #[test]
    fn two_class_hand_arithmetic() {
        let cm = ConfusionMatrix {
            class_catalog: cat(&["A", "B"]),
            counts: vec![vec![8, 2], vec![3, 7]],
        };
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(m.accuracy, 0.75);
        assert_eq!(m.recall_macro, 0.75);
        // Column-wise precision: 8/11 and 7/9.
        assert_abs_diff_eq!(m.precision_macro, 0.5 * (8.0 / 11.0 + 7.0 / 9.0), epsilon = 1e-15);
    }

    #[test]
    fn never_predicted_class_has_zero_precision() {
        let cm = ConfusionMatrix {
            class_catalog: cat(&["A", "B"]),
            counts: vec![vec![5, 0], vec![3, 0]],
        };
        let m = classification_metrics(&cm).unwrap();
        assert_eq!(m.per_class[1].precision, 0.0);
        assert_eq!(m.per_class[1].f1, 0.0);
        let empty = ConfusionMatrix {
            class_catalog: cat(&["A"]),
            counts: vec![vec![0]],
        };
        assert!(classification_metrics(&empty).is_err());
    }

    #[test]
    fn log_loss_examples() {
        let c: Vec<String> = (0..22).map(|i| format!("c{i:02}")).collect();
        let truth = vec![0, 5, 21];
        let one_hot: Vec<Vec<f64>> = truth
            .iter()
            .map(|&t| (0..22).map(|j| if j == t { 1.0 } else { 0.0 }).collect())
            .collect();
        assert_eq!(log_loss(&truth, &one_hot, &c).unwrap(), 0.0);

        let uniform = vec![vec![1.0 / 22.0; 22]; 3];
        assert_abs_diff_eq!(log_loss(&truth, &uniform, &c).unwrap(), 22f64.ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(22f64.ln(), 3.09104, epsilon = 1e-5);

        let two = cat(&["a", "b"]);
        let wrong = vec![vec![0.0, 1.0]];
        let ll = log_loss(&[0], &wrong, &two).unwrap();
        assert_abs_diff_eq!(ll, -(1e-15f64).ln(), epsilon = 1e-9);
        assert_abs_diff_eq!(ll, 34.54, epsilon = 0.01);

        assert!(log_loss(&[0, 1], &wrong, &two).is_err());
        assert!(log_loss(&[0], &[vec![0.3, 0.3]], &two).is_err());
    }

    #[test]
    fn csv_export() {
        let cm = ConfusionMatrix {
            class_catalog: cat(&["a", "b"]),
            counts: vec![vec![1, 2], vec![3, 4]],
        };
        assert_eq!(cm.to_csv(), "true\\predicted,a,b\na,1,2\nb,3,4\n");
    }
}

//! Single-split benchmark of the forest against the classical baselines.
//!
//! Every model sees the same stratified split and the same standardizer
//! (fit on the training half). Reports are split into a deterministic body
//! and a metadata envelope holding timestamps and wall-clock times.

use std::collections::BTreeMap;
use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::baselines::{fit_baseline, BaselineKind, Hyperparams};
use crate::bundle::FeatureImportance;
use crate::classifier::{argmax, Classifier};
use crate::domain::{fit_standardizer, stratified_split, DatasetFingerprint, LabeledDataset};
use crate::error::{KisanError, Result};
use crate::forest::{feature_importances, fit_random_forest, oob_predictions, ForestConfig};
use crate::metrics::{classification_metrics, log_loss, ConfusionMatrix, MetricsReport};

pub const REPORT_VERSION: u64 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "model", rename_all = "snake_case")]
pub enum ModelSpec {
    /// Scored on the held-out split.
    RandomForest {
        config: ForestConfig,
    },
    /// Scored on the out-of-bag predictions over the training split.
    RandomForestOob {
        config: ForestConfig,
    },
    Baseline {
        kind: BaselineKind,
        params: Hyperparams,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RosterEntry {
    pub name: String,
    pub spec: ModelSpec,
}

impl RosterEntry {
    fn baseline(name: &str, kind: BaselineKind, params: Hyperparams) -> Self {
        Self {
            name: name.into(),
            spec: ModelSpec::Baseline { kind, params },
        }
    }
}

/// The nine-model roster. "gbt (in-house)" uses deeper trees and a larger
/// step than "Gradient Boosting", in the spirit of an XGBoost default.
pub fn default_roster(seed: u64) -> Vec<RosterEntry> {
    let forest = ForestConfig {
        seed,
        ..ForestConfig::default()
    };
    let params = Hyperparams {
        seed,
        ..Hyperparams::default()
    };
    vec![
        RosterEntry {
            name: "Random Forest".into(),
            spec: ModelSpec::RandomForest { config: forest },
        },
        RosterEntry::baseline(
            "gbt (in-house)",
            BaselineKind::GradientBoostedTrees,
            Hyperparams {
                gbt_max_depth: 6,
                gbt_learning_rate: 0.3,
                ..params
            },
        ),
        RosterEntry::baseline("Gaussian NB", BaselineKind::GaussianNb, params),
        RosterEntry::baseline("Decision Tree", BaselineKind::SingleTree, params),
        RosterEntry::baseline("KNN", BaselineKind::Knn, params),
        RosterEntry::baseline("Logistic Regression", BaselineKind::LogisticSoftmax, params),
        RosterEntry::baseline("SVM (linear)", BaselineKind::LinearSvm, params),
        RosterEntry {
            name: "Random Forest (OOB)".into(),
            spec: ModelSpec::RandomForestOob { config: forest },
        },
        RosterEntry::baseline("Gradient Boosting", BaselineKind::GradientBoostedTrees, params),
    ]
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitDescriptor {
    pub test_fraction: f64,
    pub seed: u64,
    pub train_rows: usize,
    pub test_rows: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EvaluatedOn {
    Test,
    TrainOob,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelResult {
    pub name: String,
    pub spec: ModelSpec,
    /// Absent when the fit or evaluation failed.
    pub metrics: Option<MetricsReport>,
    pub error: Option<String>,
    pub evaluated_on: EvaluatedOn,
    pub evaluated_rows: usize,
}

impl ModelResult {
    pub fn failed(&self) -> bool {
        self.metrics.is_none()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Champion {
    pub name: String,
    pub confusion: ConfusionMatrix,
    /// Mean-decrease-in-impurity importances; forests only.
    pub feature_importances: Option<Vec<FeatureImportance>>,
}

/// Deterministic part of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkReport {
    pub report_version: u64,
    /// Precision, recall and F1 averaging mode.
    pub averaging: String,
    pub notes: Vec<String>,
    pub dataset: DatasetFingerprint,
    pub features: Vec<String>,
    pub split: SplitDescriptor,
    /// Sorted by descending accuracy, then ascending log loss, then name;
    /// failed models last.
    pub models: Vec<ModelResult>,
    pub champion: Option<Champion>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkMetadata {
    pub generated_at: String,
    pub wall_clock_ms: BTreeMap<String, u64>,
}

/// On-disk form of a benchmark run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BenchmarkDocument {
    pub body: BenchmarkReport,
    pub metadata: BenchmarkMetadata,
}

const NOTES: [&str; 4] = [
    "precision, recall and F1 are macro averages (unweighted means over classes)",
    "gbt (in-house) is a native gradient-boosted tree model standing in for XGBoost",
    "SVM (linear) scores are normalized positive margins, not calibrated probabilities",
    "Random Forest (OOB) is scored on out-of-bag predictions over the training split",
];

struct Evaluation {
    metrics: MetricsReport,
    confusion: ConfusionMatrix,
    importances: Option<Vec<f64>>,
    evaluated_rows: usize,
}

fn score(
    truth: &[usize],
    predicted: &[usize],
    posteriors: &[Vec<f64>],
    catalog: &[String],
) -> Result<(MetricsReport, ConfusionMatrix)> {
    let cm = ConfusionMatrix::from_indices(truth, predicted, catalog)?;
    let mut metrics = classification_metrics(&cm)?;
    metrics.log_loss = Some(log_loss(truth, posteriors, catalog)?);
    Ok((metrics, cm))
}

fn score_classifier(model: &impl Classifier, test: &LabeledDataset) -> Result<Evaluation> {
    let posteriors: Vec<Vec<f64>> = test
        .rows
        .iter()
        .map(|r| model.predict_proba(r))
        .collect::<Result<_>>()?;
    let predicted: Vec<usize> = posteriors.iter().map(|p| argmax(p)).collect();
    let (metrics, confusion) = score(&test.labels, &predicted, &posteriors, &test.class_catalog)?;
    Ok(Evaluation {
        metrics,
        confusion,
        importances: None,
        evaluated_rows: test.len(),
    })
}

fn evaluate(spec: &ModelSpec, train: &LabeledDataset, test: &LabeledDataset) -> Result<Evaluation> {
    match spec {
        ModelSpec::RandomForest { config } => {
            let forest = fit_random_forest(train, config)?;
            let mut eval = score_classifier(&forest, test)?;
            eval.importances = Some(feature_importances(&forest));
            Ok(eval)
        }
        ModelSpec::RandomForestOob { config } => {
            let forest = fit_random_forest(train, config)?;
            let preds = oob_predictions(&forest, train)?;
            let (mut truth, mut predicted, mut posteriors) = (Vec::new(), Vec::new(), Vec::new());
            for (pred, &label) in preds.into_iter().zip(&train.labels) {
                if let Some((class, proba)) = pred {
                    truth.push(label);
                    predicted.push(class);
                    posteriors.push(proba);
                }
            }
            if truth.is_empty() {
                return Err(KisanError::OobUndefined("no row is out-of-bag for any tree"));
            }
            let (metrics, confusion) = score(&truth, &predicted, &posteriors, &train.class_catalog)?;
            Ok(Evaluation {
                metrics,
                confusion,
                importances: Some(feature_importances(&forest)),
                evaluated_rows: truth.len(),
            })
        }
        ModelSpec::Baseline { kind, params } => score_classifier(&fit_baseline(*kind, train, params)?, test),
    }
}

/// Runs every roster entry on one stratified split. Fit or scoring errors
/// are recorded on the model's row; the run itself fails only on an empty
/// roster or an unsplittable dataset.
pub fn run_benchmark(
    dataset: &LabeledDataset,
    roster: &[RosterEntry],
    test_fraction: f64,
    seed: u64,
) -> Result<(BenchmarkReport, BTreeMap<String, u64>)> {
    if roster.is_empty() {
        return Err(KisanError::Empty("benchmark roster"));
    }
    let (train, test) = stratified_split(dataset, test_fraction, seed)?;
    let standardizer = fit_standardizer(&train)?;
    let train = train.standardized(&standardizer)?;
    let test = test.standardized(&standardizer)?;

    let outcomes: Vec<(ModelResult, Option<Evaluation>, u64)> = roster
        .par_iter()
        .map(|entry| {
            let started = Instant::now();
            let outcome = evaluate(&entry.spec, &train, &test);
            let elapsed = started.elapsed().as_millis() as u64;
            let evaluated_on = match entry.spec {
                ModelSpec::RandomForestOob { .. } => EvaluatedOn::TrainOob,
                _ => EvaluatedOn::Test,
            };
            let (metrics, error, rows, eval) = match outcome {
                Ok(e) => (Some(e.metrics.clone()), None, e.evaluated_rows, Some(e)),
                Err(err) => (None, Some(err.to_string()), 0, None),
            };
            let result = ModelResult {
                name: entry.name.clone(),
                spec: entry.spec.clone(),
                metrics,
                error,
                evaluated_on,
                evaluated_rows: rows,
            };
            (result, eval, elapsed)
        })
        .collect();

    let mut timings = BTreeMap::new();
    let mut ranked: Vec<(ModelResult, Option<Evaluation>)> = Vec::with_capacity(outcomes.len());
    for (result, eval, ms) in outcomes {
        timings.insert(result.name.clone(), ms);
        ranked.push((result, eval));
    }
    ranked.sort_by(|(a, _), (b, _)| match (&a.metrics, &b.metrics) {
        (Some(ma), Some(mb)) => mb
            .accuracy
            .total_cmp(&ma.accuracy)
            .then(
                ma.log_loss
                    .unwrap_or(f64::INFINITY)
                    .total_cmp(&mb.log_loss.unwrap_or(f64::INFINITY)),
            )
            .then_with(|| a.name.cmp(&b.name)),
        (Some(_), None) => std::cmp::Ordering::Less,
        (None, Some(_)) => std::cmp::Ordering::Greater,
        (None, None) => a.name.cmp(&b.name),
    });

    let champion = ranked.first().and_then(|(result, eval)| {
        eval.as_ref().map(|e| Champion {
            name: result.name.clone(),
            confusion: e.confusion.clone(),
            feature_importances: e.importances.as_ref().map(|imp| {
                dataset
                    .schema
                    .features
                    .iter()
                    .zip(imp)
                    .map(|(f, &importance)| FeatureImportance {
                        feature: f.clone(),
                        importance,
                    })
                    .collect()
            }),
        })
    });

    let report = BenchmarkReport {
        report_version: REPORT_VERSION,
        averaging: "macro".into(),
        notes: NOTES.iter().map(|s| s.to_string()).collect(),
        dataset: dataset.fingerprint(),
        features: dataset.schema.features.clone(),
        split: SplitDescriptor {
            test_fraction,
            seed,
            train_rows: train.len(),
            test_rows: test.len(),
        },
        models: ranked.into_iter().map(|(r, _)| r).collect(),
        champion,
    };
    Ok((report, timings))
}

/// Looks up a model row by name.
pub fn find_model<'a>(report: &'a BenchmarkReport, name: &str) -> Option<&'a ModelResult> {
    report.models.iter().find(|m| m.name == name)
}

/// Plain-text table with the columns
/// `Model | Accuracy | Precision | Recall | F1-Score | Log Loss`.
pub fn text_table(report: &BenchmarkReport) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "# dataset: {} rows, {} classes, sha256 {}\n",
        report.dataset.rows, report.dataset.classes, report.dataset.content_hash
    ));
    out.push_str(&format!(
        "# split: stratified, test fraction {}, seed {}, {} train / {} test rows\n",
        report.split.test_fraction, report.split.seed, report.split.train_rows, report.split.test_rows
    ));
    for note in &report.notes {
        out.push_str(&format!("# {note}\n"));
    }
    let header = ["Model", "Accuracy", "Precision", "Recall", "F1-Score", "Log Loss"];
    let rows: Vec<[String; 6]> = report
        .models
        .iter()
        .map(|m| match &m.metrics {
            Some(x) => [
                m.name.clone(),
                format!("{:.4}", x.accuracy),
                format!("{:.4}", x.precision_macro),
                format!("{:.4}", x.recall_macro),
                format!("{:.4}", x.f1_macro),
                x.log_loss.map_or("-".into(), |l| format!("{l:.4}")),
            ],
            None => [
                m.name.clone(),
                "failed".into(),
                "-".into(),
                "-".into(),
                "-".into(),
                "-".into(),
            ],
        })
        .collect();
    let widths: Vec<usize> = (0..6)
        .map(|j| {
            rows.iter()
                .map(|r| r[j].len())
                .chain([header[j].len()])
                .max()
                .unwrap_or(0)
        })
        .collect();
    let line = |cells: [&str; 6]| -> String {
        let padded: Vec<String> = cells
            .iter()
            .enumerate()
            .map(|(j, c)| format!("{c:<w$}", w = widths[j]))
            .collect();
        format!("{}\n", padded.join(" | ").trim_end())
    };
    out.push_str(&line(header));
    let rule: Vec<String> = widths.iter().map(|w| "-".repeat(*w)).collect();
    out.push_str(&format!("{}\n", rule.join("-|-")));
    for r in &rows {
        out.push_str(&line([&r[0], &r[1], &r[2], &r[3], &r[4], &r[5]]));
    }
    for m in report.models.iter().filter(|m| m.failed()) {
        out.push_str(&format!("# {} failed: {}\n", m.name, m.error.as_deref().unwrap_or("")));
    }
    out
}

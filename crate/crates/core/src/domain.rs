//! Canonical domain types shared by every other module: the soil sample,
//! feature schemas, labeled datasets, the standardizer and the stratified
//! train/test split.

use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{FieldError, KisanError, Result};

/// Agronomic feature order used by every crop model.
pub const AGRONOMIC_FEATURES: [&str; 7] = ["N", "P", "K", "temperature", "humidity", "ph", "rainfall"];

/// Name of the market price column appended to the benchmarking schema.
pub const MARKET_PRICE: &str = "market_price";

/// The seven agronomic inputs of a field.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoilSample {
    /// Nitrogen, kg/ha.
    pub n: f64,
    /// Phosphorus, kg/ha.
    pub p: f64,
    /// Potassium, kg/ha.
    pub k: f64,
    /// Degrees Celsius.
    pub temperature: f64,
    /// Relative humidity, percent.
    pub humidity: f64,
    pub ph: f64,
    /// Millimetres.
    pub rainfall: f64,
}

impl SoilSample {
    /// Returns the sample unchanged when every bound holds, otherwise a
    /// validation error naming each violated field.
    pub fn validate(self) -> Result<Self> {
        let mut errors = Vec::new();
        for (name, value) in [("n", self.n), ("p", self.p), ("k", self.k)] {
            if !(value.is_finite() && value >= 0.0) {
                errors.push(FieldError::new(name, format!("{name} must be >= 0")));
            }
        }
        if !self.temperature.is_finite() {
            errors.push(FieldError::new("temperature", "temperature must be finite"));
        }
        if !(0.0..=100.0).contains(&self.humidity) {
            errors.push(FieldError::new("humidity", "humidity out of [0,100]"));
        }
        if !(0.0..=14.0).contains(&self.ph) {
            errors.push(FieldError::new("ph", "ph out of [0,14]"));
        }
        if !(self.rainfall.is_finite() && self.rainfall >= 0.0) {
            errors.push(FieldError::new("rainfall", "rainfall must be >= 0"));
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(KisanError::Validation(errors))
        }
    }

    /// Features in [`AGRONOMIC_FEATURES`] order.
    pub fn to_features(&self) -> Vec<f64> {
        vec![
            self.n,
            self.p,
            self.k,
            self.temperature,
            self.humidity,
            self.ph,
            self.rainfall,
        ]
    }
}

/// Convenience wrapper around [`SoilSample::validate`].
pub fn validate_soil_sample(sample: SoilSample) -> Result<SoilSample> {
    sample.validate()
}

/// Named, ordered feature layout.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Schema {
    pub id: String,
    pub features: Vec<String>,
}

impl Schema {
    pub fn new(id: impl Into<String>, features: Vec<String>) -> Self {
        Self {
            id: id.into(),
            features,
        }
    }

    /// The seven-feature agronomic schema.
    pub fn agronomic() -> Self {
        Self::new("agronomic", AGRONOMIC_FEATURES.iter().map(|s| s.to_string()).collect())
    }

    /// Agronomic features plus `market_price`.
    pub fn benchmark() -> Self {
        let mut features: Vec<String> = AGRONOMIC_FEATURES.iter().map(|s| s.to_string()).collect();
        features.push(MARKET_PRICE.to_string());
        Self::new("benchmark", features)
    }

    pub fn arity(&self) -> usize {
        self.features.len()
    }
}

/// A feature vector tied to the schema that orders it.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub schema_id: String,
    pub values: Vec<f64>,
}

impl FeatureVector {
    pub fn new(schema: &Schema, values: Vec<f64>) -> Result<Self> {
        if values.len() != schema.arity() {
            return Err(KisanError::ArityMismatch {
                expected: schema.arity(),
                got: values.len(),
            });
        }
        if let Some(j) = values.iter().position(|v| !v.is_finite()) {
            return Err(KisanError::InvalidInput(format!(
                "feature '{}' is not finite",
                schema.features[j]
            )));
        }
        Ok(Self {
            schema_id: schema.id.clone(),
            values,
        })
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Rows with class labels. Labels are indices into `class_catalog`, which
/// is sorted lexicographically.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LabeledDataset {
    pub schema: Schema,
    pub rows: Vec<Vec<f64>>,
    pub labels: Vec<usize>,
    pub class_catalog: Vec<String>,
}

impl LabeledDataset {
    /// Builds a dataset from string labels; the catalog is derived and sorted.
    pub fn from_labels<S: AsRef<str>>(schema: Schema, rows: Vec<Vec<f64>>, labels: &[S]) -> Result<Self> {
        let catalog: Vec<String> = labels
            .iter()
            .map(|l| l.as_ref().to_string())
            .collect::<std::collections::BTreeSet<_>>()
            .into_iter()
            .collect();
        let index: BTreeMap<&str, usize> = catalog.iter().enumerate().map(|(i, c)| (c.as_str(), i)).collect();
        let label_idx = labels.iter().map(|l| index[l.as_ref()]).collect();
        Self::new(schema, rows, label_idx, catalog.clone())
    }

    /// Builds a dataset from label indices against an explicit catalog.
    pub fn new(schema: Schema, rows: Vec<Vec<f64>>, labels: Vec<usize>, class_catalog: Vec<String>) -> Result<Self> {
        if rows.len() != labels.len() {
            return Err(KisanError::InvalidInput(format!(
                "{} rows but {} labels",
                rows.len(),
                labels.len()
            )));
        }
        if class_catalog.windows(2).any(|w| w[0] >= w[1]) {
            return Err(KisanError::InvalidInput(
                "class catalog must be sorted and distinct".into(),
            ));
        }
        for (i, row) in rows.iter().enumerate() {
            if row.len() != schema.arity() {
                return Err(KisanError::ArityMismatch {
                    expected: schema.arity(),
                    got: row.len(),
                });
            }
            if row.iter().any(|v| !v.is_finite()) {
                return Err(KisanError::InvalidInput(format!("row {i} has a non-finite value")));
            }
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= class_catalog.len()) {
            return Err(KisanError::InvalidInput(format!(
                "label index {bad} outside catalog of {}",
                class_catalog.len()
            )));
        }
        Ok(Self {
            schema,
            rows,
            labels,
            class_catalog,
        })
    }

    /// Keeps the columns of `schema`, looked up by name.
    pub fn project(&self, schema: Schema) -> Result<Self> {
        let pos = schema
            .features
            .iter()
            .map(|f| {
                self.schema
                    .features
                    .iter()
                    .position(|g| g == f)
                    .ok_or_else(|| KisanError::InvalidInput(format!("dataset has no feature '{f}'")))
            })
            .collect::<Result<Vec<usize>>>()?;
        let rows = self.rows.iter().map(|r| pos.iter().map(|&j| r[j]).collect()).collect();
        Self::new(schema, rows, self.labels.clone(), self.class_catalog.clone())
    }

    pub fn len(&self) -> usize {
        self.rows.len()
    }

    pub fn is_empty(&self) -> bool {
        self.rows.is_empty()
    }

    pub fn arity(&self) -> usize {
        self.schema.arity()
    }

    pub fn n_classes(&self) -> usize {
        self.class_catalog.len()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.n_classes()];
        for &l in &self.labels {
            counts[l] += 1;
        }
        counts
    }

    pub fn label_name(&self, row: usize) -> &str {
        &self.class_catalog[self.labels[row]]
    }

    /// Rows at `indices`, keeping the full class catalog.
    pub fn subset(&self, indices: &[usize]) -> Self {
        Self {
            schema: self.schema.clone(),
            rows: indices.iter().map(|&i| self.rows[i].clone()).collect(),
            labels: indices.iter().map(|&i| self.labels[i]).collect(),
            class_catalog: self.class_catalog.clone(),
        }
    }

    /// Copy with every row passed through the standardizer.
    pub fn standardized(&self, params: &StandardizerParams) -> Result<Self> {
        let rows = self
            .rows
            .iter()
            .map(|r| params.transform(r))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { rows, ..self.clone() })
    }

    /// Content fingerprint over schema, cells and labels.
    pub fn fingerprint(&self) -> DatasetFingerprint {
        let mut hasher = Sha256::new();
        hasher.update(self.schema.id.as_bytes());
        for f in &self.schema.features {
            hasher.update([0u8]);
            hasher.update(f.as_bytes());
        }
        for (row, &label) in self.rows.iter().zip(&self.labels) {
            for v in row {
                hasher.update(v.to_bits().to_le_bytes());
            }
            hasher.update([0xff]);
            hasher.update(self.class_catalog[label].as_bytes());
            hasher.update([0u8]);
        }
        DatasetFingerprint {
            rows: self.len(),
            classes: self.n_classes(),
            content_hash: hex::encode(hasher.finalize()),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DatasetFingerprint {
    pub rows: usize,
    pub classes: usize,
    pub content_hash: String,
}

/// Per-feature mean and population standard deviation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StandardizerParams {
    pub means: Vec<f64>,
    pub stdevs: Vec<f64>,
}

impl StandardizerParams {
    /// Means 0 and stdevs 1: a no-op transform.
    pub fn identity(arity: usize) -> Self {
        Self {
            means: vec![0.0; arity],
            stdevs: vec![1.0; arity],
        }
    }

    pub fn arity(&self) -> usize {
        self.means.len()
    }

    /// `(v - mean) / std`, with zero-variance columns mapped to 0.
    pub fn transform(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.arity() {
            return Err(KisanError::ArityMismatch {
                expected: self.arity(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stdevs))
            .map(|(v, (m, s))| if *s == 0.0 { 0.0 } else { (v - m) / s })
            .collect())
    }

    pub fn inverse(&self, values: &[f64]) -> Result<Vec<f64>> {
        if values.len() != self.arity() {
            return Err(KisanError::ArityMismatch {
                expected: self.arity(),
                got: values.len(),
            });
        }
        Ok(values
            .iter()
            .zip(self.means.iter().zip(&self.stdevs))
            .map(|(z, (m, s))| z * s + m)
            .collect())
    }
}

pub fn fit_standardizer(dataset: &LabeledDataset) -> Result<StandardizerParams> {
    if dataset.is_empty() {
        return Err(KisanError::Empty("cannot fit a standardizer on an empty dataset"));
    }
    let n = dataset.len() as f64;
    let arity = dataset.arity();
    let mut means = vec![0.0; arity];
    for row in &dataset.rows {
        for (m, v) in means.iter_mut().zip(row) {
            *m += v;
        }
    }
    means.iter_mut().for_each(|m| *m /= n);
    let mut vars = vec![0.0; arity];
    for row in &dataset.rows {
        for ((acc, v), m) in vars.iter_mut().zip(row).zip(&means) {
            *acc += (v - m) * (v - m);
        }
    }
    let stdevs = vars.into_iter().map(|v| (v / n).sqrt()).collect();
    Ok(StandardizerParams { means, stdevs })
}

pub fn apply_standardizer(params: &StandardizerParams, v: &FeatureVector) -> Result<FeatureVector> {
    Ok(FeatureVector {
        schema_id: v.schema_id.clone(),
        values: params.transform(&v.values)?,
    })
}

/// Stratified split. Each class contributes `round(count * test_fraction)`
/// rows to the test half; rows keep their original relative order.
pub fn stratified_split(
    dataset: &LabeledDataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(LabeledDataset, LabeledDataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(KisanError::InvalidInput(format!(
            "test_fraction {test_fraction} outside (0,1)"
        )));
    }
    let mut by_class: Vec<Vec<usize>> = vec![Vec::new(); dataset.n_classes()];
    for (i, &l) in dataset.labels.iter().enumerate() {
        by_class[l].push(i);
    }
    if let Some(c) = by_class.iter().position(|rows| rows.len() == 1) {
        return Err(KisanError::InvalidInput(format!(
            "class '{}' has a single row; stratified split needs at least 2",
            dataset.class_catalog[c]
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut test_idx = Vec::new();
    let mut train_idx = Vec::new();
    for mut rows in by_class {
        let n_test = (rows.len() as f64 * test_fraction).round() as usize;
        rows.shuffle(&mut rng);
        test_idx.extend_from_slice(&rows[..n_test]);
        train_idx.extend_from_slice(&rows[n_test..]);
    }
    train_idx.sort_unstable();
    test_idx.sort_unstable();
    Ok((dataset.subset(&train_idx), dataset.subset(&test_idx)))
}

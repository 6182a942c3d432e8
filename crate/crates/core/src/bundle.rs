//! Versioned, checksummed JSON container for every fitted model.
//!
//! File layout: `{"format_version": 1, "checksum": "<sha256 hex>",
//! "payload": {...}}`. The checksum covers the compact serialization of the
//! payload with object keys in sorted order. Reals are JSON numbers in
//! shortest round-trip form, so a load reproduces every `f64` bit for bit.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use serde_json::Value;
use sha2::{Digest, Sha256};

use crate::advisory::{advise, AdvisoryRequest, CropModel, FertilizerModel, RankedAdvisory};
use crate::domain::{DatasetFingerprint, LabeledDataset};
use crate::error::{KisanError, Result};
use crate::forecast::{fit_price_model, ForecastConfig, PriceModel, PriceSeries};
use crate::forest::{feature_importances, ForestConfig};
use crate::ingest::FertilizerRecord;

pub const FORMAT_VERSION: u64 = 1;
pub const BUNDLE_EXTENSION: &str = "kisan.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureImportance {
    pub feature: String,
    pub importance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelBundle {
    /// RFC 3339 timestamp.
    pub created_at: String,
    /// Column order expected by `crop_model`.
    pub crop_features: Vec<String>,
    pub crop_model: CropModel,
    pub crop_fingerprint: Option<DatasetFingerprint>,
    pub fertilizer_model: Option<FertilizerModel>,
    pub fertilizer_fingerprint: Option<DatasetFingerprint>,
    pub forecast_config: ForecastConfig,
    pub price_models: BTreeMap<String, PriceModel>,
    pub price_history: BTreeMap<String, PriceSeries>,
    /// Series that could not be fitted, with the reason.
    pub unfitted_series: BTreeMap<String, String>,
    pub feature_importances: Vec<FeatureImportance>,
}

impl ModelBundle {
    pub fn crop_catalog(&self) -> &[String] {
        self.crop_model.class_catalog()
    }

    pub fn advise(&self, request: &AdvisoryRequest) -> Result<RankedAdvisory> {
        advise(&self.crop_model, &self.price_models, request)
    }

    /// Checks that every model agrees with the catalogs and schemas it
    /// is stored next to.
    pub fn validate(&self) -> Result<()> {
        let arity = self.crop_features.len();
        let forest = &self.crop_model.forest;
        if forest.feature_arity != arity || self.crop_model.standardizer.arity() != arity {
            return Err(KisanError::Data(format!(
                "bundle: crop model arity {} / standardizer arity {} disagree with {arity} features",
                forest.feature_arity,
                self.crop_model.standardizer.arity()
            )));
        }
        if forest.trees.is_empty() || forest.class_catalog.is_empty() {
            return Err(KisanError::Data("bundle: crop model is empty".into()));
        }
        if self.feature_importances.len() != arity
            || self
                .feature_importances
                .iter()
                .zip(&self.crop_features)
                .any(|(fi, f)| &fi.feature != f)
        {
            return Err(KisanError::Data(
                "bundle: feature importances do not match crop features".into(),
            ));
        }
        for (crop, model) in &self.price_models {
            if &model.crop_id != crop {
                return Err(KisanError::Data(format!(
                    "bundle: price model under '{crop}' belongs to '{}'",
                    model.crop_id
                )));
            }
        }
        for (crop, series) in &self.price_history {
            if &series.crop_id != crop {
                return Err(KisanError::Data(format!(
                    "bundle: price history under '{crop}' belongs to '{}'",
                    series.crop_id
                )));
            }
        }
        if let Some(f) = &self.fertilizer_model {
            if f.encoder.schema().arity() != f.forest.feature_arity {
                return Err(KisanError::Data(
                    "bundle: fertilizer encoder and forest disagree".into(),
                ));
            }
        }
        Ok(())
    }
}

/// Inputs to [`train_bundle`].
pub struct TrainingInputs<'a> {
    pub crops: &'a LabeledDataset,
    pub fertilizer: Option<&'a [FertilizerRecord]>,
    pub market: &'a BTreeMap<String, PriceSeries>,
    pub crop_forest: ForestConfig,
    pub fertilizer_forest: ForestConfig,
    pub forecast: ForecastConfig,
    pub created_at: String,
}

/// Fits the crop forest, the optional fertilizer forest and one price model
/// per market series. Series too short to fit are listed, not fatal.
pub fn train_bundle(inputs: TrainingInputs<'_>) -> Result<ModelBundle> {
    let crop_model = CropModel::fit(inputs.crops, &inputs.crop_forest)?;
    let importances = feature_importances(&crop_model.forest);
    let (fertilizer_model, fertilizer_fingerprint) = match inputs.fertilizer {
        Some(records) => {
            let model = FertilizerModel::fit(records, &inputs.fertilizer_forest)?;
            let (ds, _) = crate::ingest::encode_fertilizer(records)?;
            (Some(model), Some(ds.fingerprint()))
        }
        None => (None, None),
    };
    let mut price_models = BTreeMap::new();
    let mut unfitted_series = BTreeMap::new();
    for (crop, series) in inputs.market {
        match fit_price_model(series, &inputs.forecast) {
            Ok(m) => {
                price_models.insert(crop.clone(), m);
            }
            Err(e) => {
                unfitted_series.insert(crop.clone(), e.to_string());
            }
        }
    }
    let bundle = ModelBundle {
        created_at: inputs.created_at,
        crop_features: inputs.crops.schema.features.clone(),
        feature_importances: inputs
            .crops
            .schema
            .features
            .iter()
            .zip(importances)
            .map(|(feature, importance)| FeatureImportance {
                feature: feature.clone(),
                importance,
            })
            .collect(),
        crop_model,
        crop_fingerprint: Some(inputs.crops.fingerprint()),
        fertilizer_model,
        fertilizer_fingerprint,
        forecast_config: inputs.forecast,
        price_models,
        price_history: inputs.market.clone(),
        unfitted_series,
    };
    bundle.validate()?;
    Ok(bundle)
}

fn checksum(payload: &Value) -> Result<String> {
    let canonical = serde_json::to_string(payload)?;
    Ok(hex::encode(Sha256::digest(canonical.as_bytes())))
}

/// Serializes a bundle to its on-disk JSON form.
pub fn bundle_to_json(bundle: &ModelBundle) -> Result<String> {
    bundle.validate()?;
    let payload = serde_json::to_value(bundle)?;
    let doc = serde_json::json!({
        "format_version": FORMAT_VERSION,
        "checksum": checksum(&payload)?,
        "payload": payload,
    });
    Ok(serde_json::to_string_pretty(&doc)?)
}

/// Parses the on-disk form: version first, then checksum, then payload.
pub fn bundle_from_json(text: &str) -> Result<ModelBundle> {
    let mut doc: Value = serde_json::from_str(text)?;
    let version = doc
        .get("format_version")
        .and_then(Value::as_u64)
        .ok_or_else(|| KisanError::Data("bundle: missing format_version".into()))?;
    if version != FORMAT_VERSION {
        return Err(KisanError::UnsupportedVersion(version));
    }
    let expected = doc
        .get("checksum")
        .and_then(Value::as_str)
        .ok_or_else(|| KisanError::Data("bundle: missing checksum".into()))?
        .to_string();
    let payload = doc
        .get_mut("payload")
        .map(Value::take)
        .ok_or_else(|| KisanError::Data("bundle: missing payload".into()))?;
    let computed = checksum(&payload)?;
    if computed != expected {
        return Err(KisanError::ChecksumMismatch { expected, computed });
    }
    let bundle: ModelBundle = serde_json::from_value(payload)?;
    bundle.validate()?;
    Ok(bundle)
}

/// Writes through a sibling temporary file so readers never observe a
/// partial bundle.
pub fn save_bundle(bundle: &ModelBundle, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let text = bundle_to_json(bundle)?;
    let mut tmp = path.as_os_str().to_owned();
    tmp.push(".tmp");
    std::fs::write(&tmp, text).map_err(|e| KisanError::io(&tmp, e))?;
    std::fs::rename(&tmp, path).map_err(|e| KisanError::io(path, e))
}

pub fn load_bundle(path: impl AsRef<Path>) -> Result<ModelBundle> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| KisanError::io(path, e))?;
    bundle_from_json(&text)
}

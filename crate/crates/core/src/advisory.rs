//! Profit-aware ranking and fertilizer advice.
//!
//! A crop's score is `w1 * p_yield + w2 * g_price`, where `p_yield` is the
//! classifier's suitability for the field and `g_price` the min-max
//! normalized price forecast across the candidate crops.

use std::cmp::Ordering;
use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::domain::{fit_standardizer, LabeledDataset, SoilSample, StandardizerParams};
use crate::error::{FieldError, KisanError, Result};
use crate::forecast::{forecast_horizon, price_scores, PriceModel};
use crate::forest::{fit_random_forest, ForestConfig, RandomForestModel};
use crate::ingest::{encode_fertilizer, FertilizerEncoder, FertilizerQuery, FertilizerRecord};

/// Tolerance on `w1 + w2 = 1`.
pub const WEIGHT_SUM_TOLERANCE: f64 = 1e-9;
/// Price score given to crops without market history.
pub const NEUTRAL_PRICE_SCORE: f64 = 0.5;
/// Forecast months ahead used for the price score.
pub const DEFAULT_HORIZON_MONTHS: u32 = 6;
/// Floor on forecast prices before normalization.
pub const FORECAST_PRICE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ScoreWeights {
    pub w1: f64,
    pub w2: f64,
}

impl Default for ScoreWeights {
    fn default() -> Self {
        Self { w1: 0.6, w2: 0.4 }
    }
}

impl ScoreWeights {
    pub fn new(w1: f64, w2: f64) -> Result<Self> {
        Self { w1, w2 }.validate()
    }

    pub fn validate(self) -> Result<Self> {
        let mut errors = Vec::new();
        for (name, w) in [("w1", self.w1), ("w2", self.w2)] {
            if !(w.is_finite() && w >= 0.0) {
                errors.push(FieldError::new(name, format!("{name} must be >= 0")));
            }
        }
        if errors.is_empty() && (self.w1 + self.w2 - 1.0).abs() > WEIGHT_SUM_TOLERANCE {
            errors.push(FieldError::new("weights", "w1 + w2 must equal 1"));
        }
        if errors.is_empty() {
            Ok(self)
        } else {
            Err(KisanError::Validation(errors))
        }
    }
}

fn unit_interval(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(KisanError::Validation(vec![FieldError::new(
            name,
            format!("{name} out of [0,1]"),
        )]))
    }
}

/// `w1 * p_yield + w2 * g_price`; both operands must lie in [0, 1].
pub fn composite_score(p_yield: f64, g_price: f64, weights: ScoreWeights) -> Result<f64> {
    let weights = weights.validate()?;
    unit_interval("p_yield", p_yield)?;
    unit_interval("g_price", g_price)?;
    Ok(weights.w1 * p_yield + weights.w2 * g_price)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropRecommendation {
    pub crop_id: String,
    pub p_yield: f64,
    pub g_price: f64,
    pub score: f64,
    /// Forecast price behind `g_price`; absent without market history.
    pub forecast_price: Option<f64>,
    /// Set when `g_price` is the neutral score for lack of market history.
    pub no_market_data: bool,
}

/// Descending score, then descending `p_yield`, then crop name.
fn ranking_order(a: &CropRecommendation, b: &CropRecommendation) -> Ordering {
    b.score
        .total_cmp(&a.score)
        .then(b.p_yield.total_cmp(&a.p_yield))
        .then_with(|| a.crop_id.cmp(&b.crop_id))
}

/// Scores and ranks every crop in `catalog`. `suitability[i]` is crop i's
/// agronomic suitability in [0, 1]; a posterior satisfies this, but the
/// values need not sum to 1. Crops absent from `g_scores` get the neutral
/// price score and are flagged.
pub fn rank_crops(
    catalog: &[String],
    suitability: &[f64],
    g_scores: &BTreeMap<String, f64>,
    weights: ScoreWeights,
) -> Result<Vec<CropRecommendation>> {
    if catalog.is_empty() {
        return Err(KisanError::Empty("crop catalog"));
    }
    if catalog.len() != suitability.len() {
        return Err(KisanError::ArityMismatch {
            expected: catalog.len(),
            got: suitability.len(),
        });
    }
    let mut recs = catalog
        .iter()
        .zip(suitability)
        .map(|(crop, &p_yield)| {
            let (g_price, no_market_data) = match g_scores.get(crop) {
                Some(&g) => (g, false),
                None => (NEUTRAL_PRICE_SCORE, true),
            };
            Ok(CropRecommendation {
                crop_id: crop.clone(),
                p_yield,
                g_price,
                score: composite_score(p_yield, g_price, weights)?,
                forecast_price: None,
                no_market_data,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    recs.sort_by(ranking_order);
    Ok(recs)
}

/// Standardizer plus forest over the agronomic schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CropModel {
    pub standardizer: StandardizerParams,
    pub forest: RandomForestModel,
}

impl CropModel {
    /// Fits the standardizer and the forest on `train`.
    pub fn fit(train: &LabeledDataset, config: &ForestConfig) -> Result<Self> {
        let standardizer = fit_standardizer(train)?;
        let forest = fit_random_forest(&train.standardized(&standardizer)?, config)?;
        Ok(Self { standardizer, forest })
    }

    pub fn class_catalog(&self) -> &[String] {
        &self.forest.class_catalog
    }

    /// Posterior over the catalog for raw (unstandardized) features.
    pub fn posterior(&self, features: &[f64]) -> Result<Vec<f64>> {
        self.forest.predict_proba(&self.standardizer.transform(features)?)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdvisoryRequest {
    pub sample: SoilSample,
    pub weights: ScoreWeights,
    pub horizon_months: u32,
}

impl AdvisoryRequest {
    pub fn new(sample: SoilSample) -> Self {
        Self {
            sample,
            weights: ScoreWeights::default(),
            horizon_months: DEFAULT_HORIZON_MONTHS,
        }
    }
}

/// Ranked crops together with the request that produced them.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RankedAdvisory {
    pub request: AdvisoryRequest,
    pub recommendations: Vec<CropRecommendation>,
}

/// Forecast price `horizon_months` after the last observation of every crop
/// that has a price model, floored at [`FORECAST_PRICE_FLOOR`].
pub fn forecast_prices(
    price_models: &BTreeMap<String, PriceModel>,
    horizon_months: u32,
) -> Result<BTreeMap<String, f64>> {
    price_models
        .iter()
        .map(|(crop, model)| {
            let fc = forecast_horizon(model, horizon_months as i64)?;
            let yhat = fc.last().map_or(FORECAST_PRICE_FLOOR, |p| p.yhat);
            Ok((crop.clone(), yhat.max(FORECAST_PRICE_FLOOR)))
        })
        .collect()
}

/// Full pipeline: validate, classify, forecast, normalize, rank. Only
/// crops in the classifier's catalog are normalized against each other.
pub fn advise(
    crop_model: &CropModel,
    price_models: &BTreeMap<String, PriceModel>,
    request: &AdvisoryRequest,
) -> Result<RankedAdvisory> {
    let sample = request.sample.validate()?;
    let weights = request.weights.validate()?;
    if request.horizon_months == 0 {
        return Err(KisanError::Validation(vec![FieldError::new(
            "horizon_months",
            "horizon_months must be >= 1",
        )]));
    }
    let catalog = crop_model.class_catalog();
    let posterior = crop_model.posterior(&sample.to_features())?;
    let mut prices = forecast_prices(price_models, request.horizon_months)?;
    prices.retain(|crop, _| catalog.binary_search(crop).is_ok());
    let g = if prices.is_empty() {
        BTreeMap::new()
    } else {
        price_scores(&prices)?
    };
    let mut recommendations = rank_crops(catalog, &posterior, &g, weights)?;
    for rec in &mut recommendations {
        rec.forecast_price = prices.get(&rec.crop_id).copied();
    }
    Ok(RankedAdvisory {
        request: AdvisoryRequest {
            sample,
            weights,
            horizon_months: request.horizon_months,
        },
        recommendations,
    })
}

/// Forest over the one-hot encoded fertilizer schema.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilizerModel {
    pub encoder: FertilizerEncoder,
    pub forest: RandomForestModel,
}

impl FertilizerModel {
    /// Default forest settings with 100 trees.
    pub fn default_config() -> ForestConfig {
        ForestConfig {
            n_trees: 100,
            ..ForestConfig::default()
        }
    }

    pub fn fit(records: &[FertilizerRecord], config: &ForestConfig) -> Result<Self> {
        let (dataset, encoder) = encode_fertilizer(records)?;
        Ok(Self {
            encoder,
            forest: fit_random_forest(&dataset, config)?,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassProbability {
    pub class: String,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FertilizerAdvice {
    pub fertilizer_type: String,
    /// In catalog order.
    pub posterior: Vec<ClassProbability>,
}

pub fn recommend_fertilizer(model: &FertilizerModel, query: &FertilizerQuery) -> Result<FertilizerAdvice> {
    let x = model.encoder.encode(query)?;
    let posterior = model.forest.predict_proba(&x)?;
    let best = crate::classifier::argmax(&posterior);
    Ok(FertilizerAdvice {
        fertilizer_type: model.forest.class_catalog[best].clone(),
        posterior: model
            .forest
            .class_catalog
            .iter()
            .zip(posterior)
            .map(|(class, probability)| ClassProbability {
                class: class.clone(),
                probability,
            })
            .collect(),
    })
}

//! Small hand-built bundles with known answers, shared by the service and
//! CLI test suites.

use std::collections::BTreeMap;

use crate::advisory::{CropModel, FertilizerModel};
use crate::bundle::{FeatureImportance, ModelBundle};
use crate::domain::{Schema, SoilSample, StandardizerParams};
use crate::forecast::{calendar_month, fit_price_model, month_index, ForecastConfig, PricePoint, PriceSeries};
use crate::forest::{ForestConfig, RandomForestModel};
use crate::synth::synth_fertilizer_records;
use crate::tree::{FeaturesPerSplit, TreeNode};

/// Monthly prices of the three fixture crops, constant over two years.
pub const COMPARISON_PRICES: [(&str, f64); 3] = [("Crop A", 200.0), ("Crop B", 180.0), ("Crop C", 100.0)];

/// Suitability the fixture forest assigns to every sample.
pub const COMPARISON_POSTERIOR: [f64; 3] = [0.15, 0.85, 0.0];

fn constant_series(crop: &str, price: f64) -> PriceSeries {
    let start = month_index(2023, 1);
    let points = (0..24)
        .map(|i| {
            let (year, month) = calendar_month(start + i);
            PricePoint { year, month, price }
        })
        .collect();
    PriceSeries::new(crop, points).expect("fixture series is valid")
}

/// A bundle whose forest is a single leaf with counts `[15, 85, 0]` over
/// `Crop A, Crop B, Crop C` and whose price forecasts are the constants in
/// [`COMPARISON_PRICES`]. Default weights rank Crop B first at 0.830
/// (`0.6 * 0.85 + 0.4 * 0.8`).
pub fn comparison_bundle() -> ModelBundle {
    let schema = Schema::agronomic();
    let catalog: Vec<String> = COMPARISON_PRICES.iter().map(|(c, _)| c.to_string()).collect();
    let forest = RandomForestModel {
        trees: vec![TreeNode::Leaf {
            class_counts: vec![15, 85, 0],
        }],
        class_catalog: catalog,
        feature_arity: schema.arity(),
        oob_masks: Vec::new(),
        config: ForestConfig {
            n_trees: 1,
            bootstrap: false,
            features_per_split: FeaturesPerSplit::All,
            ..ForestConfig::default()
        },
    };
    let forecast_config = ForecastConfig::default();
    let price_history: BTreeMap<String, PriceSeries> = COMPARISON_PRICES
        .iter()
        .map(|(c, p)| (c.to_string(), constant_series(c, *p)))
        .collect();
    let price_models = price_history
        .iter()
        .map(|(c, s)| (c.clone(), fit_price_model(s, &forecast_config).expect("fixture fit")))
        .collect();
    let fertilizer = FertilizerModel::fit(
        &synth_fertilizer_records(7, 140),
        &ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        },
    )
    .expect("fixture fertilizer fit");
    let arity = schema.arity();
    ModelBundle {
        created_at: "2024-12-31T00:00:00Z".into(),
        feature_importances: schema
            .features
            .iter()
            .map(|f| FeatureImportance {
                feature: f.clone(),
                importance: 1.0 / arity as f64,
            })
            .collect(),
        crop_features: schema.features,
        crop_model: CropModel {
            standardizer: StandardizerParams::identity(arity),
            forest,
        },
        crop_fingerprint: None,
        fertilizer_model: Some(fertilizer),
        fertilizer_fingerprint: None,
        forecast_config,
        price_models,
        price_history,
        unfitted_series: BTreeMap::new(),
    }
}

/// A valid field sample; the fixture forest ignores its values.
pub fn comparison_sample() -> SoilSample {
    SoilSample {
        n: 90.0,
        p: 42.0,
        k: 43.0,
        temperature: 20.9,
        humidity: 82.0,
        ph: 6.5,
        rainfall: 202.9,
    }
}

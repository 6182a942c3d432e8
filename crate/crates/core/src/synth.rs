//! Seeded generators for price series and replica corpora.
//!
//! The replicas share the column layout of the public crop, fertilizer and
//! market corpora so every loader and pipeline runs without downloads.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::domain::{LabeledDataset, Schema};
use crate::error::{KisanError, Result};
use crate::forecast::{calendar_month, month_index, PricePoint, PriceSeries};
use crate::ingest::FertilizerRecord;

/// Floor applied to generated prices.
pub const PRICE_FLOOR: f64 = 0.01;

#[derive(Debug, Clone, PartialEq)]
pub struct SynthConfig {
    pub crop_id: String,
    pub base: f64,
    /// Price change per month.
    pub slope: f64,
    pub amplitude: f64,
    pub noise_sigma: f64,
    pub n_months: usize,
    pub start_year: i32,
    pub start_month: u32,
}

impl Default for SynthConfig {
    fn default() -> Self {
        Self {
            crop_id: "synthetic".into(),
            base: 100.0,
            slope: 0.0,
            amplitude: 0.0,
            noise_sigma: 0.0,
            n_months: 36,
            start_year: 2020,
            start_month: 1,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SyntheticSeries {
    pub series: PriceSeries,
    /// Indices of points raised to [`PRICE_FLOOR`].
    pub clamped: Vec<usize>,
}

/// `price(t) = base + slope*t + amplitude*sin(2 pi month / 12) + N(0, sigma)`
/// for `t = 0..n_months`.
pub fn synth_market_series(seed: u64, config: &SynthConfig) -> Result<SyntheticSeries> {
    if config.n_months == 0 {
        return Err(KisanError::InvalidInput("n_months must be >= 1".into()));
    }
    if !(1..=12).contains(&config.start_month) {
        return Err(KisanError::InvalidInput(format!(
            "start_month {} outside 1-12",
            config.start_month
        )));
    }
    let noise =
        Normal::new(0.0, config.noise_sigma).map_err(|e| KisanError::InvalidInput(format!("noise_sigma: {e}")))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let origin = month_index(config.start_year, config.start_month);
    let mut clamped = Vec::new();
    let points = (0..config.n_months)
        .map(|t| {
            let (year, month) = calendar_month(origin + t as i64);
            let seasonal = config.amplitude * (2.0 * std::f64::consts::PI * month as f64 / 12.0).sin();
            let mut price = config.base + config.slope * t as f64 + seasonal + noise.sample(&mut rng);
            if price <= 0.0 || !price.is_finite() {
                price = PRICE_FLOOR;
                clamped.push(t);
            }
            PricePoint { year, month, price }
        })
        .collect();
    Ok(SyntheticSeries {
        series: PriceSeries::new(config.crop_id.clone(), points)?,
        clamped,
    })
}

/// Per-crop centers of N, P, K, temperature, humidity, ph, rainfall and a
/// typical market price per quintal.
const CROP_PROFILES: [(&str, [f64; 7], f64); 22] = [
    ("apple", [20.8, 134.2, 199.9, 22.6, 92.3, 5.9, 112.7], 8000.0),
    ("banana", [100.2, 82.0, 50.0, 27.4, 80.4, 6.0, 104.6], 1500.0),
    ("blackgram", [40.0, 67.5, 19.2, 30.0, 65.1, 7.1, 67.9], 6800.0),
    ("chickpea", [40.1, 67.8, 79.9, 18.9, 16.9, 7.3, 80.1], 5000.0),
    ("coconut", [22.0, 16.9, 30.6, 27.4, 94.8, 6.0, 175.7], 2700.0),
    ("coffee", [101.2, 28.7, 29.9, 25.5, 58.9, 6.8, 158.1], 16000.0),
    ("cotton", [117.8, 46.2, 19.6, 24.0, 79.8, 6.9, 80.4], 6600.0),
    ("grapes", [23.2, 132.5, 200.1, 23.8, 81.9, 6.0, 69.6], 5500.0),
    ("jute", [78.4, 46.9, 40.0, 24.9, 79.6, 6.7, 174.8], 4800.0),
    ("kidneybeans", [20.8, 67.5, 20.0, 20.1, 21.6, 5.7, 105.9], 7000.0),
    ("lentil", [18.8, 68.4, 19.4, 24.5, 64.8, 6.9, 45.7], 6000.0),
    ("maize", [77.8, 48.4, 19.8, 22.4, 65.1, 6.2, 84.8], 1900.0),
    ("mango", [20.1, 27.2, 30.0, 31.2, 50.2, 5.8, 94.7], 4000.0),
    ("mothbeans", [21.4, 48.0, 20.2, 28.2, 53.2, 6.8, 51.2], 6000.0),
    ("mungbean", [21.0, 47.3, 19.9, 28.5, 85.5, 6.7, 48.4], 7500.0),
    ("muskmelon", [100.3, 17.7, 50.1, 28.7, 92.3, 6.4, 24.7], 1600.0),
    ("orange", [19.6, 16.6, 10.0, 22.8, 92.2, 7.0, 110.5], 3500.0),
    ("papaya", [49.9, 59.0, 50.0, 33.7, 92.4, 6.7, 142.6], 1800.0),
    ("pigeonpeas", [20.7, 67.8, 20.3, 27.7, 48.1, 5.8, 149.5], 6500.0),
    ("pomegranate", [18.9, 18.8, 40.2, 21.8, 90.1, 6.4, 107.5], 9000.0),
    ("rice", [79.9, 47.6, 39.9, 23.7, 82.3, 6.4, 236.2], 2000.0),
    ("watermelon", [99.4, 17.0, 50.2, 25.6, 85.2, 6.5, 50.8], 1200.0),
];

/// Half-widths of the uniform ranges around each profile center.
const HALF_WIDTHS: [f64; 6] = [20.0, 12.0, 5.0, 3.0, 5.0, 0.7];

/// Relative half-width of the rainfall and market price ranges.
const RAINFALL_SPREAD: f64 = 0.2;
const PRICE_SPREAD: f64 = 0.15;

pub fn crop_catalog() -> Vec<String> {
    CROP_PROFILES.iter().map(|(c, _, _)| c.to_string()).collect()
}

/// Typical price per quintal of a replica crop.
pub fn reference_price(crop: &str) -> Option<f64> {
    CROP_PROFILES.iter().find(|(c, _, _)| *c == crop).map(|(_, _, p)| *p)
}

/// Replica of the crop corpus: 22 crops with `rows_per_crop` rows each, on
/// the benchmark schema when `with_price`, else the agronomic schema.
pub fn synth_crop_dataset(seed: u64, rows_per_crop: usize, with_price: bool) -> Result<LabeledDataset> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut rows = Vec::with_capacity(22 * rows_per_crop);
    let mut labels = Vec::with_capacity(22 * rows_per_crop);
    for (crop, center, price) in CROP_PROFILES {
        for _ in 0..rows_per_crop {
            let mut row: Vec<f64> = (0..6)
                .map(|j| {
                    let v = rng.random_range(center[j] - HALF_WIDTHS[j]..center[j] + HALF_WIDTHS[j]);
                    v.max(0.0)
                })
                .collect();
            row[4] = row[4].min(100.0);
            let rain = center[6];
            row.push(rng.random_range(rain * (1.0 - RAINFALL_SPREAD)..rain * (1.0 + RAINFALL_SPREAD)));
            if with_price {
                row.push(rng.random_range(price * (1.0 - PRICE_SPREAD)..price * (1.0 + PRICE_SPREAD)));
            }
            rows.push(row);
            labels.push(crop);
        }
    }
    let schema = if with_price {
        Schema::benchmark()
    } else {
        Schema::agronomic()
    };
    LabeledDataset::from_labels(schema, rows, &labels)
}

pub const FERTILIZER_TYPES: [&str; 7] = ["10-26-26", "14-35-14", "17-17-17", "20-20", "28-28", "DAP", "Urea"];
pub const SOIL_TYPES: [&str; 5] = ["Black", "Clayey", "Loamy", "Red", "Sandy"];

/// Replica of the fertilizer corpus. Each type has its own N, P, K band;
/// soil, moisture and temperature carry no label signal.
pub fn synth_fertilizer_records(seed: u64, n_rows: usize) -> Vec<FertilizerRecord> {
    const NPK: [[f64; 3]; 7] = [
        [8.0, 0.0, 16.0],
        [10.0, 28.0, 8.0],
        [14.0, 14.0, 14.0],
        [20.0, 20.0, 0.0],
        [30.0, 30.0, 0.0],
        [12.0, 40.0, 0.0],
        [40.0, 0.0, 0.0],
    ];
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n_rows)
        .map(|i| {
            let t = i % FERTILIZER_TYPES.len();
            let c = NPK[t];
            FertilizerRecord {
                n: (c[0] + rng.random_range(-4.0..4.0_f64)).max(0.0).round(),
                p: (c[1] + rng.random_range(-4.0..4.0_f64)).max(0.0).round(),
                k: (c[2] + rng.random_range(-4.0..4.0_f64)).max(0.0).round(),
                soil_type: SOIL_TYPES[rng.random_range(0..SOIL_TYPES.len())].to_string(),
                moisture: rng.random_range(25.0..65.0_f64).round(),
                temperature: rng.random_range(25.0..38.0_f64).round(),
                label: FERTILIZER_TYPES[t].to_string(),
            }
        })
        .collect()
}

/// Crops covered by the market replica.
pub const MARKET_CROPS: [&str; 11] = [
    "blackgram",
    "chickpea",
    "coffee",
    "cotton",
    "jute",
    "lentil",
    "maize",
    "mungbean",
    "pigeonpeas",
    "rice",
    "wheat",
];

/// Replica of the market corpus: 11 monthly series totalling 3,100 points,
/// starting January 2000.
pub fn synth_market_corpus(seed: u64) -> Result<Vec<PriceSeries>> {
    MARKET_CROPS
        .iter()
        .enumerate()
        .map(|(i, crop)| {
            let base = reference_price(crop).unwrap_or(2100.0);
            let config = SynthConfig {
                crop_id: crop.to_string(),
                base,
                slope: base * 0.002,
                amplitude: base * 0.05,
                noise_sigma: base * 0.01,
                n_months: if i == 0 { 280 } else { 282 },
                start_year: 2000,
                start_month: 1,
            };
            Ok(synth_market_series(seed.wrapping_add(i as u64), &config)?.series)
        })
        .collect()
}

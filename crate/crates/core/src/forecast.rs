//! Additive monthly price model `y(t) = g(t) + s(t) + e(t)`.
//!
//! `g` is a piecewise-linear trend (hinge basis at fixed changepoints) and
//! `s` a Fourier series on the calendar month with a yearly period. All
//! coefficients come from one penalized least-squares solve: trend columns
//! are unpenalized, seasonal columns carry a ridge penalty.

use std::collections::BTreeMap;
use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use crate::error::{KisanError, Result};

/// Fewest points any fit accepts.
pub const MIN_POINTS: usize = 8;
/// Fewest points for which seasonality is fitted.
pub const SEASONAL_MIN_POINTS: usize = 24;
/// Highest Fourier order representable on monthly samples.
pub const MAX_FOURIER_ORDER: usize = 6;
/// Half-width of the prediction interval in residual standard deviations.
pub const INTERVAL_Z: f64 = 1.96;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PricePoint {
    pub year: i32,
    pub month: u32,
    pub price: f64,
}

/// Monthly prices of one crop in strictly increasing calendar order.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceSeries {
    pub crop_id: String,
    pub points: Vec<PricePoint>,
}

impl PriceSeries {
    pub fn new(crop_id: impl Into<String>, points: Vec<PricePoint>) -> Result<Self> {
        let crop_id = crop_id.into();
        for (i, p) in points.iter().enumerate() {
            if !(1..=12).contains(&p.month) {
                return Err(KisanError::InvalidInput(format!(
                    "{crop_id}: point {i} has month {} outside 1-12",
                    p.month
                )));
            }
            if !(p.price.is_finite() && p.price > 0.0) {
                return Err(KisanError::InvalidInput(format!(
                    "{crop_id}: point {i} has non-positive price {}",
                    p.price
                )));
            }
        }
        if let Some(w) = points
            .windows(2)
            .find(|w| month_index(w[0].year, w[0].month) >= month_index(w[1].year, w[1].month))
        {
            return Err(KisanError::InvalidInput(format!(
                "{crop_id}: points not strictly increasing at {}-{:02}",
                w[1].year, w[1].month
            )));
        }
        Ok(Self { crop_id, points })
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    fn prefix(&self, n: usize) -> Self {
        Self {
            crop_id: self.crop_id.clone(),
            points: self.points[..n].to_vec(),
        }
    }
}

/// Months since year 0.
pub fn month_index(year: i32, month: u32) -> i64 {
    year as i64 * 12 + month as i64 - 1
}

/// Inverse of [`month_index`].
pub fn calendar_month(index: i64) -> (i32, u32) {
    (index.div_euclid(12) as i32, index.rem_euclid(12) as u32 + 1)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ForecastConfig {
    pub n_changepoints: usize,
    pub fourier_order: usize,
    pub ridge_lambda: f64,
}

impl Default for ForecastConfig {
    fn default() -> Self {
        Self {
            n_changepoints: 4,
            fourier_order: 3,
            ridge_lambda: 0.1,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trend {
    pub intercept: f64,
    /// Slope per unit of normalized time.
    pub slope: f64,
    /// Normalized times strictly inside (0, 1).
    pub changepoints: Vec<f64>,
    pub deltas: Vec<f64>,
}

impl Trend {
    pub fn eval(&self, t: f64) -> f64 {
        self.intercept
            + self.slope * t
            + self
                .changepoints
                .iter()
                .zip(&self.deltas)
                .map(|(c, d)| d * (t - c).max(0.0))
                .sum::<f64>()
    }

    /// Slope after the last changepoint.
    pub fn final_slope(&self) -> f64 {
        self.slope + self.deltas.iter().sum::<f64>()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Seasonality {
    pub order: usize,
    /// `(a_k, b_k)` multiplying `cos(2 pi k m / 12)` and `sin(2 pi k m / 12)`.
    pub coefficients: Vec<(f64, f64)>,
}

impl Seasonality {
    pub fn eval(&self, month: u32) -> f64 {
        self.coefficients
            .iter()
            .enumerate()
            .map(|(i, (a, b))| {
                let angle = 2.0 * PI * (i + 1) as f64 * month as f64 / 12.0;
                a * angle.cos() + b * angle.sin()
            })
            .sum()
    }

    pub fn l2_norm(&self) -> f64 {
        self.coefficients.iter().map(|(a, b)| a * a + b * b).sum::<f64>().sqrt()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceModel {
    pub crop_id: String,
    /// Month index mapped to t = 0.
    pub t0: i64,
    /// Month index mapped to t = 1.
    pub t1: i64,
    pub trend: Trend,
    pub seasonality: Seasonality,
    pub ridge_lambda: f64,
    /// Population standard deviation of in-sample residuals.
    pub residual_sigma: f64,
    pub n_points: usize,
}

impl PriceModel {
    pub fn time(&self, year: i32, month: u32) -> f64 {
        (month_index(year, month) - self.t0) as f64 / (self.t1 - self.t0) as f64
    }

    /// Trend and seasonal components at a calendar month.
    pub fn decompose(&self, year: i32, month: u32) -> (f64, f64) {
        (self.trend.eval(self.time(year, month)), self.seasonality.eval(month))
    }

    pub fn predict(&self, year: i32, month: u32) -> f64 {
        let (g, s) = self.decompose(year, month);
        g + s
    }

    /// Initial trend slope in price units per month.
    pub fn slope_per_month(&self) -> f64 {
        self.trend.slope / (self.t1 - self.t0) as f64
    }

    /// Last observed calendar month.
    pub fn last_observed(&self) -> (i32, u32) {
        calendar_month(self.t1)
    }
}

/// Trend-then-seasonal design row.
fn design_row(t: f64, month: u32, changepoints: &[f64], order: usize) -> Vec<f64> {
    let mut row = Vec::with_capacity(2 + changepoints.len() + 2 * order);
    row.push(1.0);
    row.push(t);
    row.extend(changepoints.iter().map(|c| (t - c).max(0.0)));
    for k in 1..=order {
        let angle = 2.0 * PI * k as f64 * month as f64 / 12.0;
        row.push(angle.cos());
        row.push(angle.sin());
    }
    row
}

/// Share of the history, from its start, that may hold changepoints. The
/// last stretch has too few points to pin a slope change, and its slope is
/// what gets extrapolated.
const CHANGEPOINT_RANGE: f64 = 0.8;

/// Equally spaced quantiles of the first [`CHANGEPOINT_RANGE`] of the
/// observed times, deduplicated and kept strictly inside (0, 1).
fn place_changepoints(times: &[f64], count: usize) -> Vec<f64> {
    let last = times.len() - 1;
    let mut cps: Vec<f64> = Vec::with_capacity(count);
    for j in 1..=count {
        let pos = j as f64 / (count + 1) as f64 * CHANGEPOINT_RANGE * last as f64;
        let lo = pos.floor() as usize;
        let hi = (lo + 1).min(last);
        let c = times[lo] + (pos - lo as f64) * (times[hi] - times[lo]);
        if c > 0.0 && c < 1.0 && cps.last().is_none_or(|&prev| c > prev) {
            cps.push(c);
        }
    }
    cps
}

pub fn fit_price_model(series: &PriceSeries, config: &ForecastConfig) -> Result<PriceModel> {
    let n = series.len();
    if n < MIN_POINTS {
        return Err(KisanError::InsufficientHistory(format!(
            "{} has {n} points, need at least {MIN_POINTS}",
            series.crop_id
        )));
    }
    if config.fourier_order > MAX_FOURIER_ORDER {
        return Err(KisanError::InvalidInput(format!(
            "fourier_order {} above {MAX_FOURIER_ORDER}",
            config.fourier_order
        )));
    }
    if !(config.ridge_lambda >= 0.0 && config.ridge_lambda.is_finite()) {
        return Err(KisanError::InvalidInput("ridge_lambda must be >= 0".into()));
    }
    let order = if n < SEASONAL_MIN_POINTS {
        0
    } else {
        config.fourier_order
    };
    let first = &series.points[0];
    let last = &series.points[n - 1];
    let t0 = month_index(first.year, first.month);
    let t1 = month_index(last.year, last.month);
    let span = (t1 - t0) as f64;
    let times: Vec<f64> = series
        .points
        .iter()
        .map(|p| (month_index(p.year, p.month) - t0) as f64 / span)
        .collect();
    let changepoints = place_changepoints(&times, config.n_changepoints);
    let n_trend = 2 + changepoints.len();
    let p = n_trend + 2 * order;

    let mut xtx = DMatrix::<f64>::zeros(p, p);
    let mut xty = DVector::<f64>::zeros(p);
    let rows: Vec<Vec<f64>> = series
        .points
        .iter()
        .zip(&times)
        .map(|(pt, &t)| design_row(t, pt.month, &changepoints, order))
        .collect();
    for (row, pt) in rows.iter().zip(&series.points) {
        for i in 0..p {
            xty[i] += row[i] * pt.price;
            for j in 0..p {
                xtx[(i, j)] += row[i] * row[j];
            }
        }
    }
    for i in n_trend..p {
        xtx[(i, i)] += config.ridge_lambda;
    }
    let beta = xtx
        .cholesky()
        .ok_or_else(|| {
            KisanError::Numerical(format!(
                "{}: normal equations are not positive definite",
                series.crop_id
            ))
        })?
        .solve(&xty);

    let trend = Trend {
        intercept: beta[0],
        slope: beta[1],
        deltas: (0..changepoints.len()).map(|j| beta[2 + j]).collect(),
        changepoints,
    };
    let seasonality = Seasonality {
        order,
        coefficients: (0..order)
            .map(|k| (beta[n_trend + 2 * k], beta[n_trend + 2 * k + 1]))
            .collect(),
    };
    let residuals: Vec<f64> = rows
        .iter()
        .zip(&series.points)
        .map(|(row, pt)| pt.price - row.iter().zip(beta.iter()).map(|(x, b)| x * b).sum::<f64>())
        .collect();
    let mean = residuals.iter().sum::<f64>() / n as f64;
    let residual_sigma = (residuals.iter().map(|r| (r - mean) * (r - mean)).sum::<f64>() / n as f64).sqrt();

    Ok(PriceModel {
        crop_id: series.crop_id.clone(),
        t0,
        t1,
        trend,
        seasonality,
        ridge_lambda: config.ridge_lambda,
        residual_sigma,
        n_points: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastPoint {
    pub year: i32,
    pub month: u32,
    pub yhat: f64,
    pub trend: f64,
    pub seasonal: f64,
    pub interval_low: f64,
    pub interval_high: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ForecastResult {
    pub crop_id: String,
    pub points: Vec<ForecastPoint>,
}

impl ForecastResult {
    /// CSV with a header row; numbers in shortest round-trip decimal form.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("crop,year,month,yhat,trend,seasonal,interval_low,interval_high\n");
        for p in &self.points {
            out.push_str(&format!(
                "{},{},{},{},{},{},{},{}\n",
                self.crop_id, p.year, p.month, p.yhat, p.trend, p.seasonal, p.interval_low, p.interval_high
            ));
        }
        out
    }

    pub fn last(&self) -> Option<&ForecastPoint> {
        self.points.last()
    }
}

/// Forecasts the `months` calendar months following the last observation.
/// The interval is `yhat +/- 1.96 * residual_sigma`.
pub fn forecast_horizon(model: &PriceModel, months: i64) -> Result<ForecastResult> {
    if months <= 0 {
        return Err(KisanError::InvalidInput(format!(
            "forecast horizon must be >= 1 month, got {months}"
        )));
    }
    let half = INTERVAL_Z * model.residual_sigma;
    let points = (1..=months)
        .map(|h| {
            let (year, month) = calendar_month(model.t1 + h);
            let (trend, seasonal) = model.decompose(year, month);
            let yhat = trend + seasonal;
            ForecastPoint {
                year,
                month,
                yhat,
                trend,
                seasonal,
                interval_low: yhat - half,
                interval_high: yhat + half,
            }
        })
        .collect();
    Ok(ForecastResult {
        crop_id: model.crop_id.clone(),
        points,
    })
}

/// `(g, s)` at a calendar month; `g + s` is the model's prediction.
pub fn decompose(model: &PriceModel, year: i32, month: u32) -> (f64, f64) {
    model.decompose(year, month)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BacktestScore {
    /// Mean absolute percentage error as a fraction (0.05 = 5%).
    pub mape: f64,
    pub mae: f64,
}

/// Fits on all but the last `holdout_months` points and scores the
/// predictions for the held-out points.
pub fn backtest(series: &PriceSeries, holdout_months: usize, config: &ForecastConfig) -> Result<BacktestScore> {
    if holdout_months == 0 {
        return Err(KisanError::InvalidInput("holdout must be >= 1 month".into()));
    }
    if holdout_months >= series.len() || series.len() - holdout_months < MIN_POINTS {
        return Err(KisanError::InsufficientHistory(format!(
            "{}: {} points leave fewer than {MIN_POINTS} for fitting after a {holdout_months}-month holdout",
            series.crop_id,
            series.len()
        )));
    }
    let split = series.len() - holdout_months;
    let model = fit_price_model(&series.prefix(split), config)?;
    let held = &series.points[split..];
    let (mut ape, mut ae) = (0.0, 0.0);
    for p in held {
        let err = (model.predict(p.year, p.month) - p.price).abs();
        ae += err;
        ape += err / p.price;
    }
    let n = held.len() as f64;
    Ok(BacktestScore {
        mape: ape / n,
        mae: ae / n,
    })
}

/// Min-max normalization of forecast prices across candidate crops. When
/// every price is equal each crop gets the neutral score 0.5.
pub fn price_scores(forecasts: &BTreeMap<String, f64>) -> Result<BTreeMap<String, f64>> {
    if forecasts.is_empty() {
        return Err(KisanError::Empty("no crop prices to normalize"));
    }
    if let Some((crop, p)) = forecasts.iter().find(|(_, p)| !(p.is_finite() && **p > 0.0)) {
        return Err(KisanError::InvalidInput(format!(
            "price for {crop} must be positive, got {p}"
        )));
    }
    let min = forecasts.values().cloned().fold(f64::INFINITY, f64::min);
    let max = forecasts.values().cloned().fold(f64::NEG_INFINITY, f64::max);
    Ok(forecasts
        .iter()
        .map(|(crop, p)| {
            let g = if max == min { 0.5 } else { (p - min) / (max - min) };
            (crop.clone(), g)
        })
        .collect())
}

use std::collections::BTreeMap;

use kisan_core::advisory::{composite_score, rank_crops, ScoreWeights};
use kisan_core::forecast::{
    backtest, calendar_month, fit_price_model, forecast_horizon, month_index, price_scores, ForecastConfig, PricePoint,
    PriceSeries,
};
use kisan_core::synth::{synth_market_series, SynthConfig};
use proptest::prelude::*;

fn weights() -> impl Strategy<Value = ScoreWeights> {
    (0.0..=1.0f64).prop_map(|w1| ScoreWeights { w1, w2: 1.0 - w1 })
}

fn price_map() -> impl Strategy<Value = BTreeMap<String, f64>> {
    prop::collection::vec(1.0..10_000.0f64, 1..12).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, p)| (format!("crop{i:02}"), p))
            .collect()
    })
}

fn noisy_series() -> impl Strategy<Value = PriceSeries> {
    (any::<u64>(), 24usize..60, 50.0..500.0f64, -1.0..1.0f64, 0.0..30.0f64).prop_map(
        |(seed, n, base, slope, amplitude)| {
            synth_market_series(
                seed,
                &SynthConfig {
                    base,
                    slope,
                    amplitude,
                    noise_sigma: 2.0,
                    n_months: n,
                    ..SynthConfig::default()
                },
            )
            .unwrap()
            .series
        },
    )
}

proptest! {
    #[test]
    fn composite_is_linear_in_both_operands(p in 0.0..=1.0f64, g in 0.0..=1.0f64, a in 0.0..=1.0f64, w in weights()) {
        let scaled = composite_score(a * p, a * g, w).unwrap();
        prop_assert!((scaled - a * composite_score(p, g, w).unwrap()).abs() <= 1e-12);
        prop_assert!((composite_score(p, g, w).unwrap() - (w.w1 * p + w.w2 * g)).abs() <= 1e-12);
    }

    #[test]
    fn composite_is_monotone(p in 0.0..=1.0f64, g in 0.0..0.99f64, dp in 0.0..=1.0f64, dg in 0.001..0.01f64, w in weights()) {
        let base = composite_score(p, g, w).unwrap();
        let more_p = composite_score((p + dp).min(1.0), g, w).unwrap();
        prop_assert!(more_p >= base);
        let more_g = composite_score(p, g + dg, w).unwrap();
        if w.w2 > 1e-6 {
            prop_assert!(more_g > base);
        } else {
            prop_assert!(more_g >= base);
        }
    }

    #[test]
    fn price_scores_are_bounded_and_order_preserving(prices in price_map()) {
        let g = price_scores(&prices).unwrap();
        prop_assert!(g.values().all(|v| (0.0..=1.0).contains(v)));
        for (a, pa) in &prices {
            for (b, pb) in &prices {
                if pa < pb {
                    prop_assert!(g[a] <= g[b]);
                }
            }
        }
    }

    #[test]
    fn ranking_ignores_a_common_price_shift(
        prices in price_map(),
        shift in 0.0..5_000.0f64,
        posterior_raw in prop::collection::vec(0.01..1.0f64, 12),
        w in weights(),
    ) {
        let catalog: Vec<String> = prices.keys().cloned().collect();
        let total: f64 = posterior_raw[..catalog.len()].iter().sum();
        let posterior: Vec<f64> = posterior_raw[..catalog.len()].iter().map(|v| v / total).collect();
        let shifted: BTreeMap<String, f64> = prices.iter().map(|(k, v)| (k.clone(), v + shift)).collect();
        let a = rank_crops(&catalog, &posterior, &price_scores(&prices).unwrap(), w).unwrap();
        let b = rank_crops(&catalog, &posterior, &price_scores(&shifted).unwrap(), w).unwrap();
        let order = |r: &[kisan_core::advisory::CropRecommendation]| r.iter().map(|c| c.crop_id.clone()).collect::<Vec<_>>();
        // Min-max normalization cancels the shift up to rounding; compare
        // orders only where scores are separated by more than that.
        let separated = a.windows(2).all(|p| (p[0].score - p[1].score).abs() > 1e-9);
        if separated {
            prop_assert_eq!(order(&a), order(&b));
        }
    }

    #[test]
    fn rankings_are_sorted(
        posterior_raw in prop::collection::vec(0.0..1.0f64, 2..10),
        gs in prop::collection::vec(0.0..=1.0f64, 10),
        w in weights(),
    ) {
        let catalog: Vec<String> = (0..posterior_raw.len()).map(|i| format!("c{i}")).collect();
        let g: BTreeMap<String, f64> = catalog.iter().cloned().zip(gs).collect();
        let ranked = rank_crops(&catalog, &posterior_raw, &g, w).unwrap();
        for pair in ranked.windows(2) {
            prop_assert!(pair[0].score >= pair[1].score);
            if pair[0].score == pair[1].score {
                prop_assert!(pair[0].p_yield > pair[1].p_yield
                    || (pair[0].p_yield == pair[1].p_yield && pair[0].crop_id < pair[1].crop_id));
            }
        }
        for r in &ranked {
            prop_assert!((r.score - (w.w1 * r.p_yield + w.w2 * r.g_price)).abs() <= 1e-12);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn forecasts_are_additive_and_periodic(series in noisy_series(), months in 1i64..30) {
        let model = fit_price_model(&series, &ForecastConfig::default()).unwrap();
        let fc = forecast_horizon(&model, months).unwrap();
        prop_assert_eq!(fc.points.len() as i64, months);
        for p in &fc.points {
            prop_assert_eq!(p.yhat, p.trend + p.seasonal);
            let (_, s) = model.decompose(p.year + 3, p.month);
            prop_assert_eq!(s, p.seasonal);
        }
    }

    #[test]
    fn ridge_shrinks_seasonality(series in noisy_series(), lambdas in prop::collection::vec(0.0..50.0f64, 2..5)) {
        let mut lambdas = lambdas;
        lambdas.sort_by(f64::total_cmp);
        let norms: Vec<f64> = lambdas
            .iter()
            .map(|&ridge_lambda| {
                let config = ForecastConfig { ridge_lambda, ..ForecastConfig::default() };
                fit_price_model(&series, &config).unwrap().seasonality.l2_norm()
            })
            .collect();
        for w in norms.windows(2) {
            prop_assert!(w[1] <= w[0] * (1.0 + 1e-9) + 1e-12, "{:?} -> {:?}", lambdas, norms);
        }
    }

    #[test]
    fn fits_are_deterministic(series in noisy_series()) {
        let config = ForecastConfig::default();
        prop_assert_eq!(fit_price_model(&series, &config).unwrap(), fit_price_model(&series, &config).unwrap());
    }

    #[test]
    fn trend_plus_sine_backtests_within_five_percent(seed in any::<u64>()) {
        let config = SynthConfig {
            base: 100.0,
            slope: 2.0,
            amplitude: 10.0,
            noise_sigma: 1.0,
            n_months: 36,
            ..SynthConfig::default()
        };
        let series = synth_market_series(seed, &config).unwrap().series;
        let score = backtest(&series, 6, &ForecastConfig::default()).unwrap();
        prop_assert!(score.mape <= 0.05, "seed {}: mape {}", seed, score.mape);
    }

    #[test]
    fn calendar_round_trip(year in -3000i32..3000, month in 1u32..=12) {
        prop_assert_eq!(calendar_month(month_index(year, month)), (year, month));
    }
}

#[test]
fn gapped_series_are_accepted() {
    let points: Vec<PricePoint> = (0..40)
        .filter(|i| i % 5 != 3)
        .map(|i| {
            let (year, month) = calendar_month(month_index(2015, 1) + i);
            PricePoint {
                year,
                month,
                price: 100.0 + i as f64,
            }
        })
        .collect();
    let series = PriceSeries::new("gappy", points).unwrap();
    let model = fit_price_model(&series, &ForecastConfig::default()).unwrap();
    assert!((model.predict(2018, 6) - (100.0 + 41.0)).abs() < 1.0);
}

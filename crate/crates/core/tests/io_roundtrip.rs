use std::collections::BTreeMap;

use kisan_core::bundle::{load_bundle, save_bundle, train_bundle, TrainingInputs};
use kisan_core::forecast::ForecastConfig;
use kisan_core::forest::ForestConfig;
use kisan_core::ingest::{
    load_crop_dataset, load_fertilizer_dataset, load_market_history, write_crop_dataset, write_fertilizer_records,
    write_market_history,
};
use kisan_core::synth::{synth_crop_dataset, synth_fertilizer_records, synth_market_corpus};
use kisan_core::KisanError;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[test]
fn corpora_survive_a_csv_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let crops = synth_crop_dataset(1, 10, true).unwrap();
    let path = dir.path().join("crops.csv");
    write_crop_dataset(&path, &crops).unwrap();
    let back = load_crop_dataset(&path, true).unwrap();
    assert_eq!(back, crops);
    assert_eq!(back.fingerprint(), crops.fingerprint());
    let err = load_crop_dataset(dir.path().join("absent.csv"), false).unwrap_err();
    assert!(matches!(err, KisanError::Io { .. }));

    let market = synth_market_corpus(2).unwrap();
    let path = dir.path().join("market.csv");
    write_market_history(&path, &market).unwrap();
    let loaded = load_market_history(&path).unwrap();
    assert_eq!(loaded.len(), 11);
    assert_eq!(loaded.values().map(|s| s.len()).sum::<usize>(), 3100);
    for s in &market {
        assert_eq!(&loaded[&s.crop_id], s);
    }

    let records = synth_fertilizer_records(3, 500);
    let path = dir.path().join("fertilizer.csv");
    write_fertilizer_records(&path, &records).unwrap();
    let fert = load_fertilizer_dataset(&path).unwrap();
    assert_eq!((fert.len(), fert.n_classes(), fert.arity()), (500, 7, 10));
}

#[test]
fn bundle_predictions_are_bit_identical_after_reload() {
    let crops = synth_crop_dataset(4, 15, false).unwrap();
    let fert = synth_fertilizer_records(5, 120);
    let market: BTreeMap<_, _> = synth_market_corpus(6)
        .unwrap()
        .into_iter()
        .map(|s| (s.crop_id.clone(), s))
        .collect();
    let bundle = train_bundle(TrainingInputs {
        crops: &crops,
        fertilizer: Some(&fert),
        market: &market,
        crop_forest: ForestConfig {
            n_trees: 25,
            ..ForestConfig::default()
        },
        fertilizer_forest: ForestConfig {
            n_trees: 10,
            ..ForestConfig::default()
        },
        forecast: ForecastConfig::default(),
        created_at: "2025-01-01T00:00:00Z".into(),
    })
    .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("model.kisan.json");
    save_bundle(&bundle, &path).unwrap();
    let loaded = load_bundle(&path).unwrap();
    assert_eq!(loaded, bundle);

    let mut rng = ChaCha8Rng::seed_from_u64(100);
    for _ in 0..100 {
        let x: Vec<f64> = (0..7).map(|_| rng.random_range(0.0..250.0)).collect();
        let a = bundle.crop_model.posterior(&x).unwrap();
        let b = loaded.crop_model.posterior(&x).unwrap();
        assert!(a.iter().zip(&b).all(|(u, v)| u.to_bits() == v.to_bits()));
    }
    for (crop, model) in &bundle.price_models {
        let other = &loaded.price_models[crop];
        for h in 1..=12 {
            let (y, m) = kisan_core::forecast::calendar_month(model.t1 + h);
            assert_eq!(model.predict(y, m).to_bits(), other.predict(y, m).to_bits());
        }
    }
}

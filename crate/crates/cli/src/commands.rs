use std::collections::BTreeMap;
use std::path::Path;

use chrono::{SecondsFormat, Utc};
use kisan_core::advisory::{AdvisoryRequest, FertilizerModel, ScoreWeights};
use kisan_core::benchmark::{default_roster, run_benchmark, text_table, BenchmarkDocument, BenchmarkMetadata};
use kisan_core::bundle::{load_bundle, save_bundle, train_bundle, TrainingInputs};
use kisan_core::domain::{Schema, SoilSample};
use kisan_core::fixtures::comparison_bundle;
use kisan_core::forecast::{forecast_horizon, ForecastConfig};
use kisan_core::forest::ForestConfig;
use kisan_core::ingest::{
    load_crop_corpus, load_crop_dataset, load_fertilizer_records, load_market_history, write_crop_dataset,
    write_fertilizer_records, write_file, write_market_history,
};
use kisan_core::synth::{synth_crop_dataset, synth_fertilizer_records, synth_market_corpus};
use kisan_core::KisanError;

use crate::{
    BenchmarkArgs, CliError, CliResult, ForecastArgs, ForecastFlags, ForestFlags, RecommendArgs, SynthArgs, TrainArgs,
};

pub const REPORT_JSON: &str = "benchmark_report.json";
pub const REPORT_TXT: &str = "benchmark_report.txt";
pub const CONFUSION_CSV: &str = "confusion_matrix.csv";

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Secs, true)
}

fn create_dir(dir: &Path) -> CliResult<()> {
    std::fs::create_dir_all(dir).map_err(|e| KisanError::io(dir, e).into())
}

fn forest_config(f: &ForestFlags) -> ForestConfig {
    ForestConfig {
        n_trees: f.trees as usize,
        max_depth: f.max_depth.map(|d| d as usize),
        seed: f.seed,
        ..ForestConfig::default()
    }
}

fn forecast_config(f: &ForecastFlags) -> CliResult<ForecastConfig> {
    if !(f.ridge_lambda.is_finite() && f.ridge_lambda >= 0.0) {
        return Err(CliError::Usage(format!(
            "--ridge-lambda must be a finite number >= 0, got {}",
            f.ridge_lambda
        )));
    }
    Ok(ForecastConfig {
        n_changepoints: f.changepoints,
        fourier_order: f.fourier_order as usize,
        ridge_lambda: f.ridge_lambda,
    })
}

pub fn train(a: TrainArgs) -> CliResult<()> {
    let forecast = forecast_config(&a.forecast)?;
    let crops = load_crop_corpus(&a.crops)?.project(Schema::agronomic())?;
    let market = match &a.market {
        Some(path) => load_market_history(path)?,
        None => BTreeMap::new(),
    };
    let fertilizer = a.fertilizer.as_ref().map(load_fertilizer_records).transpose()?;
    let bundle = train_bundle(TrainingInputs {
        crops: &crops,
        fertilizer: fertilizer.as_deref(),
        market: &market,
        crop_forest: forest_config(&a.forest),
        fertilizer_forest: ForestConfig {
            n_trees: a.fertilizer_trees as usize,
            seed: a.forest.seed,
            ..FertilizerModel::default_config()
        },
        forecast,
        created_at: a.created_at.unwrap_or_else(now),
    })?;
    save_bundle(&bundle, &a.out)?;
    println!(
        "crop model: {} rows, {} crops, {} trees",
        crops.len(),
        crops.n_classes(),
        bundle.crop_model.forest.trees.len()
    );
    if let Some(f) = &bundle.fertilizer_model {
        println!("fertilizer model: {} types", f.forest.class_catalog.len());
    }
    println!("price models: {}", bundle.price_models.len());
    for (crop, reason) in &bundle.unfitted_series {
        println!("  skipped {crop}: {reason}");
    }
    println!("wrote {}", a.out.display());
    Ok(())
}

pub fn benchmark(a: BenchmarkArgs) -> CliResult<()> {
    if !(a.test_fraction > 0.0 && a.test_fraction < 1.0) {
        return Err(CliError::Usage(format!(
            "--test-fraction must lie in (0, 1), got {}",
            a.test_fraction
        )));
    }
    let dataset = match &a.data {
        Some(path) => load_crop_dataset(path, true)?,
        None => {
            eprintln!("kisan: no --data given, benchmarking the synthetic replica");
            synth_crop_dataset(a.seed, a.replica_rows as usize, true)?
        }
    };
    let (body, wall_clock_ms) = run_benchmark(&dataset, &default_roster(a.seed), a.test_fraction, a.seed)?;
    let doc = BenchmarkDocument {
        body,
        metadata: BenchmarkMetadata {
            generated_at: now(),
            wall_clock_ms,
        },
    };
    create_dir(&a.out_dir)?;
    let json = serde_json::to_string_pretty(&doc).map_err(KisanError::from)?;
    let table = text_table(&doc.body);
    let json_path = a.out_dir.join(REPORT_JSON);
    let txt_path = a.out_dir.join(REPORT_TXT);
    write_file(&json_path, format!("{json}\n").as_bytes())?;
    write_file(&txt_path, table.as_bytes())?;
    print!("{table}");
    eprintln!("kisan: wrote {}", json_path.display());
    eprintln!("kisan: wrote {}", txt_path.display());
    if let Some(champion) = &doc.body.champion {
        let cm_path = a.out_dir.join(CONFUSION_CSV);
        write_file(&cm_path, champion.confusion.to_csv().as_bytes())?;
        eprintln!("kisan: wrote {} ({})", cm_path.display(), champion.name);
    }
    Ok(())
}

pub fn forecast(a: ForecastArgs) -> CliResult<()> {
    let bundle = load_bundle(&a.bundle)?;
    let model = bundle.price_models.get(&a.crop).ok_or_else(|| {
        let known: Vec<&str> = bundle.price_models.keys().map(String::as_str).collect();
        CliError::Data(format!(
            "no market data for '{}' in {} (known: {})",
            a.crop,
            a.bundle.display(),
            known.join(", ")
        ))
    })?;
    let fc = forecast_horizon(model, a.months as i64)?;
    println!(
        "{:<8} {:>12} {:>12} {:>10} {:>12} {:>12}",
        "month", "yhat", "trend", "seasonal", "low", "high"
    );
    for p in &fc.points {
        println!(
            "{:04}-{:02}  {:>12.2} {:>12.2} {:>10.2} {:>12.2} {:>12.2}",
            p.year, p.month, p.yhat, p.trend, p.seasonal, p.interval_low, p.interval_high
        );
    }
    if let Some(path) = &a.csv {
        write_file(path, fc.to_csv().as_bytes())?;
        eprintln!("kisan: wrote {}", path.display());
    }
    Ok(())
}

pub fn recommend(a: RecommendArgs) -> CliResult<()> {
    let weights = match (a.w1, a.w2) {
        (Some(w1), Some(w2)) => ScoreWeights::new(w1, w2)?,
        _ => ScoreWeights::default(),
    };
    let request = AdvisoryRequest {
        sample: SoilSample {
            n: a.n,
            p: a.p,
            k: a.k,
            temperature: a.temperature,
            humidity: a.humidity,
            ph: a.ph,
            rainfall: a.rainfall,
        }
        .validate()?,
        weights,
        horizon_months: a.horizon,
    };
    let bundle = load_bundle(&a.bundle)?;
    let ranked = bundle.advise(&request)?;
    if a.json {
        println!("{}", serde_json::to_string_pretty(&ranked).map_err(KisanError::from)?);
        return Ok(());
    }
    for r in &ranked.recommendations {
        let price = match r.forecast_price {
            Some(v) => format!("forecast={v:.2}"),
            None => "no market data".to_string(),
        };
        println!(
            "{} {:.3}  p_yield={:.3} g_price={:.3} {price}",
            r.crop_id, r.score, r.p_yield, r.g_price
        );
    }
    Ok(())
}

pub fn serve(a: kisan_service::ServeArgs) -> CliResult<()> {
    let runtime = tokio::runtime::Builder::new_multi_thread()
        .enable_all()
        .build()
        .map_err(|e| CliError::Data(format!("cannot start runtime: {e}")))?;
    runtime.block_on(kisan_service::serve(a))?;
    Ok(())
}

pub fn synth(a: SynthArgs) -> CliResult<()> {
    create_dir(&a.out_dir)?;
    let rows = a.rows_per_crop as usize;
    let written = [
        "crop.csv",
        "crop_with_price.csv",
        "fertilizer.csv",
        "market.csv",
        "fixture.kisan.json",
    ]
    .map(|name| a.out_dir.join(name));
    write_crop_dataset(&written[0], &synth_crop_dataset(a.seed, rows, false)?)?;
    write_crop_dataset(&written[1], &synth_crop_dataset(a.seed, rows, true)?)?;
    write_fertilizer_records(&written[2], &synth_fertilizer_records(a.seed, 500))?;
    write_market_history(&written[3], &synth_market_corpus(a.seed)?)?;
    save_bundle(&comparison_bundle(), &written[4])?;
    for path in &written {
        println!("wrote {}", path.display());
    }
    Ok(())
}

use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::sync::Arc;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::{Json, Router};
use kisan_core::advisory::{
    composite_score, rank_crops, recommend_fertilizer, AdvisoryRequest, RankedAdvisory, ScoreWeights,
    DEFAULT_HORIZON_MONTHS,
};
use kisan_core::bundle::FORMAT_VERSION;
use kisan_core::domain::SoilSample;
use kisan_core::forecast::forecast_horizon;
use kisan_core::ingest::FertilizerQuery;
use kisan_core::FieldError;
use serde_json::{json, Value};
use tower_http::cors::{AllowOrigin, CorsLayer};

use crate::body::BodyReader;
use crate::error::{ApiError, ApiResult};
use crate::AppState;

/// Longest accepted forecast horizon, in months.
pub const MAX_HORIZON_MONTHS: i64 = 60;

type AppStateRef = State<Arc<AppState>>;

pub fn router(state: Arc<AppState>) -> Router {
    let origins: Vec<HeaderValue> = state
        .args()
        .cors
        .iter()
        .filter_map(|o| HeaderValue::from_str(o).ok())
        .collect();
    let router = Router::new()
        .route("/healthz", get(healthz))
        .route("/api/v1/model/info", get(model_info))
        .route("/api/v1/crops", get(crops))
        .route("/api/v1/recommend", post(recommend))
        .route("/api/v1/recommend/agronomic", post(recommend_agronomic))
        .route("/api/v1/score", post(score))
        .route("/api/v1/fertilizer", post(fertilizer))
        .route("/api/v1/forecast/{crop}", get(forecast))
        .route("/api/v1/prices/{crop}/history", get(price_history))
        .route("/api/v1/model/feature-importance", get(feature_importance))
        .route("/api/v1/benchmark/latest", get(benchmark_latest))
        .fallback(|| async { ApiError::not_found("path", "no such endpoint") })
        .method_not_allowed_fallback(|| async {
            ApiError {
                status: axum::http::StatusCode::METHOD_NOT_ALLOWED,
                code: "method_not_allowed",
                fields: vec![FieldError::new("method", "method not allowed on this endpoint")],
            }
        })
        .with_state(state);
    if origins.is_empty() {
        router
    } else {
        router.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        )
    }
}

async fn healthz(State(state): AppStateRef) -> Json<Value> {
    let snap = state.snapshot();
    Json(json!({
        "status": "ok",
        "bundle_version": FORMAT_VERSION,
        "bundle_created_at": snap.bundle.created_at,
    }))
}

async fn model_info(State(state): AppStateRef) -> Json<Value> {
    let snap = state.snapshot();
    let b = &snap.bundle;
    let fertilizer = b.fertilizer_model.as_ref().map(|f| {
        json!({
            "fertilizer_types": f.forest.class_catalog,
            "soil_types": f.encoder.soil_types,
            "features": f.encoder.schema().features,
        })
    });
    Json(json!({
        "format_version": FORMAT_VERSION,
        "created_at": b.created_at,
        "crop_features": b.crop_features,
        "crop_catalog": b.crop_catalog(),
        "price_crops": b.price_models.keys().collect::<Vec<_>>(),
        "unfitted_series": b.unfitted_series,
        "crop_fingerprint": b.crop_fingerprint,
        "forest": b.crop_model.forest.config,
        "forecast_config": b.forecast_config,
        "fertilizer": fertilizer,
        "default_weights": ScoreWeights::default(),
        "default_horizon_months": DEFAULT_HORIZON_MONTHS,
    }))
}

async fn crops(State(state): AppStateRef) -> Json<Value> {
    let snap = state.snapshot();
    let list: Vec<Value> = snap
        .bundle
        .crop_catalog()
        .iter()
        .map(|c| json!({"crop_id": c, "has_market_data": snap.bundle.price_models.contains_key(c)}))
        .collect();
    Json(json!({ "crops": list }))
}

const SOIL_FIELDS: [&str; 7] = ["n", "p", "k", "temperature", "humidity", "ph", "rainfall"];

/// Reads the seven soil fields, reporting parse problems and range
/// violations together.
fn read_sample(r: &mut BodyReader) -> SoilSample {
    let mut v = [0.0; 7];
    let mut bad = BTreeSet::new();
    for (i, name) in SOIL_FIELDS.iter().enumerate() {
        let present = r.has(name);
        v[i] = r.number(name);
        if !present || v[i].is_nan() {
            bad.insert(name.to_string());
        }
    }
    let sample = SoilSample {
        n: v[0],
        p: v[1],
        k: v[2],
        temperature: v[3],
        humidity: v[4],
        ph: v[5],
        rainfall: v[6],
    };
    if let Err(e) = sample.validate() {
        for f in e.field_errors().unwrap_or_default() {
            if !bad.contains(&f.field) {
                r.push(f.clone());
            }
        }
    }
    sample
}

fn read_weights(r: &mut BodyReader) -> ScoreWeights {
    let Some(mut w) = r.opt_object("weights") else {
        return ScoreWeights::default();
    };
    w.reject_unknown(&["w1", "w2"]);
    let weights = ScoreWeights {
        w1: w.number("w1"),
        w2: w.number("w2"),
    };
    if weights.w1.is_finite() && weights.w2.is_finite() {
        if let Err(e) = weights.validate() {
            for f in e.field_errors().unwrap_or_default() {
                w.push(FieldError::new(format!("weights.{}", f.field), f.message.clone()));
            }
        }
    }
    r.absorb(w);
    weights
}

fn read_horizon(r: &mut BodyReader) -> u32 {
    match r.opt_integer("horizon_months") {
        None => DEFAULT_HORIZON_MONTHS,
        Some(h) if (1..=MAX_HORIZON_MONTHS).contains(&h) => h as u32,
        Some(_) => {
            r.push(FieldError::new(
                "horizon_months",
                format!("horizon_months out of [1,{MAX_HORIZON_MONTHS}]"),
            ));
            DEFAULT_HORIZON_MONTHS
        }
    }
}

fn advise(state: &AppState, request: AdvisoryRequest) -> ApiResult<Json<RankedAdvisory>> {
    let snap = state.snapshot();
    snap.bundle
        .advise(&request)
        .map(Json)
        .map_err(|e| ApiError::from_core(e, "body"))
}

async fn recommend(State(state): AppStateRef, body: Bytes) -> ApiResult<Json<RankedAdvisory>> {
    let mut r = BodyReader::parse(&body)?;
    let mut allowed = SOIL_FIELDS.to_vec();
    allowed.extend(["weights", "horizon_months"]);
    r.reject_unknown(&allowed);
    let sample = read_sample(&mut r);
    let weights = read_weights(&mut r);
    let horizon_months = read_horizon(&mut r);
    r.finish()?;
    advise(
        &state,
        AdvisoryRequest {
            sample,
            weights,
            horizon_months,
        },
    )
}

/// Suitability-only ranking: weights fixed at (1, 0).
async fn recommend_agronomic(State(state): AppStateRef, body: Bytes) -> ApiResult<Json<RankedAdvisory>> {
    let mut r = BodyReader::parse(&body)?;
    let mut allowed = SOIL_FIELDS.to_vec();
    allowed.push("horizon_months");
    r.reject_unknown(&allowed);
    let sample = read_sample(&mut r);
    let horizon_months = read_horizon(&mut r);
    r.finish()?;
    advise(
        &state,
        AdvisoryRequest {
            sample,
            weights: ScoreWeights { w1: 1.0, w2: 0.0 },
            horizon_months,
        },
    )
}

fn unit_number(r: &mut BodyReader, name: &str) -> f64 {
    let present = r.has(name);
    let v = r.number(name);
    if present && !v.is_nan() && !(0.0..=1.0).contains(&v) {
        r.push(FieldError::new(name, format!("{name} out of [0,1]")));
    }
    v
}

/// Either one `(p_yield, g_price)` pair or a batch of `candidates` ranked
/// with the same weights.
async fn score(body: Bytes) -> ApiResult<Json<Value>> {
    let mut r = BodyReader::parse(&body)?;
    let weights = read_weights(&mut r);
    if r.has("candidates") {
        r.reject_unknown(&["candidates", "weights"]);
        let mut catalog = Vec::new();
        let mut suitability = Vec::new();
        let mut g = BTreeMap::new();
        for mut c in r.object_array("candidates") {
            c.reject_unknown(&["crop_id", "p_yield", "g_price"]);
            let crop = c.string("crop_id");
            let p = unit_number(&mut c, "p_yield");
            let gp = unit_number(&mut c, "g_price");
            if g.insert(crop.clone(), gp).is_some() {
                c.push(FieldError::new("crop_id", format!("duplicate crop_id '{crop}'")));
            }
            catalog.push(crop);
            suitability.push(p);
            r.absorb(c);
        }
        if catalog.is_empty() {
            r.push(FieldError::new("candidates", "candidates must not be empty"));
        }
        r.finish()?;
        let ranked =
            rank_crops(&catalog, &suitability, &g, weights).map_err(|e| ApiError::from_core(e, "candidates"))?;
        return Ok(Json(json!({ "weights": weights, "recommendations": ranked })));
    }
    r.reject_unknown(&["p_yield", "g_price", "weights"]);
    let p = unit_number(&mut r, "p_yield");
    let g = unit_number(&mut r, "g_price");
    r.finish()?;
    let s = composite_score(p, g, weights).map_err(|e| ApiError::from_core(e, "body"))?;
    Ok(Json(
        json!({ "p_yield": p, "g_price": g, "weights": weights, "score": s }),
    ))
}

async fn fertilizer(State(state): AppStateRef, body: Bytes) -> ApiResult<Json<Value>> {
    let snap = state.snapshot();
    let Some(model) = snap.bundle.fertilizer_model.as_ref() else {
        return Err(ApiError::not_found(
            "fertilizer_model",
            "bundle has no fertilizer model",
        ));
    };
    let mut r = BodyReader::parse(&body)?;
    r.reject_unknown(&["n", "p", "k", "soil_type", "moisture", "temperature"]);
    let query = FertilizerQuery {
        n: r.number("n"),
        p: r.number("p"),
        k: r.number("k"),
        soil_type: r.string("soil_type"),
        moisture: r.number("moisture"),
        temperature: r.number("temperature"),
    };
    for (name, v) in [("n", query.n), ("p", query.p), ("k", query.k)] {
        if v < 0.0 {
            r.push(FieldError::new(name, format!("{name} must be >= 0")));
        }
    }
    if !query.moisture.is_nan() && !(0.0..=100.0).contains(&query.moisture) {
        r.push(FieldError::new("moisture", "moisture out of [0,100]"));
    }
    if !query.soil_type.is_empty() && model.encoder.soil_types.binary_search(&query.soil_type).is_err() {
        r.push(FieldError::new(
            "soil_type",
            format!(
                "unknown soil_type '{}' (known: {})",
                query.soil_type,
                model.encoder.soil_types.join(", ")
            ),
        ));
    }
    r.finish()?;
    let advice = recommend_fertilizer(model, &query).map_err(|e| ApiError::from_core(e, "body"))?;
    Ok(Json(
        serde_json::to_value(advice).map_err(|e| ApiError::internal(e.to_string()))?,
    ))
}

async fn forecast(
    State(state): AppStateRef,
    Path(crop): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> ApiResult<Json<Value>> {
    let months = match query.get("months") {
        None => DEFAULT_HORIZON_MONTHS as i64,
        Some(raw) => match raw.parse::<i64>() {
            Ok(m) if (1..=MAX_HORIZON_MONTHS).contains(&m) => m,
            Ok(_) => {
                return Err(ApiError::field(
                    "months",
                    format!("months out of [1,{MAX_HORIZON_MONTHS}]"),
                ))
            }
            Err(_) => return Err(ApiError::field("months", "months must be an integer")),
        },
    };
    if let Some(unknown) = query.keys().find(|k| k.as_str() != "months") {
        return Err(ApiError::field(unknown, format!("unknown query parameter '{unknown}'")));
    }
    let snap = state.snapshot();
    let model = snap
        .bundle
        .price_models
        .get(&crop)
        .ok_or_else(|| ApiError::not_found("crop", format!("no market data for '{crop}'")))?;
    let fc = forecast_horizon(model, months).map_err(|e| ApiError::from_core(e, "months"))?;
    Ok(Json(
        serde_json::to_value(fc).map_err(|e| ApiError::internal(e.to_string()))?,
    ))
}

async fn price_history(State(state): AppStateRef, Path(crop): Path<String>) -> ApiResult<Json<Value>> {
    let snap = state.snapshot();
    let series = snap
        .bundle
        .price_history
        .get(&crop)
        .ok_or_else(|| ApiError::not_found("crop", format!("no market data for '{crop}'")))?;
    Ok(Json(
        serde_json::to_value(series).map_err(|e| ApiError::internal(e.to_string()))?,
    ))
}

async fn feature_importance(State(state): AppStateRef) -> Json<Value> {
    let snap = state.snapshot();
    Json(json!({ "features": snap.bundle.feature_importances }))
}

async fn benchmark_latest(State(state): AppStateRef) -> ApiResult<Json<Value>> {
    let snap = state.snapshot();
    let doc = snap
        .benchmark
        .as_ref()
        .ok_or_else(|| ApiError::not_found("benchmark", "no benchmark report loaded"))?;
    Ok(Json(
        serde_json::to_value(doc).map_err(|e| ApiError::internal(e.to_string()))?,
    ))
}

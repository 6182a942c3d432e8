#![allow(dead_code)]

use std::path::{Path, PathBuf};

use kisan_core::benchmark::{run_benchmark, BenchmarkDocument, BenchmarkMetadata, ModelSpec, RosterEntry};
use kisan_core::bundle::save_bundle;
use kisan_core::fixtures::comparison_bundle;
use kisan_core::forest::ForestConfig;
use kisan_core::synth::synth_crop_dataset;
use kisan_service::{start, RunningServer, ServeArgs};
use serde_json::{json, Value};
use tempfile::TempDir;

pub const OPENAPI: &str = include_str!("../../../../docs/openapi.json");

pub struct Fixture {
    pub server: RunningServer,
    pub dir: TempDir,
    pub client: reqwest::Client,
}

impl Fixture {
    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.server.addr)
    }

    pub fn report_path(&self) -> PathBuf {
        self.dir.path().join("benchmark_report.json")
    }

    pub fn bundle_path(&self) -> PathBuf {
        self.dir.path().join("model.kisan.json")
    }

    pub async fn get(&self, path: &str) -> (u16, Vec<u8>) {
        let resp = self.client.get(self.url(path)).send().await.expect("GET");
        let status = resp.status().as_u16();
        (status, resp.bytes().await.expect("body").to_vec())
    }

    pub async fn post(&self, path: &str, body: &Value) -> (u16, Vec<u8>) {
        self.post_raw(path, serde_json::to_vec(body).unwrap()).await
    }

    pub async fn post_raw(&self, path: &str, body: Vec<u8>) -> (u16, Vec<u8>) {
        let resp = self
            .client
            .post(self.url(path))
            .header("content-type", "application/json")
            .body(body)
            .send()
            .await
            .expect("POST");
        let status = resp.status().as_u16();
        (status, resp.bytes().await.expect("body").to_vec())
    }
}

pub fn args_for(dir: &Path) -> ServeArgs {
    ServeArgs {
        bundle: dir.join("model.kisan.json"),
        bind: "127.0.0.1:0".into(),
        cors: Vec::new(),
        benchmark_report: Some(dir.join("benchmark_report.json")),
    }
}

/// Serves the comparison fixture bundle; the report path exists only when
/// `with_report` is set.
pub async fn fixture(with_report: bool) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    save_bundle(&comparison_bundle(), dir.path().join("model.kisan.json")).unwrap();
    if with_report {
        write_report(&dir.path().join("benchmark_report.json"));
    }
    let server = start(args_for(dir.path())).await.expect("server starts");
    Fixture {
        server,
        dir,
        client: reqwest::Client::new(),
    }
}

/// A small two-model benchmark document.
pub fn small_report() -> BenchmarkDocument {
    let ds = synth_crop_dataset(3, 12, true).unwrap();
    let roster = vec![
        RosterEntry {
            name: "Random Forest".into(),
            spec: ModelSpec::RandomForest {
                config: ForestConfig {
                    n_trees: 15,
                    seed: 3,
                    ..ForestConfig::default()
                },
            },
        },
        RosterEntry {
            name: "Gaussian NB".into(),
            spec: ModelSpec::Baseline {
                kind: kisan_core::baselines::BaselineKind::GaussianNb,
                params: Default::default(),
            },
        },
    ];
    let (body, wall_clock_ms) = run_benchmark(&ds, &roster, 0.25, 3).unwrap();
    BenchmarkDocument {
        body,
        metadata: BenchmarkMetadata {
            generated_at: "2025-01-01T00:00:00Z".into(),
            wall_clock_ms,
        },
    }
}

pub fn write_report(path: &Path) {
    std::fs::write(path, serde_json::to_string_pretty(&small_report()).unwrap()).unwrap();
}

/// Validates `instance` against `#/components/schemas/<name>` of the
/// published document and returns the error messages.
pub fn schema_errors(name: &str, instance: &Value) -> Vec<String> {
    let doc: Value = serde_json::from_str(OPENAPI).expect("openapi.json parses");
    let root = json!({
        "$ref": format!("#/components/schemas/{name}"),
        "components": doc["components"].clone(),
    });
    let validator = jsonschema::validator_for(&root).expect("schema compiles");
    validator
        .iter_errors(instance)
        .map(|e| format!("{}: {e}", e.instance_path))
        .collect()
}

pub fn assert_schema(name: &str, instance: &Value) {
    let errors = schema_errors(name, instance);
    assert!(errors.is_empty(), "{name} violations: {errors:?}\n{instance:#}");
}

pub fn json_of(bytes: &[u8]) -> Value {
    serde_json::from_slice(bytes).unwrap_or_else(|e| panic!("not JSON ({e}): {}", String::from_utf8_lossy(bytes)))
}

pub fn sample_body() -> Value {
    let s = kisan_core::fixtures::comparison_sample();
    json!({
        "n": s.n, "p": s.p, "k": s.k,
        "temperature": s.temperature, "humidity": s.humidity,
        "ph": s.ph, "rainfall": s.rainfall,
    })
}

pub fn field_messages(body: &Value) -> Vec<(String, String)> {
    body["fields"]
        .as_array()
        .expect("fields array")
        .iter()
        .map(|f| {
            (
                f["field"].as_str().unwrap().to_string(),
                f["message"].as_str().unwrap().to_string(),
            )
        })
        .collect()
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn kisan(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kisan"))
        .args(args)
        .env_remove("KISAN_BUNDLE")
        .env_remove("KISAN_CROP_CORPUS")
        .output()
        .expect("spawn kisan")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn synth(dir: &Path, rows: &str) {
    let out = kisan(&["synth", "--out-dir", dir.to_str().unwrap(), "--rows-per-crop", rows]);
    assert!(out.status.success(), "{}", stderr(&out));
}

const SAMPLE: [&str; 14] = [
    "--n",
    "90",
    "--p",
    "42",
    "--k",
    "43",
    "--temperature",
    "20.8",
    "--humidity",
    "82",
    "--ph",
    "6.5",
    "--rainfall",
    "202.9",
];

fn recommend(bundle: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["recommend", "--bundle", bundle.to_str().unwrap()];
    args.extend(SAMPLE);
    args.extend(extra);
    kisan(&args)
}

#[test]
fn fixture_recommendation_puts_crop_b_on_top() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "5");
    let out = recommend(&dir.path().join("fixture.kisan.json"), &[]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("Crop B 0.830"), "{text}");
    assert!(lines[1].starts_with("Crop A 0.490"), "{text}");
    assert_eq!(lines.len(), 3);

    let out = recommend(
        &dir.path().join("fixture.kisan.json"),
        &["--w1", "1", "--w2", "0", "--json"],
    );
    let v: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["recommendations"][0]["crop_id"], "Crop B");
    assert_eq!(v["recommendations"][0]["score"], 0.85);
}

#[test]
fn usage_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "5");
    let bundle = dir.path().join("fixture.kisan.json");
    let b = bundle.to_str().unwrap();
    let cases: Vec<Output> = vec![
        kisan(&["forecast", "rice", "--months", "0", "--bundle", b]),
        kisan(&["forecast", "rice", "--months", "61", "--bundle", b]),
        kisan(&["recommend", "--bundle", b, "--n", "1"]),
        kisan(&["benchmark", "--frobnicate"]),
        kisan(&["teleport"]),
        kisan(&[]),
        kisan(&["benchmark", "--test-fraction", "1.5"]),
        recommend(&bundle, &["--w1", "0.5"]),
        recommend(&bundle, &["--w1", "0.5", "--w2", "0.6"]),
        kisan(&[
            "recommend",
            "--bundle",
            b,
            "--n",
            "90",
            "--p",
            "42",
            "--k",
            "43",
            "--temperature",
            "20.8",
            "--humidity",
            "82",
            "--ph",
            "20",
            "--rainfall",
            "202.9",
        ]),
        kisan(&["train", "--crops", "x.csv", "--ridge-lambda", "-1"]),
    ];
    for (i, out) in cases.iter().enumerate() {
        assert_eq!(out.status.code(), Some(1), "case {i}: {}", stderr(out));
        assert!(!stderr(out).is_empty(), "case {i} is silent");
    }
    assert!(stderr(&cases[9]).contains("ph out of [0,14]"));
}

#[test]
fn data_errors_exit_two_and_name_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("absent.kisan.json");
    let out = kisan(&["forecast", "rice", "--bundle", missing.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains(missing.to_str().unwrap()), "{}", stderr(&out));

    let corrupt = dir.path().join("corrupt.kisan.json");
    std::fs::write(
        &corrupt,
        "{\"format_version\": 1, \"checksum\": \"00\", \"payload\": {}}",
    )
    .unwrap();
    let out = recommend(&corrupt, &[]);
    assert_eq!(out.status.code(), Some(2), "{}", stderr(&out));

    let missing_csv = dir.path().join("nope.csv");
    let out = kisan(&["train", "--crops", missing_csv.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("nope.csv"));

    synth(dir.path(), "5");
    let out = kisan(&[
        "forecast",
        "rice",
        "--bundle",
        dir.path().join("fixture.kisan.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("no market data for 'rice'"), "{}", stderr(&out));
}

#[test]
fn train_then_forecast_and_recommend() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "8");
    let p = |name: &str| dir.path().join(name).to_str().unwrap().to_string();
    let bundle = p("model.kisan.json");
    let out = kisan(&[
        "train",
        "--crops",
        &p("crop_with_price.csv"),
        "--market",
        &p("market.csv"),
        "--fertilizer",
        &p("fertilizer.csv"),
        "--trees",
        "25",
        "--fertilizer-trees",
        "10",
        "--out",
        &bundle,
        "--created-at",
        "2025-01-01T00:00:00Z",
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert!(
        stdout(&out).contains("176 rows, 22 crops, 25 trees"),
        "{}",
        stdout(&out)
    );

    let out = kisan(&[
        "forecast",
        "rice",
        "--months",
        "6",
        "--bundle",
        &bundle,
        "--csv",
        &p("rice.csv"),
    ]);
    assert!(out.status.success(), "{}", stderr(&out));
    let table = stdout(&out);
    assert_eq!(table.lines().count(), 7, "{table}");
    let csv = std::fs::read_to_string(p("rice.csv")).unwrap();
    assert!(csv.starts_with("crop,year,month,yhat,trend,seasonal,interval_low,interval_high\n"));
    assert_eq!(csv.lines().count(), 7);
    for line in csv.lines().skip(1) {
        let f: Vec<f64> = line.split(',').skip(3).map(|v| v.parse().unwrap()).collect();
        assert_eq!(f[0], f[1] + f[2], "{line}");
        assert!(f[3] <= f[0] && f[0] <= f[4]);
    }

    let out = recommend(Path::new(&bundle), &["--horizon", "3"]);
    assert!(out.status.success(), "{}", stderr(&out));
    assert_eq!(stdout(&out).lines().count(), 22);

    // The same flags and files give the same bundle.
    let again = p("again.kisan.json");
    let mut args: Vec<String> = [
        "train",
        "--crops",
        &p("crop.csv"),
        "--market",
        &p("market.csv"),
        "--trees",
        "25",
        "--created-at",
        "t",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    args.extend(["--out".into(), bundle.clone()]);
    let first = kisan(&args.iter().map(String::as_str).collect::<Vec<_>>());
    assert!(first.status.success(), "{}", stderr(&first));
    *args.last_mut().unwrap() = again.clone();
    assert!(kisan(&args.iter().map(String::as_str).collect::<Vec<_>>())
        .status
        .success());
    assert_eq!(std::fs::read(&bundle).unwrap(), std::fs::read(&again).unwrap());
}

#[test]
fn benchmark_writes_its_declared_outputs_deterministically() {
    let dir = tempfile::tempdir().unwrap();
    synth(dir.path(), "10");
    let data = dir.path().join("crop_with_price.csv");
    let run = |out: &str| {
        let out_dir = dir.path().join(out);
        let o = kisan(&[
            "benchmark",
            "--data",
            data.to_str().unwrap(),
            "--seed",
            "7",
            "--out-dir",
            out_dir.to_str().unwrap(),
        ]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut names: Vec<String> = std::fs::read_dir(&out_dir)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(
            names,
            ["benchmark_report.json", "benchmark_report.txt", "confusion_matrix.csv"]
        );
        let doc: Value =
            serde_json::from_str(&std::fs::read_to_string(out_dir.join("benchmark_report.json")).unwrap()).unwrap();
        (
            doc,
            std::fs::read_to_string(out_dir.join("benchmark_report.txt")).unwrap(),
            stdout(&o),
        )
    };
    let (a, a_txt, a_stdout) = run("a");
    let (b, b_txt, _) = run("b");
    assert_eq!(a["body"], b["body"]);
    assert_eq!(a_txt, b_txt);
    assert_eq!(a_stdout, a_txt);
    assert_eq!(a["body"]["models"].as_array().unwrap().len(), 9);
    let header = a_txt.lines().find(|l| !l.starts_with('#')).unwrap();
    let columns: Vec<&str> = header.split('|').map(str::trim).collect();
    assert_eq!(
        columns,
        ["Model", "Accuracy", "Precision", "Recall", "F1-Score", "Log Loss"]
    );
}

#[test]
fn every_subcommand_has_help() {
    for sub in ["train", "benchmark", "forecast", "recommend", "serve", "synth"] {
        let out = kisan(&[sub, "--help"]);
        assert_eq!(out.status.code(), Some(0), "{sub}");
        assert!(stdout(&out).contains("Usage: kisan"), "{sub}");
    }
}

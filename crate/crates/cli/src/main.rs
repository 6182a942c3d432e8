//! `kisan`: train bundles, benchmark classifiers, forecast prices, rank
//! crops offline and run the HTTP service.
//!
//! Exit codes: 0 success, 1 usage error, 2 data error.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kisan_core::KisanError;
use kisan_service::{ServeArgs, ServiceError};

#[derive(Debug, Parser)]
#[command(name = "kisan", version, about = "Profit-aware crop advisory")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Fit the crop forest, the fertilizer forest and the price models into a bundle.
    Train(TrainArgs),
    /// Run the nine-model benchmark and write the report.
    Benchmark(BenchmarkArgs),
    /// Print or export a monthly price forecast from a bundle.
    Forecast(ForecastArgs),
    /// Rank crops for one soil sample using a bundle.
    Recommend(RecommendArgs),
    /// Serve the HTTP API.
    Serve(ServeArgs),
    /// Write synthetic demo corpora and the comparison fixture bundle.
    Synth(SynthArgs),
}

#[derive(Debug, Args)]
struct ForestFlags {
    /// Trees in the crop forest.
    #[arg(long, default_value_t = 500, value_parser = clap::value_parser!(u32).range(1..))]
    trees: u32,
    /// Maximum tree depth; unlimited when absent.
    #[arg(long, value_parser = clap::value_parser!(u32).range(1..))]
    max_depth: Option<u32>,
    #[arg(long, default_value_t = 42)]
    seed: u64,
}

#[derive(Debug, Args)]
struct ForecastFlags {
    /// Trend changepoints, placed at quantiles of the observed span.
    #[arg(long, default_value_t = 4)]
    changepoints: usize,
    /// Fourier order of the yearly seasonality.
    #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u32).range(0..=6))]
    fourier_order: u32,
    /// Ridge penalty on the seasonal coefficients.
    #[arg(long, default_value_t = 0.1)]
    ridge_lambda: f64,
}

#[derive(Debug, Args)]
struct TrainArgs {
    /// Crop corpus CSV; a market_price column, if present, is ignored.
    #[arg(long)]
    crops: PathBuf,
    /// Monthly price history CSV (crop, month, year, price).
    #[arg(long)]
    market: Option<PathBuf>,
    /// Fertilizer corpus CSV.
    #[arg(long)]
    fertilizer: Option<PathBuf>,
    #[arg(long, default_value = "model.kisan.json")]
    out: PathBuf,
    #[command(flatten)]
    forest: ForestFlags,
    /// Trees in the fertilizer forest.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    fertilizer_trees: u32,
    #[command(flatten)]
    forecast: ForecastFlags,
    /// Creation timestamp stored in the bundle; defaults to now.
    #[arg(long)]
    created_at: Option<String>,
}

#[derive(Debug, Args)]
struct BenchmarkArgs {
    /// Crop corpus CSV with a market_price column. Without it the synthetic
    /// replica is used.
    #[arg(long, env = "KISAN_CROP_CORPUS")]
    data: Option<PathBuf>,
    /// Split seed; also seeds every model and the replica.
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 0.2)]
    test_fraction: f64,
    /// Rows per crop in the replica.
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    replica_rows: u32,
    /// Directory receiving benchmark_report.json, benchmark_report.txt and
    /// confusion_matrix.csv.
    #[arg(long, default_value = ".")]
    out_dir: PathBuf,
}

#[derive(Debug, Args)]
struct ForecastArgs {
    /// Crop identifier as it appears in the market history.
    crop: String,
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=60))]
    months: u32,
    #[arg(long, env = "KISAN_BUNDLE", default_value = "model.kisan.json")]
    bundle: PathBuf,
    /// Also write the forecast as CSV.
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Debug, Args)]
#[command(allow_negative_numbers = true)]
struct RecommendArgs {
    #[arg(long, env = "KISAN_BUNDLE", default_value = "model.kisan.json")]
    bundle: PathBuf,
    #[arg(long)]
    n: f64,
    #[arg(long)]
    p: f64,
    #[arg(long)]
    k: f64,
    #[arg(long)]
    temperature: f64,
    #[arg(long)]
    humidity: f64,
    #[arg(long)]
    ph: f64,
    #[arg(long)]
    rainfall: f64,
    /// Weight on agronomic suitability; requires --w2.
    #[arg(long, requires = "w2")]
    w1: Option<f64>,
    /// Weight on the normalized forecast price; requires --w1.
    #[arg(long, requires = "w1")]
    w2: Option<f64>,
    /// Forecast horizon in months.
    #[arg(long, default_value_t = 6, value_parser = clap::value_parser!(u32).range(1..=60))]
    horizon: u32,
    /// Print the full ranking as JSON.
    #[arg(long)]
    json: bool,
}

#[derive(Debug, Args)]
struct SynthArgs {
    #[arg(long)]
    out_dir: PathBuf,
    #[arg(long, default_value_t = 42)]
    seed: u64,
    #[arg(long, default_value_t = 100, value_parser = clap::value_parser!(u32).range(1..))]
    rows_per_crop: u32,
}

#[derive(Debug)]
enum CliError {
    Usage(String),
    Data(String),
}

impl From<KisanError> for CliError {
    fn from(e: KisanError) -> Self {
        match e {
            KisanError::Validation(_) => CliError::Usage(e.to_string()),
            other => CliError::Data(other.to_string()),
        }
    }
}

impl From<ServiceError> for CliError {
    fn from(e: ServiceError) -> Self {
        CliError::Data(e.to_string())
    }
}

type CliResult<T> = Result<T, CliError>;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // --help and --version also arrive here, on stdout.
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let result = match cli.command {
        Command::Train(a) => commands::train(a),
        Command::Benchmark(a) => commands::benchmark(a),
        Command::Forecast(a) => commands::forecast(a),
        Command::Recommend(a) => commands::recommend(a),
        Command::Serve(a) => commands::serve(a),
        Command::Synth(a) => commands::synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::Usage(msg)) => {
            eprintln!("kisan: {msg}");
            ExitCode::from(1)
        }
        Err(CliError::Data(msg)) => {
            eprintln!("kisan: {msg}");
            ExitCode::from(2)
        }
    }
}

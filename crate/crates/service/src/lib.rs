//! HTTP service over an immutable model bundle snapshot.
//!
//! Handlers read the current snapshot through an `Arc` clone; a reload
//! (SIGHUP or [`AppState::reload`]) builds a new snapshot and swaps the
//! pointer, so in-flight requests finish against the snapshot they started
//! with.

mod body;
mod error;
mod routes;

use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, RwLock};

use kisan_core::benchmark::BenchmarkDocument;
use kisan_core::bundle::{load_bundle, ModelBundle};
use kisan_core::KisanError;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

pub use error::ApiError;
pub use routes::router;

/// Startup configuration. Precedence: flags, then environment, then
/// defaults.
#[derive(Debug, Clone, clap::Args)]
pub struct ServeArgs {
    /// Model bundle to serve.
    #[arg(long, env = "KISAN_BUNDLE", default_value = "model.kisan.json")]
    pub bundle: PathBuf,
    /// Listen address.
    #[arg(long, env = "KISAN_BIND", default_value = "127.0.0.1:8080")]
    pub bind: String,
    /// Allowed CORS origin; repeat the flag or comma-separate in the env var.
    #[arg(long = "cors", env = "KISAN_CORS", value_delimiter = ',')]
    pub cors: Vec<String>,
    /// Benchmark report served at /api/v1/benchmark/latest.
    #[arg(long, env = "KISAN_BENCHMARK_REPORT")]
    pub benchmark_report: Option<PathBuf>,
}

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error("cannot load bundle {path}: {source}")]
    Bundle { path: String, source: KisanError },
    #[error("cannot load benchmark report {path}: {message}")]
    Benchmark { path: String, message: String },
    #[error("cannot bind {addr}: {source}")]
    Bind { addr: String, source: std::io::Error },
    #[error("server error: {0}")]
    Server(std::io::Error),
}

/// Everything a request may read. Never mutated after construction.
#[derive(Debug)]
pub struct Snapshot {
    pub bundle: ModelBundle,
    pub benchmark: Option<BenchmarkDocument>,
}

impl Snapshot {
    pub fn load(args: &ServeArgs) -> Result<Self, ServiceError> {
        let bundle = load_bundle(&args.bundle).map_err(|source| ServiceError::Bundle {
            path: args.bundle.display().to_string(),
            source,
        })?;
        let benchmark = match &args.benchmark_report {
            Some(path) if path.exists() => {
                let err = |message: String| ServiceError::Benchmark {
                    path: path.display().to_string(),
                    message,
                };
                let text = std::fs::read_to_string(path).map_err(|e| err(e.to_string()))?;
                Some(serde_json::from_str(&text).map_err(|e| err(e.to_string()))?)
            }
            _ => None,
        };
        Ok(Self { bundle, benchmark })
    }
}

#[derive(Debug)]
pub struct AppState {
    snapshot: RwLock<Arc<Snapshot>>,
    args: ServeArgs,
    requests: AtomicU64,
}

impl AppState {
    pub fn new(snapshot: Snapshot, args: ServeArgs) -> Arc<Self> {
        Arc::new(Self {
            snapshot: RwLock::new(Arc::new(snapshot)),
            args,
            requests: AtomicU64::new(0),
        })
    }

    pub fn snapshot(&self) -> Arc<Snapshot> {
        self.requests.fetch_add(1, Ordering::Relaxed);
        match self.snapshot.read() {
            Ok(guard) => Arc::clone(&guard),
            Err(poisoned) => Arc::clone(&poisoned.into_inner()),
        }
    }

    /// Replaces the whole snapshot at once.
    pub fn swap(&self, next: Snapshot) {
        let next = Arc::new(next);
        match self.snapshot.write() {
            Ok(mut guard) => *guard = next,
            Err(poisoned) => *poisoned.into_inner() = next,
        }
    }

    /// Reloads bundle and report from the configured paths. On failure
    /// the current snapshot stays active.
    pub fn reload(&self) -> Result<(), ServiceError> {
        self.swap(Snapshot::load(&self.args)?);
        Ok(())
    }

    pub fn requests_served(&self) -> u64 {
        self.requests.load(Ordering::Relaxed)
    }

    pub fn args(&self) -> &ServeArgs {
        &self.args
    }
}

/// A server accepting connections in the background.
pub struct RunningServer {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    handle: JoinHandle<Result<(), ServiceError>>,
}

impl RunningServer {
    /// Stops accepting, drains in-flight requests and waits for the task.
    pub async fn shutdown(mut self) -> Result<(), ServiceError> {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        self.handle
            .await
            .map_err(|e| ServiceError::Server(std::io::Error::other(e)))?
    }
}

/// Loads the snapshot, binds and starts serving. Readiness implies the
/// bundle has been loaded.
pub async fn start(args: ServeArgs) -> Result<RunningServer, ServiceError> {
    let snapshot = Snapshot::load(&args)?;
    let listener = TcpListener::bind(&args.bind)
        .await
        .map_err(|source| ServiceError::Bind {
            addr: args.bind.clone(),
            source,
        })?;
    let addr = listener.local_addr().map_err(ServiceError::Server)?;
    let state = AppState::new(snapshot, args);
    let app = router(Arc::clone(&state));
    let (tx, rx) = oneshot::channel::<()>();
    let handle = tokio::spawn(async move {
        axum::serve(listener, app)
            .with_graceful_shutdown(async move {
                let _ = rx.await;
            })
            .await
            .map_err(ServiceError::Server)
    });
    Ok(RunningServer {
        addr,
        state,
        shutdown: Some(tx),
        handle,
    })
}

/// Serves until SIGINT or SIGTERM; SIGHUP reloads the snapshot.
pub async fn serve(args: ServeArgs) -> Result<(), ServiceError> {
    let server = start(args).await?;
    eprintln!(
        "kisan: serving {} on http://{}",
        server.state.args().bundle.display(),
        server.addr
    );
    let state = Arc::clone(&server.state);
    wait_for_shutdown(state).await;
    eprintln!("kisan: shutting down");
    server.shutdown().await
}

#[cfg(unix)]
async fn wait_for_shutdown(state: Arc<AppState>) {
    use tokio::signal::unix::{signal, SignalKind};
    let (Ok(mut hup), Ok(mut term)) = (signal(SignalKind::hangup()), signal(SignalKind::terminate())) else {
        let _ = tokio::signal::ctrl_c().await;
        return;
    };
    loop {
        tokio::select! {
            _ = hup.recv() => match state.reload() {
                Ok(()) => eprintln!("kisan: snapshot reloaded"),
                Err(e) => eprintln!("kisan: reload failed, keeping current snapshot: {e}"),
            },
            _ = term.recv() => return,
            _ = tokio::signal::ctrl_c() => return,
        }
    }
}

#[cfg(not(unix))]
async fn wait_for_shutdown(_state: Arc<AppState>) {
    let _ = tokio::signal::ctrl_c().await;
}

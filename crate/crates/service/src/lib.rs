//! HTTP front end of the notification engine: walker profiles, fix
//! ingestion, content submission, nearby queries and model administration.
//! The wire client used by the simulator lives in [`client`].

pub mod client;
mod error;
mod routes;
mod users;

pub use client::WireClient;
pub use error::{ApiError, ErrorCode};
pub use routes::{router, ContentSubmission, Created, FixRequest, NearItem, TrainRequest, TrainResponse};
pub use users::{Profile, UserBook, USERS_FILE};

use std::fs;
use std::io;
use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::{Arc, Mutex};
use std::thread::JoinHandle;

use thiserror::Error;
use tokio::sync::oneshot;

use snbi_core::bayes::{BayesNet, CandidateMap, Structure};
use snbi_core::selector::{Engine, EngineError, SelectorConfig, UsefulPriors};
use snbi_core::store::{Store, StoreError};

pub const MODEL_FILE: &str = "model.json";
pub const DEFAULT_MAX_NEAR_RADIUS_M: f64 = 2000.0;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error(transparent)]
    Store(#[from] StoreError),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("{}:{line}: {message}", path.display())]
    CorruptFile {
        path: PathBuf,
        line: usize,
        message: String,
    },
    #[error("cannot bind {addr}: {source}")]
    Bind {
        addr: SocketAddr,
        #[source]
        source: io::Error,
    },
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub data_dir: PathBuf,
    pub selector: SelectorConfig,
    pub max_near_radius_m: f64,
    /// Laplace pseudo-count used by `/admin/train` and `/admin/eval`.
    pub alpha: f64,
}

impl ServiceConfig {
    pub fn new(data_dir: impl Into<PathBuf>) -> Self {
        ServiceConfig {
            data_dir: data_dir.into(),
            selector: SelectorConfig::default(),
            max_near_radius_m: DEFAULT_MAX_NEAR_RADIUS_M,
            alpha: 1.0,
        }
    }
}

/// Everything a request handler needs.
pub struct AppState {
    pub engine: Engine,
    pub users: Mutex<UserBook>,
    pub config: ServiceConfig,
    pub structure: Structure,
    /// Dataset of the last successful training, used by eval.
    pub dataset: Mutex<Option<PathBuf>>,
    trained: AtomicBool,
}

impl AppState {
    /// Opens or creates the data directory. The serving model is
    /// `model.json` when present, otherwise an untrained uniform network.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let dir = &config.data_dir;
        fs::create_dir_all(dir).map_err(|source| ServiceError::Io {
            path: dir.clone(),
            source,
        })?;
        let store = Store::open(dir, config.selector.stationary_threshold_m)?;
        let users = UserBook::open(dir)?;
        let structure = Structure::default_reaction_model();
        let (model, trained) = match load_model(&dir.join(MODEL_FILE))? {
            Some(net) => (net, true),
            None => (BayesNet::uniform(structure.clone()), false),
        };
        let engine = Engine::new(
            store,
            model,
            CandidateMap::default(),
            UsefulPriors::default(),
            config.selector.clone(),
        )?;
        Ok(AppState {
            engine,
            users: Mutex::new(users),
            config,
            structure,
            dataset: Mutex::new(None),
            trained: AtomicBool::new(trained),
        })
    }

    pub fn is_trained(&self) -> bool {
        self.trained.load(Ordering::SeqCst)
    }

    /// Replaces the serving network and persists it.
    pub fn install_model(&self, net: BayesNet) -> Result<(), ServiceError> {
        save_model(&self.config.data_dir.join(MODEL_FILE), &net)?;
        self.engine.swap_model(net);
        self.trained.store(true, Ordering::SeqCst);
        Ok(())
    }

    /// Absolute paths are used as given, relative ones under the data dir.
    pub fn resolve(&self, path: &Path) -> PathBuf {
        if path.is_absolute() {
            path.to_path_buf()
        } else {
            self.config.data_dir.join(path)
        }
    }
}

pub fn load_model(path: &Path) -> Result<Option<BayesNet>, ServiceError> {
    match fs::read_to_string(path) {
        Ok(text) => serde_json::from_str(&text).map(Some).map_err(|e| ServiceError::CorruptFile {
            path: path.to_path_buf(),
            line: e.line(),
            message: e.to_string(),
        }),
        Err(e) if e.kind() == io::ErrorKind::NotFound => Ok(None),
        Err(source) => Err(ServiceError::Io {
            path: path.to_path_buf(),
            source,
        }),
    }
}

/// Writes through a temporary file so readers never see a partial model.
pub fn save_model(path: &Path, net: &BayesNet) -> Result<(), ServiceError> {
    let tmp = path.with_extension("json.tmp");
    let io_err = |p: &Path| {
        let p = p.to_path_buf();
        move |source| ServiceError::Io { path: p, source }
    };
    let text = serde_json::to_string_pretty(net).expect("nets serialize");
    fs::write(&tmp, text).map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

pub fn bind(addr: SocketAddr) -> Result<std::net::TcpListener, ServiceError> {
    let listener = std::net::TcpListener::bind(addr).map_err(|source| ServiceError::Bind { addr, source })?;
    listener
        .set_nonblocking(true)
        .map_err(|source| ServiceError::Bind { addr, source })?;
    Ok(listener)
}

/// Serves until `shutdown` resolves.
pub async fn serve(
    listener: std::net::TcpListener,
    state: Arc<AppState>,
    shutdown: impl std::future::Future<Output = ()> + Send + 'static,
) -> io::Result<()> {
    let listener = tokio::net::TcpListener::from_std(listener)?;
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown)
        .await
}

fn runtime() -> io::Result<tokio::runtime::Runtime> {
    tokio::runtime::Builder::new_multi_thread().enable_all().build()
}

/// Blocks the calling thread serving requests until the process ends.
pub fn run_forever(listener: std::net::TcpListener, state: Arc<AppState>) -> io::Result<()> {
    runtime()?.block_on(serve(listener, state, std::future::pending()))
}

/// A server running on a background thread; stops on drop.
pub struct ServerHandle {
    pub addr: SocketAddr,
    pub state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<JoinHandle<io::Result<()>>>,
}

impl ServerHandle {
    pub fn url(&self) -> String {
        format!("http://{}", self.addr)
    }
}

impl Drop for ServerHandle {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

pub fn spawn(state: AppState, addr: SocketAddr) -> Result<ServerHandle, ServiceError> {
    let listener = bind(addr)?;
    let addr = listener.local_addr().map_err(|source| ServiceError::Bind { addr, source })?;
    let state = Arc::new(state);
    let (tx, rx) = oneshot::channel();
    let shared = state.clone();
    let thread = std::thread::spawn(move || {
        runtime()?.block_on(serve(listener, shared, async {
            let _ = rx.await;
        }))
    });
    Ok(ServerHandle {
        addr,
        state,
        shutdown: Some(tx),
        thread: Some(thread),
    })
}

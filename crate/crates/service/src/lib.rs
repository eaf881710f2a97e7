//! HTTP service over a workspace directory.
//!
//! Matrices are stored one JSON record per name, calculation jobs are
//! traced and verified on submission, then rendered to frames by a single
//! background worker. State lives on disk; reopening a workspace restores
//! it and re-queues unfinished jobs.

mod api;
mod jobs;
mod upload;
pub mod workspace;

use std::collections::BTreeMap;
use std::net::SocketAddr;
use std::path::PathBuf;
use std::sync::{Arc, RwLock};

use axum::Router;
use matrixlens_core::detect::DetectorOptions;
use matrixlens_core::render::Style;
use thiserror::Error;
use tokio::sync::mpsc;

pub use workspace::{JobRecord, JobState, MatrixRecord, Source, Workspace};

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("workspace {path}: {source}")]
    Workspace { path: PathBuf, source: std::io::Error },
    #[error("bind {addr}: {source}")]
    Bind { addr: SocketAddr, source: std::io::Error },
}

#[derive(Debug, Clone)]
pub struct ServiceConfig {
    pub workspace: PathBuf,
    pub style: Style,
    pub fps: u32,
    /// Detector used for uploads without a label fixture.
    pub detector: String,
    pub detector_options: DetectorOptions,
    pub dedup_tau: f64,
    /// Try to encode an MP4 after rendering.
    pub encode: bool,
    pub encoder: String,
}

impl ServiceConfig {
    pub fn new(workspace: impl Into<PathBuf>) -> Self {
        Self {
            workspace: workspace.into(),
            style: Style::default(),
            fps: 30,
            detector: "oracle".into(),
            detector_options: DetectorOptions::default(),
            dedup_tau: 0.5,
            encode: false,
            encoder: matrixlens_core::render::encoder_from_env(),
        }
    }
}

pub(crate) struct Shared {
    pub config: ServiceConfig,
    pub ws: Workspace,
    pub matrices: RwLock<BTreeMap<String, MatrixRecord>>,
    pub jobs: RwLock<BTreeMap<u64, JobRecord>>,
}

#[derive(Clone)]
pub struct AppState {
    pub(crate) shared: Arc<Shared>,
    pub(crate) queue: mpsc::UnboundedSender<u64>,
}

pub struct Service {
    state: AppState,
    pub warnings: Vec<String>,
}

impl Service {
    /// Load the workspace and start the render worker. Must run inside a
    /// tokio runtime. The worker stops once every router built from this
    /// service has been dropped.
    pub fn open(config: ServiceConfig) -> Result<Self, ServiceError> {
        let ws = Workspace::new(&config.workspace);
        let loaded = ws.load().map_err(|source| ServiceError::Workspace { path: config.workspace.clone(), source })?;
        let pending: Vec<u64> = loaded
            .jobs
            .values()
            .filter(|j| matches!(j.state, JobState::Queued | JobState::Rendering))
            .map(|j| j.id)
            .collect();
        let shared = Arc::new(Shared {
            config,
            ws,
            matrices: RwLock::new(loaded.matrices),
            jobs: RwLock::new(loaded.jobs),
        });
        let (tx, rx) = mpsc::unbounded_channel();
        for id in pending {
            log::info!("re-queueing job {id}");
            tx.send(id).expect("receiver alive");
        }
        tokio::spawn(jobs::worker(shared.clone(), rx));
        Ok(Self { state: AppState { shared, queue: tx }, warnings: loaded.warnings })
    }

    pub fn router(&self) -> Router {
        api::router(self.state.clone())
    }

    pub fn into_router(self) -> Router {
        api::router(self.state)
    }
}

/// Open the workspace and serve until the process is stopped.
pub async fn serve(config: ServiceConfig, addr: SocketAddr) -> Result<(), ServiceError> {
    let service = Service::open(config)?;
    for w in &service.warnings {
        log::warn!("{w}");
    }
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Bind { addr, source })?;
    log::info!("listening on {}", listener.local_addr().map_or(addr, |a| a));
    axum::serve(listener, service.into_router())
        .await
        .map_err(|source| ServiceError::Bind { addr, source })
}

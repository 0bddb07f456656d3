//! Read-only HTTP API over a frozen graph snapshot and its fact index.
//!
//! Routes live under `/v1`. The snapshot is loaded once at startup and shared by
//! reference; until it is loaded every route except `/v1/health` answers 503.

mod error;

use std::net::SocketAddr;
use std::path::{Path, PathBuf};
use std::sync::{Arc, RwLock};

use axum::body::Bytes;
use axum::extract::{Path as UrlPath, State};
use axum::http::{HeaderValue, Method};
use axum::routing::{get, post};
use axum::{Json, Router};
use lkg_core::graph::{export_jsonld, FrozenGraph, GraphSnapshot, GraphStats, LkgNode, ReasoningPath};
use lkg_core::index::{Embedder, EmbedderConfig, IndexError};
use lkg_core::search::{retrieve_provisions, SearchQuery};
use lkg_core::VectorIndexF32;
use serde::{Deserialize, Serialize};
use serde_json::Value;
use thiserror::Error;
use tower_http::cors::{AllowOrigin, CorsLayer};

pub use error::ApiError;

pub const DEFAULT_K: usize = 3;
pub const MAX_K: usize = 100;

#[derive(Debug, Error)]
pub enum ServiceError {
    #[error("cannot read {path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("snapshot: {0}")]
    Snapshot(#[from] lkg_core::graph::GraphError),
    #[error("index: {0}")]
    Index(#[from] IndexError),
    #[error("config: {0}")]
    Config(String),
}

/// Environment-driven settings: `LKG_SERVICE_ADDR`, `LKG_SNAPSHOT_PATH`,
/// `LKG_INDEX_PATH`, `LKG_CORS_ORIGINS` (comma separated).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct ServiceConfig {
    pub addr: String,
    pub snapshot_path: Option<PathBuf>,
    pub index_path: Option<PathBuf>,
    pub cors_origins: Vec<String>,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        Self {
            addr: "127.0.0.1:8080".into(),
            snapshot_path: None,
            index_path: None,
            cors_origins: Vec::new(),
        }
    }
}

impl ServiceConfig {
    pub fn apply_env(&mut self) {
        self.apply_vars(|k| std::env::var(k).ok())
    }

    pub fn apply_vars(&mut self, get: impl Fn(&str) -> Option<String>) {
        if let Some(v) = get("LKG_SERVICE_ADDR") {
            self.addr = v;
        }
        if let Some(v) = get("LKG_SNAPSHOT_PATH") {
            self.snapshot_path = Some(v.into());
        }
        if let Some(v) = get("LKG_INDEX_PATH") {
            self.index_path = Some(v.into());
        }
        if let Some(v) = get("LKG_CORS_ORIGINS") {
            self.cors_origins = v.split(',').map(str::trim).filter(|s| !s.is_empty()).map(String::from).collect();
        }
    }
}

/// Everything a request reads. Never mutated once built.
pub struct Loaded {
    pub graph: FrozenGraph,
    pub fingerprint: String,
    pub stats: GraphStats,
    pub index: Option<VectorIndexF32>,
    pub embedder: Embedder,
}

impl Loaded {
    pub fn new(graph: FrozenGraph, index: Option<VectorIndexF32>, embedder: Embedder) -> Self {
        let fingerprint = GraphSnapshot::from_graph(&graph).fingerprint;
        let stats = graph.stats();
        if let Some(ix) = &index {
            let missing = ix.entries().filter(|(id, _)| graph.node(id).is_none()).count();
            if missing > 0 {
                tracing::warn!(missing, "index lists facts absent from the snapshot");
            }
        }
        Self {
            graph,
            fingerprint,
            stats,
            index,
            embedder,
        }
    }

    /// Reads a snapshot file and, optionally, an index file built with `embedder`.
    pub fn from_files(snapshot: &Path, index: Option<&Path>, embedder: Embedder) -> Result<Self, ServiceError> {
        let read = |p: &Path| {
            std::fs::read_to_string(p).map_err(|source| ServiceError::Io {
                path: p.to_path_buf(),
                source,
            })
        };
        let graph = GraphSnapshot::from_json(&read(snapshot)?)?.into_graph()?.freeze();
        let index = match index {
            Some(p) => Some(VectorIndexF32::from_json(&read(p)?, Some(&embedder.fingerprint()))?),
            None => None,
        };
        Ok(Self::new(graph, index, embedder))
    }
}

/// Shared handle; the snapshot slot is swapped once, at load.
#[derive(Clone, Default)]
pub struct AppState {
    slot: Arc<RwLock<Option<Arc<Loaded>>>>,
}

impl AppState {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn loaded(loaded: Loaded) -> Self {
        let s = Self::new();
        s.install(loaded);
        s
    }

    pub fn install(&self, loaded: Loaded) {
        *self.slot.write().expect("state lock") = Some(Arc::new(loaded));
    }

    pub fn current(&self) -> Option<Arc<Loaded>> {
        self.slot.read().expect("state lock").clone()
    }

    fn require(&self) -> Result<Arc<Loaded>, ApiError> {
        self.current().ok_or_else(|| ApiError::unavailable("snapshot not loaded"))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SearchBody {
    text: Option<String>,
    fact_id: Option<String>,
    k: Option<usize>,
    mask: Option<bool>,
}

#[derive(Debug, Serialize)]
struct PathOut {
    fact: String,
    application: String,
    norm: Option<String>,
    provision: Option<String>,
    similarity: f32,
}

#[derive(Debug, Serialize)]
struct HitOut {
    provision: String,
    score: f32,
    paths: Vec<PathOut>,
}

#[derive(Debug, Serialize)]
struct SearchOut {
    hits: Vec<HitOut>,
}

async fn search(State(state): State<AppState>, body: Bytes) -> Result<Json<SearchOut>, ApiError> {
    let body: SearchBody = serde_json::from_slice(&body).map_err(|e| ApiError::invalid(format!("body: {e}")))?;
    let k = body.k.unwrap_or(DEFAULT_K);
    if !(1..=MAX_K).contains(&k) {
        return Err(ApiError::invalid(format!("k must be in 1..={MAX_K}")));
    }
    let query = SearchQuery {
        text: body.text,
        fact_id: body.fact_id,
        k,
        mask: body.mask.unwrap_or(true),
    };
    query.validate()?;
    let loaded = state.require()?;
    if loaded.index.is_none() {
        return Err(ApiError::unavailable("no fact index loaded"));
    }
    // The embedder may block on a remote call.
    let hits = tokio::task::spawn_blocking(move || {
        let ix = loaded.index.as_ref().expect("checked above");
        retrieve_provisions(&query, &loaded.graph, ix, &loaded.embedder)
    })
    .await
    .map_err(|e| ApiError::internal(e.to_string()))??;
    Ok(Json(SearchOut {
        hits: hits
            .into_iter()
            .map(|h| HitOut {
                provision: h.provision.canonical_string(),
                score: h.score,
                paths: h
                    .supporting_paths
                    .into_iter()
                    .map(|sp| PathOut {
                        fact: sp.path.fact,
                        application: sp.path.application,
                        norm: sp.path.norm,
                        provision: sp.path.provision,
                        similarity: sp.similarity,
                    })
                    .collect(),
            })
            .collect(),
    }))
}

async fn node(State(state): State<AppState>, UrlPath(id): UrlPath<String>) -> Result<Json<LkgNode>, ApiError> {
    let loaded = state.require()?;
    let n = loaded.graph.node(&id).ok_or_else(|| ApiError::not_found(format!("unknown node `{id}`")))?;
    Ok(Json(n.clone()))
}

async fn fact_paths(
    State(state): State<AppState>,
    UrlPath(id): UrlPath<String>,
) -> Result<Json<Vec<ReasoningPath>>, ApiError> {
    let loaded = state.require()?;
    Ok(Json(loaded.graph.reasoning_paths(&id, usize::MAX, true)?))
}

async fn stats(State(state): State<AppState>) -> Result<Json<GraphStats>, ApiError> {
    Ok(Json(state.require()?.stats.clone()))
}

async fn export(State(state): State<AppState>) -> Result<Json<Value>, ApiError> {
    Ok(Json(export_jsonld(&state.require()?.graph)))
}

async fn health(State(state): State<AppState>) -> Json<Value> {
    Json(match state.current() {
        Some(l) => serde_json::json!({"status": "ok", "snapshot": l.fingerprint}),
        None => serde_json::json!({"status": "starting"}),
    })
}

async fn fallback() -> ApiError {
    ApiError::not_found("no such route")
}

/// The `/v1` API. CORS is enabled only for the listed origins.
pub fn router(state: AppState, cors_origins: &[String]) -> Router {
    let mut app = Router::new()
        .route("/v1/search", post(search))
        .route("/v1/nodes/{id}", get(node))
        .route("/v1/facts/{id}/paths", get(fact_paths))
        .route("/v1/stats", get(stats))
        .route("/v1/export/jsonld", get(export))
        .route("/v1/health", get(health))
        .fallback(fallback)
        .with_state(state);
    let origins: Vec<HeaderValue> = cors_origins.iter().filter_map(|o| o.parse().ok()).collect();
    if !origins.is_empty() {
        app = app.layer(
            CorsLayer::new()
                .allow_origin(AllowOrigin::list(origins))
                .allow_methods([Method::GET, Method::POST])
                .allow_headers([axum::http::header::CONTENT_TYPE]),
        );
    }
    app
}

/// Binds, loads the configured snapshot in the background and serves until Ctrl-C.
pub async fn serve(config: ServiceConfig, embedder: EmbedderConfig) -> Result<(), ServiceError> {
    let addr: SocketAddr = config
        .addr
        .parse()
        .map_err(|e| ServiceError::Config(format!("LKG_SERVICE_ADDR `{}`: {e}", config.addr)))?;
    let snapshot = config
        .snapshot_path
        .clone()
        .ok_or_else(|| ServiceError::Config("LKG_SNAPSHOT_PATH is not set".into()))?;
    let embedder = Embedder::new(embedder)?;
    let state = AppState::new();
    let app = router(state.clone(), &config.cors_origins);
    let listener = tokio::net::TcpListener::bind(addr).await.map_err(|source| ServiceError::Io {
        path: PathBuf::from(&config.addr),
        source,
    })?;
    tracing::info!(%addr, "listening");

    let index = config.index_path.clone();
    let loaded = tokio::task::spawn_blocking(move || Loaded::from_files(&snapshot, index.as_deref(), embedder))
        .await
        .map_err(|e| ServiceError::Config(e.to_string()))??;
    tracing::info!(snapshot = %loaded.fingerprint, nodes = loaded.graph.node_count(), "snapshot loaded");
    state.install(loaded);

    axum::serve(listener, app)
        .with_graceful_shutdown(async {
            let _ = tokio::signal::ctrl_c().await;
        })
        .await
        .map_err(|source| ServiceError::Io {
            path: PathBuf::from(&config.addr),
            source,
        })
}

//! Async service exposing safe-set computation, batch simulation and
//! interactive sessions over HTTP/JSON, plus the line-delimited session
//! protocol over TCP or stdio.

use std::collections::HashMap;
use std::future::Future;
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Instant;

use axum::extract::rejection::JsonRejection;
use axum::extract::{Path, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use gridsafe_core::api::{
    self, ApiError, ErrorBody, Health, OpenSessionRequest, SafeSetRequest, SafeSetResponse, SessionInfo,
    SimulateRequest, SimulateResponse,
};
use gridsafe_core::config::Config;
use gridsafe_core::env::{MicrogridEnv, Observation};
use gridsafe_core::protocol::Session;
use gridsafe_core::reach::SafeSetCache;
use gridsafe_core::Error;
use parking_lot::Mutex;
use serde_json::Value;
use tokio::net::TcpListener;
use tokio::sync::oneshot;
use tokio::task::JoinHandle;

mod ndjson;

pub use ndjson::{serve_ndjson, serve_ndjson_stream};

/// Shared state behind every route.
pub struct AppState {
    config: Config,
    cache: Arc<SafeSetCache>,
    sessions: Mutex<HashMap<u64, Arc<Mutex<Session>>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(config: Config) -> Arc<Self> {
        Arc::new(AppState {
            config,
            cache: Arc::new(SafeSetCache::default()),
            sessions: Mutex::new(HashMap::new()),
            next_id: AtomicU64::new(1),
        })
    }

    pub fn config(&self) -> &Config {
        &self.config
    }

    pub fn session_count(&self) -> usize {
        self.sessions.lock().len()
    }

    /// Builds a fresh environment sharing this server's safe-set cache.
    pub fn new_env(&self, cfg: Option<&Config>) -> Result<MicrogridEnv, Error> {
        let cfg = cfg.unwrap_or(&self.config);
        cfg.validate()?;
        Ok(MicrogridEnv::new(cfg.env_config(), cfg.dataset()?)?.with_cache(self.cache.clone()))
    }
}

#[derive(Debug, thiserror::Error)]
pub enum ServerError {
    #[error(transparent)]
    Core(#[from] Error),
    #[error("bad request: {0}")]
    BadRequest(String),
    #[error("no session with id {0}")]
    UnknownSession(u64),
    #[error("worker task failed: {0}")]
    Join(#[from] tokio::task::JoinError),
}

impl ServerError {
    fn status(&self) -> StatusCode {
        match self {
            ServerError::Core(e) => match e.exit_code() {
                2 => StatusCode::BAD_REQUEST,
                3 => StatusCode::UNPROCESSABLE_ENTITY,
                _ => StatusCode::INTERNAL_SERVER_ERROR,
            },
            ServerError::BadRequest(_) => StatusCode::BAD_REQUEST,
            ServerError::UnknownSession(_) => StatusCode::NOT_FOUND,
            ServerError::Join(_) => StatusCode::INTERNAL_SERVER_ERROR,
        }
    }

    pub fn to_api(&self) -> ApiError {
        match self {
            ServerError::Core(e) => ApiError::from(e),
            ServerError::BadRequest(m) => ApiError {
                kind: "bad_request".into(),
                message: m.clone(),
                exit_code: 2,
            },
            ServerError::UnknownSession(_) => ApiError {
                kind: "not_found".into(),
                message: self.to_string(),
                exit_code: 2,
            },
            ServerError::Join(_) => ApiError {
                kind: "internal".into(),
                message: self.to_string(),
                exit_code: 4,
            },
        }
    }
}

impl From<JsonRejection> for ServerError {
    fn from(r: JsonRejection) -> Self {
        ServerError::BadRequest(r.body_text())
    }
}

impl IntoResponse for ServerError {
    fn into_response(self) -> Response {
        if self.status().is_server_error() {
            tracing::error!(error = %self, "request failed");
        } else {
            tracing::debug!(error = %self, "request rejected");
        }
        (self.status(), Json(ErrorBody { error: self.to_api() })).into_response()
    }
}

type ApiResult<T> = Result<Json<T>, ServerError>;

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/health", get(health))
        .route("/v1/safeset", post(safeset))
        .route("/v1/simulate", post(simulate))
        .route("/v1/sessions", post(open_session))
        .route("/v1/sessions/{id}/frame", post(frame))
        .route("/v1/sessions/{id}", axum::routing::delete(close_session))
        .with_state(state)
}

async fn health() -> Json<Health> {
    Json(Health {
        status: "ok".into(),
        version: env!("CARGO_PKG_VERSION").into(),
    })
}

async fn safeset(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SafeSetRequest>, JsonRejection>,
) -> ApiResult<SafeSetResponse> {
    let Json(req) = body?;
    let started = Instant::now();
    let resp = tokio::task::spawn_blocking(move || {
        let cfg = req.config.as_ref().unwrap_or(&state.config);
        api::safe_sets(cfg, &req)
    })
    .await??;
    tracing::info!(day = resp.day, t0 = resp.t0, elapsed = ?started.elapsed(), "safe sets computed");
    Ok(Json(resp))
}

async fn simulate(
    State(state): State<Arc<AppState>>,
    body: Result<Json<SimulateRequest>, JsonRejection>,
) -> ApiResult<SimulateResponse> {
    let Json(req) = body?;
    let resp = tokio::task::spawn_blocking(move || {
        let cfg = req.config.as_ref().unwrap_or(&state.config);
        api::simulate(cfg, &req)
    })
    .await??;
    tracing::info!(
        days = resp.metrics.days,
        steps = resp.metrics.steps,
        mean_step_s = resp.metrics.mean_exec_time,
        elapsed_s = resp.elapsed_s,
        "simulation finished"
    );
    Ok(Json(resp))
}

async fn open_session(
    State(state): State<Arc<AppState>>,
    body: Option<Json<OpenSessionRequest>>,
) -> ApiResult<SessionInfo> {
    let req = body.map(|Json(r)| r).unwrap_or_default();
    let st = state.clone();
    let env = tokio::task::spawn_blocking(move || st.new_env(req.config.as_ref())).await??;
    let cfg = env.config();
    let info = SessionInfo {
        id: state.next_id.fetch_add(1, Ordering::Relaxed),
        layout: Observation::layout(cfg.grid.n(), &cfg.forecast.horizons),
        action_dim: env.action_dim(),
        days: env.dataset().days(),
    };
    state.sessions.lock().insert(info.id, Arc::new(Mutex::new(Session::new(env))));
    tracing::info!(id = info.id, "session opened");
    Ok(Json(info))
}

/// Forwards one protocol frame. Protocol errors come back in-band with 200;
/// only an unknown session id is an HTTP error.
async fn frame(State(state): State<Arc<AppState>>, Path(id): Path<u64>, body: String) -> ApiResult<Value> {
    let session = state
        .sessions
        .lock()
        .get(&id)
        .cloned()
        .ok_or(ServerError::UnknownSession(id))?;
    let started = Instant::now();
    let reply = tokio::task::spawn_blocking(move || session.lock().handle_line(&body)).await?;
    tracing::debug!(id, latency = ?started.elapsed(), "frame handled");
    Ok(Json(reply))
}

async fn close_session(State(state): State<Arc<AppState>>, Path(id): Path<u64>) -> Result<StatusCode, ServerError> {
    state
        .sessions
        .lock()
        .remove(&id)
        .map(|_| StatusCode::NO_CONTENT)
        .ok_or(ServerError::UnknownSession(id))
}

/// Serves HTTP on `listener` until `shutdown` resolves.
pub async fn serve_http(
    listener: TcpListener,
    state: Arc<AppState>,
    shutdown: impl Future<Output = ()> + Send + 'static,
) -> std::io::Result<()> {
    tracing::info!(addr = ?listener.local_addr()?, "http service listening");
    axum::serve(listener, router(state)).with_graceful_shutdown(shutdown).await
}

/// A server running on a background task, used for embedding.
pub struct ServerHandle {
    addr: SocketAddr,
    stop: Option<oneshot::Sender<()>>,
    task: JoinHandle<std::io::Result<()>>,
}

impl ServerHandle {
    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn base_url(&self) -> String {
        format!("http://{}", self.addr)
    }

    pub async fn shutdown(mut self) -> std::io::Result<()> {
        if let Some(tx) = self.stop.take() {
            let _ = tx.send(());
        }
        self.task.await.unwrap_or_else(|e| Err(std::io::Error::other(e)))
    }
}

/// Binds `addr` (port 0 picks a free port) and serves HTTP in the background.
pub async fn spawn(state: Arc<AppState>, addr: SocketAddr) -> std::io::Result<ServerHandle> {
    let listener = TcpListener::bind(addr).await?;
    let addr = listener.local_addr()?;
    let (tx, rx) = oneshot::channel::<()>();
    let task = tokio::spawn(serve_http(listener, state, async {
        let _ = rx.await;
    }));
    Ok(ServerHandle {
        addr,
        stop: Some(tx),
        task,
    })
}

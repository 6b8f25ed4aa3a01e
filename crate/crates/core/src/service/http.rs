//! HTTP policy decision point.
//!
//! | route | purpose |
//! |-------|---------|
//! | `POST /v1/decide` | decide a request against inline or server-held state |
//! | `POST /v1/events` | apply a request to server-held state if the oracle allows it |
//! | `GET /v1/resources/{id}?requester=u` | snapshot of server-held state |
//! | `GET /healthz` | liveness, answers `ok` |
//!
//! Request bodies are strict: unknown fields, unknown actions and trailing
//! bytes are rejected with 400 and a body naming the offending field.

use std::collections::HashMap;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Arc, Mutex, RwLock};
use std::time::Instant;

use axum::body::Bytes;
use axum::extract::{Path, Query, State};
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::{get, post};
use axum::{Json, Router};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};
use serde_json::json;
use tokio::sync::oneshot;

use super::config::{DeciderKind, ServiceConfig};
use super::remote::RemoteDecider;
use super::ServiceError;
use crate::dsl::{self, Dialect};
use crate::eval::Decider;
use crate::generator::RequestFields;
use crate::model::{snapshot, snapshot_for_request, AccessRequest, Effect, ModelError, StateSnapshot, WorldState};
use crate::oracle::{Decision, Oracle, PolicyId, Verdict};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DecideHttpRequest {
    pub request: RequestFields,
    /// Inline state. Without it the server-held state is used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub state: Option<StateSnapshot>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EventHttpRequest {
    pub request: RequestFields,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DecideHttpResponse {
    pub decision: Verdict,
    pub policy_id: PolicyId,
    pub explanation: String,
    pub satisfied: Vec<String>,
    pub violated: Vec<String>,
    pub decider: String,
    pub latency_ms: f64,
}

impl DecideHttpResponse {
    pub fn new(d: &Decision, decider: &str, latency_ms: f64) -> Self {
        DecideHttpResponse {
            decision: d.verdict,
            policy_id: d.policy.clone(),
            explanation: d.explanation.clone(),
            satisfied: d.satisfied.iter().map(|c| c.to_string()).collect(),
            violated: d.violated.iter().map(|c| c.to_string()).collect(),
            decider: decider.to_owned(),
            latency_ms,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EventHttpResponse {
    pub applied: bool,
    pub effect: Effect,
    pub decision: DecideHttpResponse,
}

/// Machine-readable error body: `{"error": {"code", "field", "message"}}`.
#[derive(Debug)]
pub struct ApiError {
    status: StatusCode,
    code: &'static str,
    field: Option<String>,
    message: String,
}

impl ApiError {
    fn bad_request(field: Option<String>, message: impl Into<String>) -> Self {
        ApiError {
            status: StatusCode::BAD_REQUEST,
            code: "invalid_request",
            field,
            message: message.into(),
        }
    }

    fn from_model(e: ModelError) -> Self {
        let (status, code) = match &e {
            ModelError::NotFound { .. } => (StatusCode::NOT_FOUND, "not_found"),
            ModelError::Conflict(_) => (StatusCode::CONFLICT, "conflict"),
            ModelError::PolicyViolation(_) => (StatusCode::FORBIDDEN, "denied"),
            ModelError::InvalidArgument(_) => (StatusCode::BAD_REQUEST, "invalid_request"),
            ModelError::Integrity(_) => (StatusCode::INTERNAL_SERVER_ERROR, "integrity"),
        };
        ApiError {
            status,
            code,
            field: None,
            message: e.to_string(),
        }
    }
}

impl IntoResponse for ApiError {
    fn into_response(self) -> Response {
        let body = json!({"error": {"code": self.code, "field": self.field, "message": self.message}});
        (self.status, Json(body)).into_response()
    }
}

/// Strict JSON parsing that reports the path of the failing field.
pub fn parse_strict<T: DeserializeOwned>(body: &[u8]) -> Result<T, ApiError> {
    let mut de = serde_json::Deserializer::from_slice(body);
    let value: T = serde_path_to_error::deserialize(&mut de).map_err(|e| {
        let path = e.path().to_string();
        let field = (path != ".").then_some(path);
        ApiError::bad_request(field, e.inner().to_string())
    })?;
    de.end().map_err(|e| ApiError::bad_request(None, e.to_string()))?;
    Ok(value)
}

pub enum Engine {
    Local(Arc<dyn Decider>),
    /// Blocking network client; calls run off the async workers.
    Remote(Arc<RemoteDecider>),
}

impl Engine {
    pub fn name(&self) -> &str {
        match self {
            Engine::Local(d) => d.name(),
            Engine::Remote(r) => r.name(),
        }
    }
}

pub struct AppState {
    engine: Engine,
    world: RwLock<WorldState>,
    audit: Option<Mutex<BufWriter<File>>>,
    next_id: AtomicU64,
}

impl AppState {
    pub fn new(engine: Engine, world: WorldState) -> Self {
        AppState {
            engine,
            world: RwLock::new(world),
            audit: None,
            next_id: AtomicU64::new(1),
        }
    }

    /// Loads the policy file (even when the oracle decides, so a broken
    /// file stops startup), builds the engine and an empty world.
    pub fn from_config(config: &ServiceConfig) -> Result<Self, ServiceError> {
        config.validate()?;
        let policies = match &config.policy_file {
            Some(path) => dsl::load_file(path, Dialect::Full)?,
            None => dsl::classroom(),
        };
        let engine = match config.decider {
            DeciderKind::Oracle => Engine::Local(Arc::new(Oracle::builtin())),
            DeciderKind::Dsl => Engine::Local(Arc::new(policies)),
            DeciderKind::Remote => Engine::Remote(Arc::new(RemoteDecider::new(config.remote.clone())?)),
        };
        let mut state = AppState::new(engine, WorldState::new(config.users, 0)?);
        if let Some(path) = &config.audit_log {
            let file = std::fs::OpenOptions::new()
                .create(true)
                .append(true)
                .open(path)
                .map_err(|e| ServiceError::Io(format!("audit log {}: {e}", path.display())))?;
            state.audit = Some(Mutex::new(BufWriter::new(file)));
        }
        Ok(state)
    }

    pub fn engine(&self) -> &Engine {
        &self.engine
    }

    /// A copy of the server-held state.
    pub fn world(&self) -> WorldState {
        self.world.read().unwrap_or_else(|e| e.into_inner()).clone()
    }

    fn request_id(&self) -> String {
        format!("http-{}", self.next_id.fetch_add(1, Ordering::Relaxed))
    }

    fn audit(&self, endpoint: &str, req: &AccessRequest, d: &Decision, decider: &str, latency_ms: f64) {
        let line = json!({
            "ts": chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Millis, true),
            "endpoint": endpoint,
            "request_id": req.request_id,
            "user_id": req.user,
            "action": req.action,
            "resource_id": req.resource,
            "decision": d.verdict,
            "policy_id": d.policy,
            "violated": d.violated,
            "decider": decider,
            "latency_ms": latency_ms,
        })
        .to_string();
        tracing::info!(target: "audit", "{line}");
        if let Some(out) = &self.audit {
            let mut out = out.lock().unwrap_or_else(|e| e.into_inner());
            let _ = writeln!(out, "{line}").and_then(|_| out.flush());
        }
    }
}

pub fn router(state: Arc<AppState>) -> Router {
    Router::new()
        .route("/v1/decide", post(decide))
        .route("/v1/events", post(event))
        .route("/v1/resources/{id}", get(resource))
        .route("/healthz", get(|| async { "ok" }))
        .fallback(|| async {
            ApiError {
                status: StatusCode::NOT_FOUND,
                code: "not_found",
                field: None,
                message: "no such route".into(),
            }
        })
        .with_state(state)
}

fn check_inline(state: &StateSnapshot, req: &AccessRequest) -> Result<(), ApiError> {
    if state.resource_id != req.resource {
        return Err(ApiError::bad_request(
            Some("state.resource_id".into()),
            format!("state describes {} but the request targets {}", state.resource_id, req.resource),
        ));
    }
    if state.requester != req.user {
        return Err(ApiError::bad_request(
            Some("state.requester".into()),
            format!("state is for requester {} but the request is from {}", state.requester, req.user),
        ));
    }
    state
        .check_consistency()
        .map_err(|m| ApiError::bad_request(Some("state".into()), m))
}

async fn decide(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let body: DecideHttpRequest = parse_strict(&body)?;
    let req = body.request.to_request(app.request_id());
    let snap = match body.state {
        Some(s) => {
            check_inline(&s, &req)?;
            s
        }
        None => {
            let world = app.world.read().unwrap_or_else(|e| e.into_inner());
            snapshot_for_request(&world, &req).map_err(ApiError::from_model)?
        }
    };
    let decision = match &app.engine {
        Engine::Local(d) => d
            .decide(&snap, &req)
            .map_err(|e| ApiError::from_model(ModelError::Integrity(e.to_string())))?,
        Engine::Remote(r) => {
            let (r, snap, req) = (r.clone(), snap.clone(), req.clone());
            tokio::task::spawn_blocking(move || r.decide_fail_closed(&snap, &req))
                .await
                .map_err(|e| ApiError::from_model(ModelError::Integrity(e.to_string())))?
        }
    };
    let latency_ms = started.elapsed().as_secs_f64() * 1e3;
    let name = app.engine.name();
    app.audit("decide", &req, &decision, name, latency_ms);
    Ok(Json(DecideHttpResponse::new(&decision, name, latency_ms)).into_response())
}

async fn event(State(app): State<Arc<AppState>>, body: Bytes) -> Result<Response, ApiError> {
    let started = Instant::now();
    let body: EventHttpRequest = parse_strict(&body)?;
    let req = body.request.to_request(app.request_id());
    // Writers are serialized; the decision and the change see one state.
    let mut world = app.world.write().unwrap_or_else(|e| e.into_inner());
    let snap = snapshot_for_request(&world, &req).map_err(ApiError::from_model)?;
    let decision = Oracle::builtin().decide_snapshot(&snap, &req);
    if !decision.is_allow() {
        drop(world);
        let latency_ms = started.elapsed().as_secs_f64() * 1e3;
        app.audit("events", &req, &decision, "oracle", latency_ms);
        let body = DecideHttpResponse::new(&decision, "oracle", latency_ms);
        return Ok((StatusCode::FORBIDDEN, Json(body)).into_response());
    }
    let effect = world.apply_in_place(&req).map_err(ApiError::from_model)?;
    drop(world);
    let latency_ms = started.elapsed().as_secs_f64() * 1e3;
    app.audit("events", &req, &decision, "oracle", latency_ms);
    Ok(Json(EventHttpResponse {
        applied: true,
        effect,
        decision: DecideHttpResponse::new(&decision, "oracle", latency_ms),
    })
    .into_response())
}

async fn resource(
    State(app): State<Arc<AppState>>,
    Path(id): Path<String>,
    Query(query): Query<HashMap<String, String>>,
) -> Result<Response, ApiError> {
    if let Some(k) = query.keys().find(|k| k.as_str() != "requester") {
        return Err(ApiError::bad_request(Some(k.clone()), format!("unknown query parameter '{k}'")));
    }
    let requester = query
        .get("requester")
        .ok_or_else(|| ApiError::bad_request(Some("requester".into()), "missing query parameter 'requester'"))?;
    let world = app.world.read().unwrap_or_else(|e| e.into_inner());
    let snap = snapshot(&world, &id, &requester.as_str().into()).map_err(ApiError::from_model)?;
    Ok(Json(snap).into_response())
}

/// Serves until Ctrl-C.
pub async fn serve(config: ServiceConfig) -> Result<(), ServiceError> {
    let state = Arc::new(AppState::from_config(&config)?);
    let listener = tokio::net::TcpListener::bind(&config.bind)
        .await
        .map_err(|e| ServiceError::Bind(config.bind.clone(), e.to_string()))?;
    let addr = listener.local_addr().map_err(|e| ServiceError::Io(e.to_string()))?;
    tracing::info!(%addr, decider = state.engine.name(), "listening");
    axum::serve(listener, router(state))
        .with_graceful_shutdown(shutdown_signal())
        .await
        .map_err(|e| ServiceError::Io(e.to_string()))
}

/// Ctrl-C, or SIGTERM on Unix.
async fn shutdown_signal() {
    #[cfg(unix)]
    {
        use tokio::signal::unix::{signal, SignalKind};
        if let Ok(mut term) = signal(SignalKind::terminate()) {
            tokio::select! {
                _ = tokio::signal::ctrl_c() => {}
                _ = term.recv() => {}
            }
            tracing::info!("shutting down");
            return;
        }
    }
    let _ = tokio::signal::ctrl_c().await;
    tracing::info!("shutting down");
}

/// A service running on a background thread, stopped on drop.
pub struct RunningService {
    addr: SocketAddr,
    state: Arc<AppState>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl RunningService {
    /// Binds `config.bind` (port 0 picks a free port) and starts serving.
    pub fn start(config: &ServiceConfig) -> Result<Self, ServiceError> {
        let state = Arc::new(AppState::from_config(config)?);
        Self::start_with_state(&config.bind, state)
    }

    pub fn start_with_state(bind: &str, state: Arc<AppState>) -> Result<Self, ServiceError> {
        let listener = std::net::TcpListener::bind(bind).map_err(|e| ServiceError::Bind(bind.to_owned(), e.to_string()))?;
        listener.set_nonblocking(true).map_err(|e| ServiceError::Io(e.to_string()))?;
        let addr = listener.local_addr().map_err(|e| ServiceError::Io(e.to_string()))?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = router(state.clone());
        let thread = std::thread::Builder::new()
            .name("pdp-http".into())
            .spawn(move || {
                let rt = tokio::runtime::Builder::new_multi_thread()
                    .enable_all()
                    .build()
                    .expect("service runtime");
                rt.block_on(async move {
                    let listener = tokio::net::TcpListener::from_std(listener).expect("listener");
                    let _ = axum::serve(listener, app)
                        .with_graceful_shutdown(async {
                            let _ = rx.await;
                        })
                        .await;
                });
            })
            .map_err(|e| ServiceError::Io(e.to_string()))?;
        Ok(RunningService {
            addr,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    pub fn url(&self, path: &str) -> String {
        format!("http://{}{path}", self.addr)
    }

    pub fn state(&self) -> &Arc<AppState> {
        &self.state
    }
}

impl Drop for RunningService {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

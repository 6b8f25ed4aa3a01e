//! A stand-in model endpoint for tests and demos.
//!
//! It speaks the chat-completions shape the [`RemoteDecider`] expects and
//! answers from the oracle, optionally with noise or deliberate faults.
//! The server runs on its own thread and runtime, so blocking clients can
//! call it from anywhere.
//!
//! [`RemoteDecider`]: super::RemoteDecider

use std::net::SocketAddr;
use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::Arc;
use std::time::Duration;

use axum::extract::State;
use axum::http::StatusCode;
use axum::response::{IntoResponse, Response};
use axum::routing::post;
use axum::{Json, Router};
use serde_json::{json, Value};
use tokio::sync::oneshot;

use super::remote::ModelReply;
use crate::eval::{Decider, Noisy};
use crate::generator::parse_training_input;
use crate::oracle::Oracle;

/// A way of replying wrongly.
#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Fault {
    /// `"decision": "maybe"`.
    InvalidVerdict,
    /// Message content that is not JSON.
    MalformedJson,
    /// A valid reply plus an extra `confidence` key.
    ExtraField,
    /// No `explanation` key.
    MissingField,
    /// HTTP 500.
    ServerError,
    /// An empty `choices` array.
    EmptyChoices,
    /// A correct answer, after a delay.
    Slow(Duration),
}

impl Fault {
    /// Every fault that produces an unusable reply.
    pub const MALFORMED: [Fault; 6] = [
        Fault::InvalidVerdict,
        Fault::MalformedJson,
        Fault::ExtraField,
        Fault::MissingField,
        Fault::ServerError,
        Fault::EmptyChoices,
    ];
}

#[derive(Clone, Debug, PartialEq)]
pub enum MockMode {
    /// The oracle's decision and explanation.
    OracleEcho,
    /// The oracle with verdicts flipped at rate `epsilon`, keyed by prompt.
    Noisy { epsilon: f64, seed: u64 },
    Fault(Fault),
    /// Cycles through the faults, one per request.
    Cycle(Vec<Fault>),
}

struct MockState {
    mode: MockMode,
    hits: AtomicU64,
}

pub struct MockLlm {
    addr: SocketAddr,
    state: Arc<MockState>,
    shutdown: Option<oneshot::Sender<()>>,
    thread: Option<std::thread::JoinHandle<()>>,
}

impl MockLlm {
    /// Binds an ephemeral loopback port and starts serving.
    pub fn start(mode: MockMode) -> std::io::Result<Self> {
        if let MockMode::Noisy { epsilon, .. } = mode {
            if !(0.0..=1.0).contains(&epsilon) {
                return Err(std::io::Error::new(std::io::ErrorKind::InvalidInput, "epsilon outside [0, 1]"));
            }
        }
        let state = Arc::new(MockState {
            mode,
            hits: AtomicU64::new(0),
        });
        let std_listener = std::net::TcpListener::bind("127.0.0.1:0")?;
        std_listener.set_nonblocking(true)?;
        let addr = std_listener.local_addr()?;
        let (tx, rx) = oneshot::channel::<()>();
        let app = Router::new()
            .route("/v1/chat/completions", post(complete))
            .with_state(state.clone());
        let thread = std::thread::Builder::new().name("mock-llm".into()).spawn(move || {
            let rt = tokio::runtime::Builder::new_current_thread()
                .enable_all()
                .build()
                .expect("mock runtime");
            rt.block_on(async move {
                let listener = tokio::net::TcpListener::from_std(std_listener).expect("listener");
                let _ = axum::serve(listener, app)
                    .with_graceful_shutdown(async {
                        let _ = rx.await;
                    })
                    .await;
            });
        })?;
        Ok(MockLlm {
            addr,
            state,
            shutdown: Some(tx),
            thread: Some(thread),
        })
    }

    pub fn addr(&self) -> SocketAddr {
        self.addr
    }

    /// URL to put in `remote.endpoint`.
    pub fn endpoint(&self) -> String {
        format!("http://{}/v1/chat/completions", self.addr)
    }

    pub fn hits(&self) -> u64 {
        self.state.hits.load(Ordering::Relaxed)
    }
}

impl Drop for MockLlm {
    fn drop(&mut self) {
        if let Some(tx) = self.shutdown.take() {
            let _ = tx.send(());
        }
        if let Some(t) = self.thread.take() {
            let _ = t.join();
        }
    }
}

fn envelope(content: String) -> Value {
    json!({
        "id": "mock",
        "object": "chat.completion",
        "choices": [{"index": 0, "message": {"role": "assistant", "content": content}, "finish_reason": "stop"}],
    })
}

async fn complete(State(state): State<Arc<MockState>>, Json(body): Json<Value>) -> Response {
    let n = state.hits.fetch_add(1, Ordering::Relaxed);
    let prompt = body
        .pointer("/messages")
        .and_then(Value::as_array)
        .and_then(|m| m.last())
        .and_then(|m| m.get("content"))
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_owned();
    let Ok((fields, snap)) = parse_training_input(&prompt) else {
        return (StatusCode::BAD_REQUEST, "prompt is not a request/state object").into_response();
    };
    // The prompt doubles as the request id, so noise is keyed by content.
    let request = fields.to_request(prompt.clone());
    let answer = |noise: Option<(f64, u64)>| {
        let d = match noise {
            Some((eps, seed)) => Noisy::new(Oracle::builtin(), eps, seed)
                .expect("epsilon checked at start")
                .decide(&snap, &request)
                .expect("oracle never fails"),
            None => Oracle::builtin().decide_snapshot(&snap, &request),
        };
        let reply = ModelReply {
            decision: d.verdict.as_str().to_owned(),
            explanation: d.explanation,
        };
        serde_json::to_string(&reply).expect("reply serializes")
    };
    let fault = match &state.mode {
        MockMode::OracleEcho => return Json(envelope(answer(None))).into_response(),
        MockMode::Noisy { epsilon, seed } => return Json(envelope(answer(Some((*epsilon, *seed))))).into_response(),
        MockMode::Fault(f) => *f,
        MockMode::Cycle(fs) if fs.is_empty() => return Json(envelope(answer(None))).into_response(),
        MockMode::Cycle(fs) => fs[n as usize % fs.len()],
    };
    match fault {
        Fault::InvalidVerdict => Json(envelope(r#"{"decision":"maybe","explanation":"unsure"}"#.into())).into_response(),
        Fault::MalformedJson => Json(envelope("allow, probably".into())).into_response(),
        Fault::ExtraField => {
            Json(envelope(r#"{"decision":"allow","explanation":"fine","confidence":0.97}"#.into())).into_response()
        }
        Fault::MissingField => Json(envelope(r#"{"decision":"allow"}"#.into())).into_response(),
        Fault::ServerError => (StatusCode::INTERNAL_SERVER_ERROR, "model crashed").into_response(),
        Fault::EmptyChoices => Json(json!({"id": "mock", "choices": []})).into_response(),
        Fault::Slow(d) => {
            tokio::time::sleep(d).await;
            Json(envelope(answer(None))).into_response()
        }
    }
}

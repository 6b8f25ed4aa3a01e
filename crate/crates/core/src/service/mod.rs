//! Runtime decision service and the remote-model client.

mod config;
mod http;
pub mod mock;
mod remote;

pub use config::{ConfigError, DeciderKind, ServiceConfig, ENV_PREFIX};
pub use http::{
    parse_strict, router, serve, ApiError, AppState, DecideHttpRequest, DecideHttpResponse, Engine,
    EventHttpRequest, EventHttpResponse, RunningService,
};
pub use remote::{
    parse_reply, ModelReply, RemoteDecider, RemoteDeciderConfig, RemoteError, RemoteStats, FAIL_CLOSED_EXPLANATION,
    MODEL_DENIED, PROMPT_TEMPLATE_V1, UNAVAILABLE,
};

use crate::dsl::DslError;
use crate::model::ModelError;

#[derive(Debug, thiserror::Error)]
pub enum ServiceError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("policy file: {0}")]
    Policy(#[from] DslError),
    #[error(transparent)]
    Remote(#[from] RemoteError),
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error("cannot bind {0}: {1}")]
    Bind(String, String),
    #[error("i/o: {0}")]
    Io(String),
}

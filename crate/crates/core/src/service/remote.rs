//! Client for a chat-completions style model endpoint acting as the
//! decider.
//!
//! The prompt is the training instruction plus the canonical request/state
//! string, so a model tuned on exported data sees the same input shape.
//! Replies must be exactly `{"decision": "allow"|"deny", "explanation": ".."}`.
//! Anything else (timeouts, HTTP errors, extra fields, other verdicts)
//! yields a deny.

use std::sync::atomic::{AtomicU64, Ordering};
use std::sync::{Condvar, Mutex};
use std::time::Duration;

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::eval::{DecideError, Decider};
use crate::generator::{training_input, SYSTEM_PROMPT};
use crate::model::{AccessRequest, StateSnapshot};
use crate::oracle::{ConditionId, Decision, Oracle, PolicyId, Verdict};

/// Explanation on every fail-closed deny.
pub const FAIL_CLOSED_EXPLANATION: &str = "remote decider unavailable \u{2014} failing closed";
/// Violation recorded on a fail-closed deny.
pub const UNAVAILABLE: ConditionId = ConditionId::from_static("remote.unavailable");
/// Violation recorded when the model itself answered deny.
pub const MODEL_DENIED: ConditionId = ConditionId::from_static("remote.model_denied");
/// The only prompt layout so far.
pub const PROMPT_TEMPLATE_V1: &str = "pdp-v1";

#[derive(Clone, Debug, PartialEq)]
pub struct RemoteDeciderConfig {
    /// Full URL of the chat-completions route.
    pub endpoint: String,
    pub model: String,
    pub prompt_template: String,
    pub timeout_ms: u64,
    pub max_in_flight: usize,
    /// Also ask the oracle and count disagreements. Responses are unchanged.
    pub shadow_mode: bool,
}

impl Default for RemoteDeciderConfig {
    fn default() -> Self {
        RemoteDeciderConfig {
            endpoint: String::new(),
            model: "pdp".into(),
            prompt_template: PROMPT_TEMPLATE_V1.into(),
            timeout_ms: 2000,
            max_in_flight: 8,
            shadow_mode: false,
        }
    }
}

impl RemoteDeciderConfig {
    pub fn with_endpoint(endpoint: impl Into<String>) -> Self {
        RemoteDeciderConfig {
            endpoint: endpoint.into(),
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), String> {
        if !(self.endpoint.starts_with("http://") || self.endpoint.starts_with("https://")) {
            return Err(format!("endpoint must be an http(s) URL, got '{}'", self.endpoint));
        }
        if self.timeout_ms == 0 {
            return Err("timeout_ms must be positive".into());
        }
        if self.max_in_flight == 0 {
            return Err("max_in_flight must be at least 1".into());
        }
        if self.prompt_template != PROMPT_TEMPLATE_V1 {
            return Err(format!("unknown prompt template '{}'", self.prompt_template));
        }
        Ok(())
    }
}

#[derive(Debug, thiserror::Error)]
pub enum RemoteError {
    #[error("invalid remote config: {0}")]
    Config(String),
    #[error("transport: {0}")]
    Transport(String),
    #[error("endpoint answered HTTP {0}")]
    Status(u16),
    #[error("malformed reply: {0}")]
    Malformed(String),
    #[error("verdict must be allow or deny, got {0:?}")]
    Verdict(String),
}

/// Strict reply schema.
#[derive(Debug, Deserialize, Serialize)]
#[serde(deny_unknown_fields)]
pub struct ModelReply {
    pub decision: String,
    pub explanation: String,
}

/// Running totals, readable while calls are in flight.
#[derive(Debug, Default)]
pub struct RemoteCounters {
    pub calls: AtomicU64,
    pub failures: AtomicU64,
    pub shadow_compared: AtomicU64,
    pub shadow_disagreements: AtomicU64,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize)]
pub struct RemoteStats {
    pub calls: u64,
    pub failures: u64,
    pub shadow_compared: u64,
    pub shadow_disagreements: u64,
}

/// Counting semaphore for blocking callers.
#[derive(Debug)]
struct Gate {
    free: Mutex<usize>,
    cv: Condvar,
}

impl Gate {
    fn acquire(&self) -> GatePass<'_> {
        let mut free = self.free.lock().unwrap_or_else(|e| e.into_inner());
        while *free == 0 {
            free = self.cv.wait(free).unwrap_or_else(|e| e.into_inner());
        }
        *free -= 1;
        GatePass(self)
    }
}

struct GatePass<'a>(&'a Gate);

impl Drop for GatePass<'_> {
    fn drop(&mut self) {
        *self.0.free.lock().unwrap_or_else(|e| e.into_inner()) += 1;
        self.0.cv.notify_one();
    }
}

#[derive(Debug)]
pub struct RemoteDecider {
    config: RemoteDeciderConfig,
    agent: ureq::Agent,
    gate: Gate,
    counters: RemoteCounters,
}

impl RemoteDecider {
    pub fn new(config: RemoteDeciderConfig) -> Result<Self, RemoteError> {
        config.validate().map_err(RemoteError::Config)?;
        let agent = ureq::Agent::config_builder()
            .timeout_global(Some(Duration::from_millis(config.timeout_ms)))
            .http_status_as_error(false)
            .build()
            .into();
        Ok(RemoteDecider {
            gate: Gate {
                free: Mutex::new(config.max_in_flight),
                cv: Condvar::new(),
            },
            config,
            agent,
            counters: RemoteCounters::default(),
        })
    }

    pub fn config(&self) -> &RemoteDeciderConfig {
        &self.config
    }

    pub fn stats(&self) -> RemoteStats {
        let c = &self.counters;
        RemoteStats {
            calls: c.calls.load(Ordering::Relaxed),
            failures: c.failures.load(Ordering::Relaxed),
            shadow_compared: c.shadow_compared.load(Ordering::Relaxed),
            shadow_disagreements: c.shadow_disagreements.load(Ordering::Relaxed),
        }
    }

    /// The chat-completions request body for one decision.
    pub fn request_body(&self, state: &StateSnapshot, request: &AccessRequest) -> serde_json::Value {
        json!({
            "model": self.config.model,
            "temperature": 0,
            "messages": [
                {"role": "system", "content": SYSTEM_PROMPT},
                {"role": "user", "content": training_input(request, state)},
            ],
        })
    }

    /// One remote call, with errors surfaced. Shadow comparison happens
    /// here too, so it covers both entry points.
    pub fn try_decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, RemoteError> {
        self.counters.calls.fetch_add(1, Ordering::Relaxed);
        let result = self.call(state, request);
        if let Err(e) = &result {
            self.counters.failures.fetch_add(1, Ordering::Relaxed);
            tracing::error!(request_id = %request.request_id, error = %e, "{FAIL_CLOSED_EXPLANATION}");
        }
        if self.config.shadow_mode {
            let truth = Oracle::builtin().decide_snapshot(state, request);
            let verdict = result.as_ref().map_or(Verdict::Deny, |d| d.verdict);
            self.counters.shadow_compared.fetch_add(1, Ordering::Relaxed);
            if verdict != truth.verdict {
                self.counters.shadow_disagreements.fetch_add(1, Ordering::Relaxed);
                tracing::warn!(
                    target: "shadow",
                    request_id = %request.request_id,
                    remote = verdict.as_str(),
                    oracle = truth.verdict.as_str(),
                    "shadow disagreement"
                );
            }
        }
        result
    }

    /// Like [`RemoteDecider::try_decide`], but any failure becomes a deny.
    pub fn decide_fail_closed(&self, state: &StateSnapshot, request: &AccessRequest) -> Decision {
        self.try_decide(state, request).unwrap_or_else(|_| Decision {
            verdict: Verdict::Deny,
            policy: PolicyId::for_action(request.action),
            satisfied: vec![],
            violated: vec![UNAVAILABLE],
            explanation: FAIL_CLOSED_EXPLANATION.to_owned(),
        })
    }

    fn call(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, RemoteError> {
        let body = self.request_body(state, request);
        let text = {
            let _pass = self.gate.acquire();
            let mut resp = self
                .agent
                .post(&self.config.endpoint)
                .send_json(&body)
                .map_err(|e| RemoteError::Transport(e.to_string()))?;
            let status = resp.status().as_u16();
            if status != 200 {
                return Err(RemoteError::Status(status));
            }
            resp.body_mut()
                .read_to_string()
                .map_err(|e| RemoteError::Transport(e.to_string()))?
        };
        let envelope: serde_json::Value =
            serde_json::from_str(&text).map_err(|e| RemoteError::Malformed(format!("response body: {e}")))?;
        let content = envelope
            .pointer("/choices/0/message/content")
            .and_then(|c| c.as_str())
            .ok_or_else(|| RemoteError::Malformed("no choices[0].message.content string".into()))?;
        let reply = parse_reply(content)?;
        let verdict: Verdict = reply.decision.parse().map_err(|_| RemoteError::Verdict(reply.decision.clone()))?;
        Ok(Decision {
            verdict,
            policy: PolicyId::for_action(request.action),
            satisfied: vec![],
            violated: if verdict.is_allow() { vec![] } else { vec![MODEL_DENIED] },
            explanation: reply.explanation,
        })
    }
}

/// Parses the model's message content under the strict schema.
pub fn parse_reply(content: &str) -> Result<ModelReply, RemoteError> {
    serde_json::from_str(content.trim()).map_err(|e| RemoteError::Malformed(e.to_string()))
}

impl Decider for RemoteDecider {
    fn name(&self) -> &str {
        "remote"
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        self.try_decide(state, request).map_err(|e| DecideError::Remote(e.to_string()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn config_validation() {
        assert!(RemoteDeciderConfig::default().validate().is_err());
        let ok = RemoteDeciderConfig::with_endpoint("http://127.0.0.1:1/v1/chat/completions");
        ok.validate().unwrap();
        for bad in [
            RemoteDeciderConfig { timeout_ms: 0, ..ok.clone() },
            RemoteDeciderConfig { max_in_flight: 0, ..ok.clone() },
            RemoteDeciderConfig { prompt_template: "v9".into(), ..ok.clone() },
        ] {
            assert!(bad.validate().is_err());
        }
    }

    #[test]
    fn strict_reply_schema() {
        assert!(parse_reply(r#"{"decision":"allow","explanation":"ok"}"#).is_ok());
        assert!(parse_reply(r#"{"decision":"allow","explanation":"ok","confidence":0.9}"#).is_err());
        assert!(parse_reply(r#"{"decision":"allow"}"#).is_err());
        assert!(parse_reply("allow").is_err());
    }

    #[test]
    fn unreachable_endpoint_fails_closed() {
        // Port 9 on loopback is almost never listening.
        let d = RemoteDecider::new(RemoteDeciderConfig {
            timeout_ms: 300,
            ..RemoteDeciderConfig::with_endpoint("http://127.0.0.1:9/v1/chat/completions")
        })
        .unwrap();
        let snap = StateSnapshot::unallocated("hw1", &"u1".into());
        let req = AccessRequest::new(
            "r1",
            "u1",
            crate::model::ActionKind::UploadHomework,
            "hw1",
            "2025-01-06T09:00:00Z".parse().unwrap(),
        );
        let d1 = d.decide_fail_closed(&snap, &req);
        assert_eq!(d1.verdict, Verdict::Deny);
        assert_eq!(d1.explanation, FAIL_CLOSED_EXPLANATION);
        assert_eq!(d.stats().failures, 1);
    }
}

//! Service configuration: a `key = value` file, then `PROVAC_*`
//! environment variables, then command-line flags, each overriding the
//! last.
//!
//! | key | environment | default |
//! |-----|-------------|---------|
//! | `bind` | `PROVAC_BIND` | `127.0.0.1:8080` |
//! | `policy_file` | `PROVAC_POLICY_FILE` | built-in classroom policies |
//! | `decider` | `PROVAC_DECIDER` | `oracle` (or `dsl`, `remote`) |
//! | `users` | `PROVAC_USERS` | `30` |
//! | `audit_log` | `PROVAC_AUDIT_LOG` | none (audit lines go to the log only) |
//! | `remote.endpoint` | `PROVAC_REMOTE_ENDPOINT` | none |
//! | `remote.model` | `PROVAC_REMOTE_MODEL` | `pdp` |
//! | `remote.prompt_template` | `PROVAC_REMOTE_PROMPT_TEMPLATE` | `pdp-v1` |
//! | `remote.timeout_ms` | `PROVAC_REMOTE_TIMEOUT_MS` | `2000` |
//! | `remote.max_in_flight` | `PROVAC_REMOTE_MAX_IN_FLIGHT` | `8` |
//! | `remote.shadow_mode` | `PROVAC_REMOTE_SHADOW_MODE` | `false` |

use std::path::{Path, PathBuf};
use std::str::FromStr;

use super::remote::RemoteDeciderConfig;

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid value for {key}: {message}")]
    Value { key: String, message: String },
    #[error("unknown config key '{0}'")]
    UnknownKey(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum DeciderKind {
    Oracle,
    Dsl,
    Remote,
}

impl FromStr for DeciderKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(DeciderKind::Oracle),
            "dsl" => Ok(DeciderKind::Dsl),
            "remote" => Ok(DeciderKind::Remote),
            other => Err(format!("expected oracle, dsl or remote, got '{other}'")),
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct ServiceConfig {
    pub bind: String,
    pub policy_file: Option<PathBuf>,
    pub decider: DeciderKind,
    pub users: usize,
    pub audit_log: Option<PathBuf>,
    pub remote: RemoteDeciderConfig,
}

impl Default for ServiceConfig {
    fn default() -> Self {
        ServiceConfig {
            bind: "127.0.0.1:8080".into(),
            policy_file: None,
            decider: DeciderKind::Oracle,
            users: 30,
            audit_log: None,
            remote: RemoteDeciderConfig::default(),
        }
    }
}

pub const ENV_PREFIX: &str = "PROVAC_";

fn parse_value<T: FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        key: key.to_owned(),
        message: e.to_string(),
    })
}

impl ServiceConfig {
    /// Sets one key. Keys are the file spelling (`remote.timeout_ms`).
    pub fn set(&mut self, key: &str, value: &str) -> Result<(), ConfigError> {
        let opt_path = |v: &str| (!v.is_empty()).then(|| PathBuf::from(v));
        match key {
            "bind" => self.bind = value.to_owned(),
            "policy_file" => self.policy_file = opt_path(value),
            "decider" => self.decider = parse_value(key, value)?,
            "users" => self.users = parse_value(key, value)?,
            "audit_log" => self.audit_log = opt_path(value),
            "remote.endpoint" => self.remote.endpoint = value.to_owned(),
            "remote.model" => self.remote.model = value.to_owned(),
            "remote.prompt_template" => self.remote.prompt_template = value.to_owned(),
            "remote.timeout_ms" => self.remote.timeout_ms = parse_value(key, value)?,
            "remote.max_in_flight" => self.remote.max_in_flight = parse_value(key, value)?,
            "remote.shadow_mode" => self.remote.shadow_mode = parse_value(key, value)?,
            other => return Err(ConfigError::UnknownKey(other.to_owned())),
        }
        Ok(())
    }

    /// Applies `key = value` lines. `#` starts a comment.
    pub fn apply_text(&mut self, text: &str) -> Result<(), ConfigError> {
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or_default().trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line.split_once('=').ok_or_else(|| ConfigError::Syntax {
                line: i + 1,
                message: format!("expected 'key = value', found '{line}'"),
            })?;
            self.set(k.trim(), v.trim()).map_err(|e| match e {
                ConfigError::UnknownKey(k) => ConfigError::Syntax {
                    line: i + 1,
                    message: format!("unknown key '{k}'"),
                },
                other => other,
            })?;
        }
        Ok(())
    }

    pub fn apply_file(&mut self, path: &Path) -> Result<(), ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        self.apply_text(&text)
    }

    /// Applies `PROVAC_*` variables: `PROVAC_REMOTE_TIMEOUT_MS` sets
    /// `remote.timeout_ms`. Other variables are ignored.
    pub fn apply_env<I, K, V>(&mut self, vars: I) -> Result<(), ConfigError>
    where
        I: IntoIterator<Item = (K, V)>,
        K: AsRef<str>,
        V: AsRef<str>,
    {
        for (k, v) in vars {
            let Some(rest) = k.as_ref().strip_prefix(ENV_PREFIX) else { continue };
            let key = match rest.to_ascii_lowercase().strip_prefix("remote_") {
                Some(r) => format!("remote.{r}"),
                None => rest.to_ascii_lowercase(),
            };
            self.set(&key, v.as_ref())?;
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        if self.users == 0 {
            return Err(ConfigError::Value {
                key: "users".into(),
                message: "must be at least 1".into(),
            });
        }
        if self.decider == DeciderKind::Remote || self.remote.shadow_mode {
            self.remote.validate().map_err(|message| ConfigError::Value {
                key: "remote".into(),
                message,
            })?;
        }
        Ok(())
    }
}

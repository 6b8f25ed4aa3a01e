use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use crate::model::{AccessRequest, ActionKind, ResourceId, StateSnapshot, Timestamp, UserId};
use crate::oracle::{Decision, PolicyId, Verdict};

/// The wire form of a request, as stored in datasets and accepted over HTTP.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RequestFields {
    pub user_id: UserId,
    pub action: ActionKind,
    pub resource_id: ResourceId,
    pub timestamp: Timestamp,
}

impl RequestFields {
    pub fn to_request(&self, request_id: impl Into<String>) -> AccessRequest {
        AccessRequest::new(
            request_id,
            self.user_id.clone(),
            self.action,
            self.resource_id.clone(),
            self.timestamp,
        )
    }
}

impl From<&AccessRequest> for RequestFields {
    fn from(r: &AccessRequest) -> Self {
        RequestFields {
            user_id: r.user.clone(),
            action: r.action,
            resource_id: r.resource.clone(),
            timestamp: r.timestamp,
        }
    }
}

/// One labelled scenario. Field order is the canonical serialization order.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DatasetRecord {
    pub id: String,
    pub request: RequestFields,
    pub state: StateSnapshot,
    pub decision: Verdict,
    pub policy_id: PolicyId,
    pub explanation: String,
}

impl DatasetRecord {
    pub fn new(request: &AccessRequest, state: StateSnapshot, decision: &Decision) -> Self {
        DatasetRecord {
            id: request.request_id.clone(),
            request: RequestFields::from(request),
            state,
            decision: decision.verdict,
            policy_id: decision.policy.clone(),
            explanation: decision.explanation.clone(),
        }
    }

    /// The request, with the record id as request id.
    pub fn access_request(&self) -> AccessRequest {
        self.request.to_request(self.id.clone())
    }

    pub fn action(&self) -> ActionKind {
        self.request.action
    }

    pub fn to_json_line(&self) -> String {
        serde_json::to_string(self).expect("records always serialize")
    }
}

#[derive(Debug, thiserror::Error)]
pub enum DatasetError {
    #[error("line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Writes records as JSON Lines (LF endings).
pub fn write_jsonl<W: Write>(records: &[DatasetRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        serde_json::to_writer(&mut out, r)?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

pub fn to_jsonl_string(records: &[DatasetRecord]) -> String {
    let mut buf = Vec::new();
    write_jsonl(records, &mut buf).expect("writing to memory");
    String::from_utf8(buf).expect("serde_json emits UTF-8")
}

/// Reads JSON Lines, skipping blank lines. Errors name the line and, for
/// schema problems, the offending field path.
pub fn read_jsonl<R: BufRead>(input: R) -> Result<Vec<DatasetRecord>, DatasetError> {
    let mut out = Vec::new();
    for (idx, line) in input.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let de = &mut serde_json::Deserializer::from_str(&line);
        let rec: DatasetRecord = serde_path_to_error::deserialize(de).map_err(|e| DatasetError::Parse {
            line: idx + 1,
            message: format!("{}: {}", e.path(), e.inner()),
        })?;
        out.push(rec);
    }
    Ok(out)
}

pub fn read_jsonl_file(path: impl AsRef<std::path::Path>) -> Result<Vec<DatasetRecord>, DatasetError> {
    let f = std::fs::File::open(path)?;
    read_jsonl(std::io::BufReader::new(f))
}

pub fn write_jsonl_file(path: impl AsRef<std::path::Path>, records: &[DatasetRecord]) -> std::io::Result<()> {
    let f = std::fs::File::create(path)?;
    write_jsonl(records, std::io::BufWriter::new(f))
}

//! Instruction-tuning export.
//!
//! One JSON object per line, keys in the order `instruction`, `input`,
//! `output`. `input` is itself a compact JSON string holding the request and
//! the state snapshot; remote deciders send the same string as their prompt.

use std::io::Write;

use serde::{Deserialize, Serialize};

use super::{DatasetRecord, RequestFields};
use crate::model::{AccessRequest, StateSnapshot};
use crate::oracle::Verdict;

/// Fixed instruction text for every training example.
pub const SYSTEM_PROMPT: &str = include_str!("../../../../policies/pdp_system_prompt.txt");

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingExample {
    pub instruction: String,
    pub input: String,
    pub output: TrainingOutput,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TrainingOutput {
    pub decision: Verdict,
    pub explanation: String,
}

#[derive(Serialize)]
struct InputRef<'a> {
    request: RequestFields,
    state: &'a StateSnapshot,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct InputOwned {
    request: RequestFields,
    state: StateSnapshot,
}

/// Canonical `{"request": .., "state": ..}` serialization.
pub fn training_input(request: &AccessRequest, state: &StateSnapshot) -> String {
    let input = InputRef {
        request: RequestFields::from(request),
        state,
    };
    serde_json::to_string(&input).expect("request and snapshot serialize")
}

/// Inverse of [`training_input`].
pub fn parse_training_input(input: &str) -> serde_json::Result<(RequestFields, StateSnapshot)> {
    let v: InputOwned = serde_json::from_str(input)?;
    Ok((v.request, v.state))
}

impl TrainingExample {
    pub fn from_record(record: &DatasetRecord) -> Self {
        TrainingExample {
            instruction: SYSTEM_PROMPT.to_owned(),
            input: training_input(&record.access_request(), &record.state),
            output: TrainingOutput {
                decision: record.decision,
                explanation: record.explanation.clone(),
            },
        }
    }
}

/// Writes one training example per record, LF-terminated.
pub fn export_training<W: Write>(records: &[DatasetRecord], mut out: W) -> std::io::Result<()> {
    for r in records {
        let line = serde_json::to_string(&TrainingExample::from_record(r)).map_err(std::io::Error::other)?;
        out.write_all(line.as_bytes())?;
        out.write_all(b"\n")?;
    }
    out.flush()
}

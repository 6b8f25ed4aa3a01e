//! Labelled dataset generation.
//!
//! [`generate`] simulates homework workflows, samples legitimate and
//! single-violation requests, and labels each with the oracle against the
//! state at sampling time. Records are written as JSON Lines
//! ([`write_jsonl`]); [`split`], [`export_training`] and [`dataset_stats`]
//! post-process them.

mod config;
mod export;
mod generate;
mod record;
mod split;
mod stats;

pub use config::{GeneratorConfig, MIN_USERS};
pub use export::{export_training, parse_training_input, training_input, TrainingExample, TrainingOutput, SYSTEM_PROMPT};
pub use generate::{generate, generate_with_trace, BASE_TIME, MAX_GAP_SECS};
pub use record::{
    read_jsonl, read_jsonl_file, to_jsonl_string, write_jsonl, write_jsonl_file, DatasetError, DatasetRecord,
    RequestFields,
};
pub use split::{split, Split, SplitError};
pub use stats::{dataset_stats, ActionStats, StatsReport};

use crate::model::{ActionKind, ModelError};

#[derive(Debug, thiserror::Error)]
pub enum GeneratorError {
    #[error("invalid generator config: {0}")]
    InvalidConfig(String),
    #[error("cannot balance {action}: needed {needed} records, reached {got}")]
    Infeasible { action: ActionKind, needed: usize, got: usize },
    #[error(transparent)]
    Model(#[from] ModelError),
}

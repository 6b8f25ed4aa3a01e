//! Scoring deciders against labelled datasets.
//!
//! Anything implementing [`Decider`] can be evaluated: the oracle, a
//! compiled policy file, the baseline engines, a remote model or a
//! [`Noisy`] wrapper. [`evaluate`] produces a [`MetricsReport`] with allow
//! as the positive class; [`render_report`] lays several reports out side
//! by side.

mod decider;
mod metrics;
mod noisy;
mod report;

pub use decider::{ConstantDecider, DecideError, Decider};
pub use metrics::{evaluate, ActionAccuracy, Confusion, Latency, MetricsReport, Rates};
pub use noisy::{Noisy, NOISE_CONDITION};
pub use report::{render_report, ReportFormat, UnknownFormat};

#[derive(Debug, thiserror::Error, PartialEq)]
pub enum EvalError {
    #[error("cannot evaluate on an empty dataset")]
    EmptyDataset,
    #[error("noise rate must be within [0, 1], got {0}")]
    InvalidEpsilon(f64),
}

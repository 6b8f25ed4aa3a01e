//! Workflow-aware, explainable access control for a classroom homework
//! workflow.
//!
//! The [`oracle`] decides requests against the provenance state kept in
//! [`model::WorldState`]. The [`dsl`] expresses the same policies as text,
//! [`baselines`] holds RBAC/ABAC/DAC comparison engines, [`generator`]
//! produces labelled datasets, [`eval`] scores deciders against them and
//! [`service`] exposes a decider over HTTP.

pub mod model;
pub mod dsl;
pub mod oracle;
pub mod baselines;
pub mod generator;
pub mod eval;
pub mod service;
pub mod cli;

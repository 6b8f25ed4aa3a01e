//! Domain entities, the provenance world state, and effect application.

mod action;
mod effect;
mod ids;
mod snapshot;
mod world;

pub use action::{AccessRequest, ActionKind, InvalidTimestamp, Timestamp, UnknownAction};
pub use effect::Effect;
pub use ids::{
    append_target, split_append_target, GradeId, ResourceId, ReviewId, UserId, VersionId,
    APPEND_SEPARATOR,
};
pub use snapshot::{snapshot, snapshot_for_request, ResourceKind, StateSnapshot};
pub use world::{Grade, Homework, Review, Version, WorldState};

use crate::oracle::Decision;

#[derive(Debug, thiserror::Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("{kind} '{id}' not found")]
    NotFound { kind: &'static str, id: String },
    #[error("conflict: {0}")]
    Conflict(String),
    #[error("policy violation: {}", .0.explanation)]
    PolicyViolation(Box<Decision>),
    #[error("integrity violation: {0}")]
    Integrity(String),
}

impl ModelError {
    pub(crate) fn not_found(kind: &'static str, id: &str) -> Self {
        ModelError::NotFound {
            kind,
            id: id.to_owned(),
        }
    }
}

/// Convenience wrapper for [`WorldState::new`].
pub fn new_world(user_count: usize, id_seed: u64) -> Result<WorldState, ModelError> {
    WorldState::new(user_count, id_seed)
}

/// Convenience wrapper for [`WorldState::apply_effect`].
pub fn apply_effect(state: &WorldState, request: &AccessRequest) -> Result<(WorldState, Effect), ModelError> {
    state.apply_effect(request)
}

#[cfg(test)]
pub(crate) mod test_support {
    pub use super::*;

    pub fn t0() -> Timestamp {
        "2025-01-06T09:00:00Z".parse().unwrap()
    }

    pub fn req(user: &str, action: ActionKind, target: &str) -> AccessRequest {
        AccessRequest::new("t", user, action, target, t0())
    }

    /// `hw1` by u1, submitted, reviewed by `reviewers` in order, optionally
    /// graded by `grader`. Ten users.
    pub fn world_with_reviews(reviewers: &[&str], grader: Option<&str>) -> WorldState {
        let mut w = WorldState::new(10, 0).unwrap();
        w.apply_in_place(&req("u1", ActionKind::UploadHomework, "hw1")).unwrap();
        w.apply_in_place(&req("u1", ActionKind::SubmitHomework, "hw1")).unwrap();
        for r in reviewers {
            w.apply_in_place(&req(r, ActionKind::ReviewHomework, "hw1")).unwrap();
        }
        if let Some(g) = grader {
            w.apply_in_place(&req(g, ActionKind::GradeHomework, "hw1")).unwrap();
        }
        w
    }
}

use serde::{Deserialize, Serialize};

use super::action::Timestamp;
use super::ids::{GradeId, ResourceId, ReviewId, UserId, VersionId};

/// What an applied request changed. Ids in the payload were fresh when the
/// effect was produced.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "effect", rename_all = "snake_case")]
pub enum Effect {
    HomeworkUploaded {
        homework: ResourceId,
        author: UserId,
        version: VersionId,
    },
    HomeworkReplaced {
        homework: ResourceId,
        version: VersionId,
    },
    HomeworkSubmitted {
        homework: ResourceId,
        at: Timestamp,
    },
    ReviewCreated {
        review_id: ReviewId,
        homework: ResourceId,
        creator: UserId,
    },
    ReviewRevised {
        review: ReviewId,
        revision_count: u32,
    },
    GradeCreated {
        grade_id: GradeId,
        homework: ResourceId,
        creator: UserId,
    },
    ReviewAppended {
        grade: GradeId,
        review: ReviewId,
    },
}

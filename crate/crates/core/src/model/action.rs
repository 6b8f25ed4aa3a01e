use std::fmt;
use std::str::FromStr;

use chrono::{DateTime, NaiveDateTime, Utc};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use super::ids::{ResourceId, UserId};

/// The seven workflow actions of the classroom system.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ActionKind {
    UploadHomework,
    ReplaceHomework,
    SubmitHomework,
    ReviewHomework,
    ReviseReview,
    GradeHomework,
    AppendReviewToGrade,
}

impl ActionKind {
    pub const ALL: [ActionKind; 7] = [
        ActionKind::UploadHomework,
        ActionKind::ReplaceHomework,
        ActionKind::SubmitHomework,
        ActionKind::ReviewHomework,
        ActionKind::ReviseReview,
        ActionKind::GradeHomework,
        ActionKind::AppendReviewToGrade,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            ActionKind::UploadHomework => "upload_homework",
            ActionKind::ReplaceHomework => "replace_homework",
            ActionKind::SubmitHomework => "submit_homework",
            ActionKind::ReviewHomework => "review_homework",
            ActionKind::ReviseReview => "revise_review",
            ActionKind::GradeHomework => "grade_homework",
            ActionKind::AppendReviewToGrade => "append_review_to_grade",
        }
    }

    /// Position in [`ActionKind::ALL`].
    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for ActionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown action '{0}'")]
pub struct UnknownAction(pub String);

impl FromStr for ActionKind {
    type Err = UnknownAction;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        ActionKind::ALL
            .into_iter()
            .find(|a| a.as_str() == s)
            .ok_or_else(|| UnknownAction(s.to_owned()))
    }
}

const TIMESTAMP_FORMAT: &str = "%Y-%m-%dT%H:%M:%SZ";

/// A UTC instant with second precision, always rendered as
/// `YYYY-MM-DDTHH:MM:SSZ`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Timestamp(DateTime<Utc>);

impl Timestamp {
    pub fn from_unix(secs: i64) -> Option<Self> {
        DateTime::from_timestamp(secs, 0).map(Timestamp)
    }

    pub fn unix(self) -> i64 {
        self.0.timestamp()
    }

    pub fn plus_seconds(self, secs: i64) -> Self {
        Timestamp(self.0 + chrono::Duration::seconds(secs))
    }
}

impl fmt::Display for Timestamp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0.format(TIMESTAMP_FORMAT))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid ISO-8601 UTC timestamp '{0}'")]
pub struct InvalidTimestamp(pub String);

impl FromStr for Timestamp {
    type Err = InvalidTimestamp;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        if let Ok(naive) = NaiveDateTime::parse_from_str(s, TIMESTAMP_FORMAT) {
            return Ok(Timestamp(naive.and_utc()));
        }
        DateTime::parse_from_rfc3339(s)
            .map(|dt| Timestamp(dt.with_timezone(&Utc).with_nanosecond_trunc()))
            .map_err(|_| InvalidTimestamp(s.to_owned()))
    }
}

trait TruncNanos {
    fn with_nanosecond_trunc(self) -> Self;
}

impl TruncNanos for DateTime<Utc> {
    fn with_nanosecond_trunc(self) -> Self {
        DateTime::from_timestamp(self.timestamp(), 0).unwrap_or(self)
    }
}

impl Serialize for Timestamp {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Timestamp {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}

/// One authorization question: may `user` perform `action` on `resource`?
///
/// `resource` is the raw target: a homework id for homework actions (or the
/// fresh id to create, for uploads), a review id for `revise_review`, and
/// `<review>@<grade>` for `append_review_to_grade`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct AccessRequest {
    pub request_id: String,
    pub user: UserId,
    pub action: ActionKind,
    pub resource: ResourceId,
    pub timestamp: Timestamp,
}

impl AccessRequest {
    pub fn new(
        request_id: impl Into<String>,
        user: impl Into<UserId>,
        action: ActionKind,
        resource: impl Into<ResourceId>,
        timestamp: Timestamp,
    ) -> Self {
        AccessRequest {
            request_id: request_id.into(),
            user: user.into(),
            action,
            resource: resource.into(),
            timestamp,
        }
    }
}

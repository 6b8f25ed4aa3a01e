use std::borrow::Borrow;
use std::fmt;

use serde::{Deserialize, Serialize};

macro_rules! id_type {
    ($(#[$meta:meta])* $name:ident) => {
        $(#[$meta])*
        #[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(transparent)]
        pub struct $name(String);

        impl $name {
            pub fn new(id: impl Into<String>) -> Self {
                Self(id.into())
            }

            pub fn as_str(&self) -> &str {
                &self.0
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(&self.0)
            }
        }

        impl From<&str> for $name {
            fn from(s: &str) -> Self {
                Self(s.to_owned())
            }
        }

        impl From<String> for $name {
            fn from(s: String) -> Self {
                Self(s)
            }
        }

        impl Borrow<str> for $name {
            fn borrow(&self) -> &str {
                &self.0
            }
        }

        impl AsRef<str> for $name {
            fn as_ref(&self) -> &str {
                &self.0
            }
        }

        impl PartialEq<str> for $name {
            fn eq(&self, other: &str) -> bool {
                self.0 == other
            }
        }

        impl PartialEq<&str> for $name {
            fn eq(&self, other: &&str) -> bool {
                self.0 == *other
            }
        }
    };
}

id_type!(
    /// A principal. Generated data uses `u<n>`.
    UserId
);
id_type!(
    /// A homework (`hw<n>`), or the raw target string of a request.
    ResourceId
);
id_type!(
    /// One uploaded homework version (`v<n>`).
    VersionId
);
id_type!(
    /// A peer review (`rv<n>`).
    ReviewId
);
id_type!(
    /// A grade (`gr<n>`).
    GradeId
);

/// Separator between the review and grade halves of an append target,
/// e.g. `rv3@gr1` appends review `rv3` to grade `gr1`.
pub const APPEND_SEPARATOR: char = '@';

/// Builds the request target for appending `review` to `grade`.
pub fn append_target(review: &ReviewId, grade: &GradeId) -> ResourceId {
    ResourceId(format!("{review}{APPEND_SEPARATOR}{grade}"))
}

/// Splits an append target into its review and grade halves.
pub fn split_append_target(target: &str) -> Option<(&str, &str)> {
    let (review, grade) = target.split_once(APPEND_SEPARATOR)?;
    if review.is_empty() || grade.is_empty() || grade.contains(APPEND_SEPARATOR) {
        return None;
    }
    Some((review, grade))
}

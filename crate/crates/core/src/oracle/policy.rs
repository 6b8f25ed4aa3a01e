use std::borrow::Cow;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::model::{ActionKind, StateSnapshot, UserId};

/// Which policy governed a decision.
///
/// `P1`..`P7` are the classroom workflow policies, one per action.
/// `NoPolicy` marks a deny-by-default answer. The baseline engines tag their
/// decisions with `Rbac`, `Abac` or `Dac`; policy files may use any other
/// identifier (`Named`).
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum PolicyId {
    P1,
    P2,
    P3,
    P4,
    P5,
    P6,
    P7,
    NoPolicy,
    Rbac,
    Abac,
    Dac,
    Named(String),
}

impl PolicyId {
    pub const TABLE: [PolicyId; 7] = [
        PolicyId::P1,
        PolicyId::P2,
        PolicyId::P3,
        PolicyId::P4,
        PolicyId::P5,
        PolicyId::P6,
        PolicyId::P7,
    ];

    /// The policy that governs `action`.
    pub fn for_action(action: ActionKind) -> PolicyId {
        PolicyId::TABLE[action.index()].clone()
    }

    /// Inverse of [`PolicyId::for_action`] for `P1`..`P7`.
    pub fn action(&self) -> Option<ActionKind> {
        PolicyId::TABLE
            .iter()
            .position(|p| p == self)
            .map(|i| ActionKind::ALL[i])
    }

    pub fn as_str(&self) -> &str {
        match self {
            PolicyId::P1 => "P1",
            PolicyId::P2 => "P2",
            PolicyId::P3 => "P3",
            PolicyId::P4 => "P4",
            PolicyId::P5 => "P5",
            PolicyId::P6 => "P6",
            PolicyId::P7 => "P7",
            PolicyId::NoPolicy => "none",
            PolicyId::Rbac => "rbac",
            PolicyId::Abac => "abac",
            PolicyId::Dac => "dac",
            PolicyId::Named(s) => s,
        }
    }

    /// Parses a label; anything that is not a reserved name becomes `Named`.
    pub fn from_label(s: &str) -> PolicyId {
        match s {
            "P1" => PolicyId::P1,
            "P2" => PolicyId::P2,
            "P3" => PolicyId::P3,
            "P4" => PolicyId::P4,
            "P5" => PolicyId::P5,
            "P6" => PolicyId::P6,
            "P7" => PolicyId::P7,
            "none" => PolicyId::NoPolicy,
            "rbac" => PolicyId::Rbac,
            "abac" => PolicyId::Abac,
            "dac" => PolicyId::Dac,
            other => PolicyId::Named(other.to_owned()),
        }
    }
}

impl fmt::Display for PolicyId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for PolicyId {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(PolicyId::from_label(s))
    }
}

impl Serialize for PolicyId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(self.as_str())
    }
}

impl<'de> Deserialize<'de> for PolicyId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        Ok(PolicyId::from_label(&s))
    }
}

/// Name of one checked condition, e.g. `P4.not_author`.
#[derive(Clone, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ConditionId(Cow<'static, str>);

impl ConditionId {
    pub const fn from_static(s: &'static str) -> Self {
        ConditionId(Cow::Borrowed(s))
    }

    pub fn new(s: impl Into<String>) -> Self {
        ConditionId(Cow::Owned(s.into()))
    }

    pub fn as_str(&self) -> &str {
        &self.0
    }
}

impl fmt::Display for ConditionId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl PartialEq<&str> for ConditionId {
    fn eq(&self, other: &&str) -> bool {
        self.0 == *other
    }
}

impl Serialize for ConditionId {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.0)
    }
}

impl<'de> Deserialize<'de> for ConditionId {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        Ok(ConditionId::new(String::deserialize(deserializer)?))
    }
}

/// The closed set of workflow conditions checked by the classroom policies.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Condition {
    P2IsAuthor,
    P2NotSubmitted,
    P3IsAuthor,
    P3NotSubmitted,
    P4Submitted,
    P4NotAuthor,
    P4NotPriorReviewer,
    P4ReviewCountLt3,
    P4Ungraded,
    P5IsCreator,
    P5Ungraded,
    P6MinTwoReviews,
    P6NotAlreadyGraded,
    P7IsGradeCreator,
    P7ReviewMatchesGrade,
    P7NotAlreadyAppended,
}

impl Condition {
    pub const ALL: [Condition; 16] = [
        Condition::P2IsAuthor,
        Condition::P2NotSubmitted,
        Condition::P3IsAuthor,
        Condition::P3NotSubmitted,
        Condition::P4Submitted,
        Condition::P4NotAuthor,
        Condition::P4NotPriorReviewer,
        Condition::P4ReviewCountLt3,
        Condition::P4Ungraded,
        Condition::P5IsCreator,
        Condition::P5Ungraded,
        Condition::P6MinTwoReviews,
        Condition::P6NotAlreadyGraded,
        Condition::P7IsGradeCreator,
        Condition::P7ReviewMatchesGrade,
        Condition::P7NotAlreadyAppended,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Condition::P2IsAuthor => "P2.is_author",
            Condition::P2NotSubmitted => "P2.not_submitted",
            Condition::P3IsAuthor => "P3.is_author",
            Condition::P3NotSubmitted => "P3.not_submitted",
            Condition::P4Submitted => "P4.submitted",
            Condition::P4NotAuthor => "P4.not_author",
            Condition::P4NotPriorReviewer => "P4.not_prior_reviewer",
            Condition::P4ReviewCountLt3 => "P4.review_count_lt_3",
            Condition::P4Ungraded => "P4.ungraded",
            Condition::P5IsCreator => "P5.is_creator",
            Condition::P5Ungraded => "P5.ungraded",
            Condition::P6MinTwoReviews => "P6.min_two_reviews",
            Condition::P6NotAlreadyGraded => "P6.not_already_graded",
            Condition::P7IsGradeCreator => "P7.is_grade_creator",
            Condition::P7ReviewMatchesGrade => "P7.review_matches_grade",
            Condition::P7NotAlreadyAppended => "P7.not_already_appended",
        }
    }

    pub fn id(self) -> ConditionId {
        ConditionId::from_static(self.as_str())
    }

    /// Conditions of `policy`, in evaluation (and trace) order.
    pub fn for_policy(policy: &PolicyId) -> &'static [Condition] {
        use Condition::*;
        match policy {
            PolicyId::P2 => &[P2IsAuthor, P2NotSubmitted],
            PolicyId::P3 => &[P3IsAuthor, P3NotSubmitted],
            PolicyId::P4 => &[
                P4Submitted,
                P4NotAuthor,
                P4NotPriorReviewer,
                P4ReviewCountLt3,
                P4Ungraded,
            ],
            PolicyId::P5 => &[P5IsCreator, P5Ungraded],
            PolicyId::P6 => &[P6MinTwoReviews, P6NotAlreadyGraded],
            PolicyId::P7 => &[P7IsGradeCreator, P7ReviewMatchesGrade, P7NotAlreadyAppended],
            _ => &[],
        }
    }

    pub fn policy(self) -> PolicyId {
        let s = self.as_str();
        PolicyId::from_label(&s[..2])
    }

    /// Evaluates this condition against a snapshot that fits its action.
    /// The snapshot's own `requester` is the subject.
    pub fn holds(self, snap: &StateSnapshot) -> bool {
        let is = |who: &Option<UserId>| who.as_ref() == Some(&snap.requester);
        match self {
            Condition::P2IsAuthor | Condition::P3IsAuthor => snap.requester_is_author,
            Condition::P2NotSubmitted | Condition::P3NotSubmitted => snap.submitted == Some(false),
            Condition::P4Submitted => snap.submitted == Some(true),
            Condition::P4NotAuthor => !snap.requester_is_author,
            Condition::P4NotPriorReviewer => !snap.requester_has_reviewed,
            Condition::P4ReviewCountLt3 => snap.review_count.is_some_and(|n| n < 3),
            Condition::P4Ungraded | Condition::P6NotAlreadyGraded => snap.graded == Some(false),
            Condition::P5IsCreator => is(&snap.creator),
            Condition::P5Ungraded => snap.homework_graded == Some(false),
            Condition::P6MinTwoReviews => snap.review_count.is_some_and(|n| n >= 2),
            Condition::P7IsGradeCreator => is(&snap.grade_creator),
            Condition::P7ReviewMatchesGrade => {
                snap.homework_id.is_some() && snap.homework_id == snap.grade_homework_id
            }
            Condition::P7NotAlreadyAppended => snap.review_appended == Some(false),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Allow,
    Deny,
}

impl Verdict {
    pub fn as_str(self) -> &'static str {
        match self {
            Verdict::Allow => "allow",
            Verdict::Deny => "deny",
        }
    }

    pub fn is_allow(self) -> bool {
        self == Verdict::Allow
    }

    pub fn flipped(self) -> Verdict {
        match self {
            Verdict::Allow => Verdict::Deny,
            Verdict::Deny => Verdict::Allow,
        }
    }
}

impl fmt::Display for Verdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Verdict {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "allow" => Ok(Verdict::Allow),
            "deny" => Ok(Verdict::Deny),
            other => Err(format!("verdict must be \"allow\" or \"deny\", got {other:?}")),
        }
    }
}

/// A verdict with its condition-level trace and rendered explanation.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Decision {
    pub verdict: Verdict,
    pub policy: PolicyId,
    pub satisfied: Vec<ConditionId>,
    pub violated: Vec<ConditionId>,
    pub explanation: String,
}

impl Decision {
    pub fn is_allow(&self) -> bool {
        self.verdict.is_allow()
    }

    pub fn violated_ids(&self) -> Vec<&str> {
        self.violated.iter().map(ConditionId::as_str).collect()
    }

    pub fn satisfied_ids(&self) -> Vec<&str> {
        self.satisfied.iter().map(ConditionId::as_str).collect()
    }
}

//! Ground-truth decision point for the seven classroom workflow policies.
//!
//! Every condition of the governing policy is evaluated (there is no
//! short-circuit), so a decision carries the complete satisfied/violated
//! trace and the explanation can cite every failed clause.

mod explain;
mod policy;

use std::sync::{Arc, LazyLock};

pub use explain::{TemplateError, Templates, BUILTIN_TEMPLATES};
pub use policy::{Condition, ConditionId, Decision, PolicyId, Verdict};

use crate::model::{snapshot_for_request, AccessRequest, ModelError, StateSnapshot, WorldState};

static BUILTIN: LazyLock<Oracle> = LazyLock::new(|| Oracle::new(Arc::new(Templates::builtin())));

/// The oracle, parameterised by its explanation templates.
#[derive(Clone, Debug)]
pub struct Oracle {
    templates: Arc<Templates>,
}

impl Oracle {
    pub fn new(templates: Arc<Templates>) -> Self {
        Oracle { templates }
    }

    /// The oracle using the shipped template file.
    pub fn builtin() -> &'static Oracle {
        &BUILTIN
    }

    pub fn templates(&self) -> &Arc<Templates> {
        &self.templates
    }

    /// Decides `request` against the live state.
    pub fn decide(&self, world: &WorldState, request: &AccessRequest) -> Result<Decision, ModelError> {
        let snap = snapshot_for_request(world, request)?;
        Ok(self.decide_snapshot(&snap, request))
    }

    /// Decides against a flattened snapshot. The snapshot is authoritative:
    /// its `requester` is the subject whose relationships were recorded.
    pub fn decide_snapshot(&self, snap: &StateSnapshot, request: &AccessRequest) -> Decision {
        let policy = PolicyId::for_action(request.action);
        let conditions = Condition::for_policy(&policy);
        let mut satisfied = Vec::with_capacity(conditions.len());
        let mut violated = Vec::new();
        if snap.fits_action(request.action) {
            for c in conditions {
                if c.holds(snap) {
                    satisfied.push(c.id());
                } else {
                    violated.push(c.id());
                }
            }
        } else {
            violated.extend(conditions.iter().map(|c| c.id()));
        }
        let verdict = if violated.is_empty() && snap.fits_action(request.action) {
            Verdict::Allow
        } else {
            Verdict::Deny
        };
        let explanation = self
            .templates
            .explain(verdict, &policy, &satisfied, &violated, request, snap);
        Decision {
            verdict,
            policy,
            satisfied,
            violated,
            explanation,
        }
    }

    /// Re-renders the explanation for an existing trace.
    pub fn explain(&self, decision: &Decision, request: &AccessRequest, snap: &StateSnapshot) -> String {
        self.templates.explain(
            decision.verdict,
            &decision.policy,
            &decision.satisfied,
            &decision.violated,
            request,
            snap,
        )
    }
}

/// [`Oracle::decide`] with the shipped templates.
pub fn decide(world: &WorldState, request: &AccessRequest) -> Result<Decision, ModelError> {
    BUILTIN.decide(world, request)
}

/// [`Oracle::decide_snapshot`] with the shipped templates.
pub fn decide_snapshot(snap: &StateSnapshot, request: &AccessRequest) -> Decision {
    BUILTIN.decide_snapshot(snap, request)
}

/// [`Oracle::explain`] with the shipped templates.
pub fn explain(decision: &Decision, request: &AccessRequest, snap: &StateSnapshot) -> String {
    BUILTIN.explain(decision, request, snap)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;
    use crate::model::{ActionKind, StateSnapshot, UserId};

    fn decide_req(w: &WorldState, user: &str, action: ActionKind, target: &str) -> Decision {
        decide(w, &req(user, action, target)).unwrap()
    }

    fn uploaded(author: &str) -> WorldState {
        let mut w = WorldState::new(10, 0).unwrap();
        w.apply_in_place(&req(author, ActionKind::UploadHomework, "hw1")).unwrap();
        w
    }

    #[test]
    fn upload_is_always_allowed() {
        let w = world_with_reviews(&["u2", "u3"], Some("u4"));
        for u in ["u1", "u5", "u10"] {
            let d = decide_req(&w, u, ActionKind::UploadHomework, "hw7");
            assert_eq!(d.verdict, Verdict::Allow);
            assert_eq!(d.policy, PolicyId::P1);
            assert!(d.violated.is_empty() && d.satisfied.is_empty());
            assert_eq!(d.explanation, "ALLOW: Policy P1 \u{2014} any legitimate user may upload homework");
        }
    }

    #[test]
    fn author_replaces_unsubmitted() {
        let d = decide_req(&uploaded("u1"), "u1", ActionKind::ReplaceHomework, "hw1");
        assert_eq!(d.verdict, Verdict::Allow);
        assert_eq!(d.policy, PolicyId::P2);
        assert_eq!(d.satisfied_ids(), ["P2.is_author", "P2.not_submitted"]);
    }

    #[test]
    fn non_author_cannot_submit() {
        let d = decide_req(&uploaded("u1"), "u2", ActionKind::SubmitHomework, "hw1");
        assert_eq!(d.verdict, Verdict::Deny);
        assert_eq!(d.policy, PolicyId::P3);
        assert_eq!(d.violated_ids(), ["P3.is_author"]);
        assert_eq!(d.satisfied_ids(), ["P3.not_submitted"]);
    }

    #[test]
    fn author_cannot_review_own_homework() {
        let mut w = WorldState::new(10, 0).unwrap();
        w.apply_in_place(&req("u1", ActionKind::UploadHomework, "hw2")).unwrap();
        w.apply_in_place(&req("u1", ActionKind::SubmitHomework, "hw2")).unwrap();
        let d = decide_req(&w, "u1", ActionKind::ReviewHomework, "hw2");
        assert_eq!(d.violated_ids(), ["P4.not_author"]);
        assert_eq!(
            d.explanation,
            "DENY: Policy P4 \u{2014} requester u1 is the author of hw2; reviewers must not be the author"
        );
    }

    #[test]
    fn review_history_and_quota() {
        let w = world_with_reviews(&["u5"], None);
        assert_eq!(
            decide_req(&w, "u5", ActionKind::ReviewHomework, "hw1").violated_ids(),
            ["P4.not_prior_reviewer"]
        );
        let w = world_with_reviews(&["u2", "u3", "u4"], None);
        assert_eq!(
            decide_req(&w, "u5", ActionKind::ReviewHomework, "hw1").violated_ids(),
            ["P4.review_count_lt_3"]
        );
    }

    #[test]
    fn grading_needs_two_reviews() {
        let w = world_with_reviews(&["u2"], None);
        let d = decide_req(&w, "u9", ActionKind::GradeHomework, "hw1");
        assert_eq!(d.violated_ids(), ["P6.min_two_reviews"]);
        assert!(d.explanation.contains("at least 2 reviews"));
        assert!(d.explanation.contains("review_count=1"));
    }

    #[test]
    fn revise_by_non_creator() {
        let w = world_with_reviews(&["u2", "u3"], None);
        let d = decide_req(&w, "u3", ActionKind::ReviseReview, "rv1");
        assert_eq!(d.policy, PolicyId::P5);
        assert_eq!(d.violated_ids(), ["P5.is_creator"]);
    }

    #[test]
    fn grade_creator_appends_matching_review() {
        let w = world_with_reviews(&["u2", "u3"], Some("u4"));
        let d = decide_req(&w, "u4", ActionKind::AppendReviewToGrade, "rv1@gr1");
        assert_eq!(d.verdict, Verdict::Allow);
        assert_eq!(d.policy, PolicyId::P7);
        let d = decide_req(&w, "u2", ActionKind::AppendReviewToGrade, "rv1@gr1");
        assert_eq!(d.violated_ids(), ["P7.is_grade_creator"]);
    }

    #[test]
    fn type_mismatch_denies_with_every_condition() {
        let w = world_with_reviews(&["u2"], None);
        let d = decide_req(&w, "u2", ActionKind::ReviseReview, "hw1");
        assert_eq!(d.verdict, Verdict::Deny);
        assert_eq!(d.policy, PolicyId::P5);
        assert_eq!(d.violated_ids(), ["P5.is_creator", "P5.ungraded"]);
        assert_eq!(
            d.explanation,
            "DENY: Policy P5 \u{2014} hw1 is a homework, but revise_review applies to a review"
        );
        let d = decide_req(&w, "u1", ActionKind::SubmitHomework, "rv1");
        assert_eq!(d.verdict, Verdict::Deny);
    }

    #[test]
    fn unknown_ids_are_errors_not_denies() {
        let w = world_with_reviews(&[], None);
        assert!(decide(&w, &req("u99", ActionKind::UploadHomework, "hw5")).is_err());
        assert!(decide(&w, &req("u1", ActionKind::SubmitHomework, "hw5")).is_err());
    }

    #[test]
    fn every_condition_fail_clause_renders_without_unknowns() {
        // One denied request per condition, each violating only that one.
        let cases: Vec<(WorldState, &str, ActionKind, &str, &str)> = vec![
            (uploaded("u1"), "u2", ActionKind::ReplaceHomework, "hw1", "P2.is_author"),
            (uploaded("u1"), "u3", ActionKind::ReviewHomework, "hw1", "P4.submitted"),
            (world_with_reviews(&["u2", "u3"], Some("u4")), "u5", ActionKind::ReviewHomework, "hw1", "P4.ungraded"),
            (world_with_reviews(&["u2", "u3"], Some("u4")), "u2", ActionKind::ReviseReview, "rv1", "P5.ungraded"),
            (world_with_reviews(&["u2", "u3"], Some("u4")), "u4", ActionKind::GradeHomework, "hw1", "P6.not_already_graded"),
        ];
        for (w, user, action, target, expect) in cases {
            let d = decide_req(&w, user, action, target);
            assert_eq!(d.violated_ids(), [expect], "{}", d.explanation);
            assert!(!d.explanation.contains("unknown"), "{}", d.explanation);
        }
    }

    #[test]
    fn append_mismatch_clauses() {
        let mut w = world_with_reviews(&["u2", "u3"], Some("u4"));
        w.apply_in_place(&req("u5", ActionKind::UploadHomework, "hw2")).unwrap();
        w.apply_in_place(&req("u5", ActionKind::SubmitHomework, "hw2")).unwrap();
        w.apply_in_place(&req("u6", ActionKind::ReviewHomework, "hw2")).unwrap();
        w.apply_in_place(&req("u4", ActionKind::AppendReviewToGrade, "rv1@gr1")).unwrap();
        let d = decide_req(&w, "u4", ActionKind::AppendReviewToGrade, "rv3@gr1");
        assert_eq!(d.violated_ids(), ["P7.review_matches_grade"]);
        assert_eq!(
            d.explanation,
            "DENY: Policy P7 \u{2014} review rv3 concerns hw2 but grade gr1 concerns hw1; only a matching review may be appended"
        );
        let d = decide_req(&w, "u4", ActionKind::AppendReviewToGrade, "rv1@gr1");
        assert_eq!(d.violated_ids(), ["P7.not_already_appended"]);
    }

    #[test]
    fn explain_reproduces_decision_text() {
        let w = world_with_reviews(&["u2"], None);
        let r = req("u2", ActionKind::ReviewHomework, "hw1");
        let snap = snapshot_for_request(&w, &r).unwrap();
        let d = decide_snapshot(&snap, &r);
        let texts: std::collections::BTreeSet<String> =
            (0..1000).map(|_| explain(&d, &r, &snap)).collect();
        assert_eq!(texts.len(), 1);
        assert_eq!(texts.into_iter().next().unwrap(), d.explanation);
    }

    #[test]
    fn unallocated_snapshot_denies_everything_but_upload() {
        let snap = StateSnapshot::unallocated("hw9", &UserId::from("u1"));
        for action in ActionKind::ALL {
            let d = decide_snapshot(&snap, &req("u1", action, "hw9"));
            assert_eq!(d.is_allow(), action == ActionKind::UploadHomework, "{action}");
        }
    }
}

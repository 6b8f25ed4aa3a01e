use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{config_lines, label_counts, majority, parse_actions, BaselineError};
use crate::generator::DatasetRecord;
use crate::model::{AccessRequest, ActionKind, ModelError};
use crate::oracle::{ConditionId, Decision, PolicyId, Verdict};

const ROLE_PERMITS: ConditionId = ConditionId::from_static("rbac.role_permits");

/// Assigning roles to `*` gives them to every user.
pub const ANY_USER: &str = "*";

/// Role assignments and the role/permission matrix.
///
/// Text form, one statement per line:
///
/// ```text
/// assign * = student
/// assign u7 = student, ta
/// permit student = upload_homework, submit_homework
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct RbacConfig {
    assignments: BTreeMap<String, BTreeSet<String>>,
    permissions: BTreeMap<String, BTreeSet<ActionKind>>,
}

impl RbacConfig {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn assign(&mut self, user: &str, role: &str) {
        self.assignments
            .entry(user.to_owned())
            .or_default()
            .insert(role.to_owned());
    }

    pub fn permit(&mut self, role: &str, action: ActionKind) {
        self.permissions.entry(role.to_owned()).or_default().insert(action);
    }

    /// Roles held by `user`, or `None` if the user has no assignment at all.
    pub fn roles_of(&self, user: &str) -> Option<BTreeSet<&str>> {
        let own = self.assignments.get(user);
        let any = self.assignments.get(ANY_USER);
        if own.is_none() && any.is_none() {
            return None;
        }
        Some(own.into_iter().chain(any).flatten().map(String::as_str).collect())
    }

    pub fn permitted_actions(&self, role: &str) -> BTreeSet<ActionKind> {
        self.permissions.get(role).cloned().unwrap_or_default()
    }

    /// Decides from the requester's roles and the action alone.
    pub fn decide(&self, request: &AccessRequest) -> Result<Decision, BaselineError> {
        let user = request.user.as_str();
        let roles = self
            .roles_of(user)
            .ok_or_else(|| ModelError::not_found("user", user))?;
        let granting = roles
            .iter()
            .find(|r| self.permissions.get(**r).is_some_and(|p| p.contains(&request.action)));
        let held = roles.iter().copied().collect::<Vec<_>>().join(", ");
        let (verdict, explanation) = match granting {
            Some(role) => (
                Verdict::Allow,
                format!("ALLOW: Policy rbac \u{2014} role {role} of {user} permits {}", request.action),
            ),
            None => (
                Verdict::Deny,
                format!(
                    "DENY: Policy rbac \u{2014} no role of {user} ({held}) permits {}",
                    request.action
                ),
            ),
        };
        let (satisfied, violated) = match verdict {
            Verdict::Allow => (vec![ROLE_PERMITS], vec![]),
            Verdict::Deny => (vec![], vec![ROLE_PERMITS]),
        };
        Ok(Decision {
            verdict,
            policy: PolicyId::Rbac,
            satisfied,
            violated,
            explanation,
        })
    }

    /// One role, `student`, held by everyone and permitted exactly the
    /// actions whose training labels are mostly allow (ties deny).
    pub fn fit_majority(train: &[DatasetRecord]) -> Result<Self, BaselineError> {
        if train.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let counts = label_counts(train);
        let mut cfg = RbacConfig::new();
        cfg.assign(ANY_USER, "student");
        cfg.permissions.insert("student".into(), BTreeSet::new());
        for action in ActionKind::ALL {
            if majority(counts[action.index()]) == Verdict::Allow {
                cfg.permit("student", action);
            }
        }
        Ok(cfg)
    }

    pub fn parse(text: &str) -> Result<Self, BaselineError> {
        let mut cfg = RbacConfig::new();
        for (line, content) in config_lines(text) {
            let bad = |message: &str| BaselineError::Config {
                line,
                message: message.to_owned(),
            };
            let (head, rhs) = content
                .split_once('=')
                .ok_or_else(|| bad("expected 'assign <user> = <roles>' or 'permit <role> = <actions>'"))?;
            let mut words = head.split_whitespace();
            let (Some(keyword), Some(subject), None) = (words.next(), words.next(), words.next()) else {
                return Err(bad("expected a keyword and one subject before '='"));
            };
            match keyword {
                "assign" => {
                    for role in rhs.split(',').map(str::trim).filter(|r| !r.is_empty()) {
                        cfg.assign(subject, role);
                    }
                }
                "permit" => {
                    let actions = parse_actions(rhs, line)?;
                    let entry = cfg.permissions.entry(subject.to_owned()).or_default();
                    entry.extend(actions);
                }
                other => return Err(bad(&format!("unknown statement '{other}'"))),
            }
        }
        Ok(cfg)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (user, roles) in &self.assignments {
            let roles: Vec<&str> = roles.iter().map(String::as_str).collect();
            let _ = writeln!(out, "assign {user} = {}", roles.join(", "));
        }
        for (role, actions) in &self.permissions {
            let actions: Vec<&str> = actions.iter().map(|a| a.as_str()).collect();
            let _ = writeln!(out, "permit {role} = {}", actions.join(", "));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::test_support::*;

    fn student_uploads() -> RbacConfig {
        RbacConfig::parse("assign * = student\npermit student = upload_homework\n").unwrap()
    }

    #[test]
    fn role_permits_upload() {
        let d = student_uploads()
            .decide(&req("u1", ActionKind::UploadHomework, "hw1"))
            .unwrap();
        assert_eq!(d.verdict, Verdict::Allow);
        assert_eq!(d.policy, PolicyId::Rbac);
        assert_eq!(d.explanation, "ALLOW: Policy rbac \u{2014} role student of u1 permits upload_homework");
    }

    #[test]
    fn grading_denied_whatever_the_reviews() {
        let cfg = student_uploads();
        let d = cfg.decide(&req("u1", ActionKind::GradeHomework, "hw1")).unwrap();
        assert_eq!(d.verdict, Verdict::Deny);
        assert_eq!(d.violated_ids(), ["rbac.role_permits"]);
        assert_eq!(d, cfg.decide(&req("u1", ActionKind::GradeHomework, "hw1")).unwrap());
    }

    #[test]
    fn unknown_users_are_not_found() {
        let cfg = RbacConfig::parse("assign u1 = student\npermit student = upload_homework").unwrap();
        assert!(cfg.decide(&req("u2", ActionKind::UploadHomework, "hw1")).is_err());
        assert!(cfg.decide(&req("u1", ActionKind::UploadHomework, "hw1")).unwrap().is_allow());
    }

    #[test]
    fn text_round_trip() {
        let cfg = RbacConfig::parse(
            "# roles\nassign * = student\nassign u3 = ta, student\npermit ta = grade_homework\npermit student = upload_homework, submit_homework\n",
        )
        .unwrap();
        assert_eq!(RbacConfig::parse(&cfg.to_text()).unwrap(), cfg);
        assert_eq!(cfg.roles_of("u3").unwrap().len(), 2);
        assert!(cfg.decide(&req("u3", ActionKind::GradeHomework, "hw1")).unwrap().is_allow());
        assert!(!cfg.decide(&req("u4", ActionKind::GradeHomework, "hw1")).unwrap().is_allow());
    }

    #[test]
    fn config_errors_name_the_line() {
        for text in ["assign u1 student", "permit student = fly", "grant x = y", "assign = student"] {
            let err = RbacConfig::parse(&format!("# header\n{text}")).unwrap_err();
            assert!(matches!(err, BaselineError::Config { line: 2, .. }), "{text}: {err}");
        }
    }

    #[test]
    fn empty_training_set() {
        assert!(matches!(RbacConfig::fit_majority(&[]), Err(BaselineError::EmptyTrainingSet)));
    }
}

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

use super::{config_lines, majority, parse_actions, BaselineError};
use crate::generator::DatasetRecord;
use crate::model::{
    snapshot_for_request, split_append_target, AccessRequest, ActionKind, ModelError, ResourceKind,
    StateSnapshot, WorldState,
};
use crate::oracle::{ConditionId, Decision, PolicyId, Verdict};

const ACL_ENTRY: ConditionId = ConditionId::from_static("dac.acl_entry");

/// What the owner of each kind of resource may do without an explicit
/// grant.
pub const OWNER_GRANTS: [(ResourceKind, &[ActionKind]); 3] = [
    (
        ResourceKind::Homework,
        &[ActionKind::ReplaceHomework, ActionKind::SubmitHomework],
    ),
    (ResourceKind::Review, &[ActionKind::ReviseReview]),
    (ResourceKind::Grade, &[ActionKind::AppendReviewToGrade]),
];

/// Per-resource access-control lists.
///
/// A request is allowed when the action is an upload (everyone may create
/// resources), the requester owns the target and the action is in the
/// owner grant set for its kind, the action is granted publicly for that
/// kind, or the target's ACL lists the requester for the action. Workflow
/// flags, counts and other resources are never consulted. Appending a
/// review is checked against the review's list, since the review is what
/// the request names first.
///
/// Text form:
///
/// ```text
/// public homework = review_homework
/// grant hw1 u4 = review_homework
/// ```
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct DacAcl {
    entries: BTreeMap<String, BTreeMap<String, BTreeSet<ActionKind>>>,
    public: BTreeMap<ResourceKind, BTreeSet<ActionKind>>,
}

fn kind_from_str(s: &str) -> Option<ResourceKind> {
    match s {
        "homework" => Some(ResourceKind::Homework),
        "review" => Some(ResourceKind::Review),
        "grade" => Some(ResourceKind::Grade),
        _ => None,
    }
}

/// The ACL-bearing resource of a snapshot and its owner.
fn acl_target(snap: &StateSnapshot) -> (&str, Option<&str>) {
    let id = snap.resource_id.as_str();
    let key = split_append_target(id).map_or(id, |(left, _)| left);
    let owner = match snap.resource_type {
        ResourceKind::Homework => snap.author.as_ref(),
        ResourceKind::Review | ResourceKind::Grade => snap.creator.as_ref(),
        ResourceKind::Unallocated => None,
    };
    (key, owner.map(|u| u.as_str()))
}

fn owner_grants(kind: ResourceKind) -> &'static [ActionKind] {
    OWNER_GRANTS
        .iter()
        .find(|(k, _)| *k == kind)
        .map_or(&[], |(_, a)| *a)
}

/// The kind of resource an action names first.
fn target_kind(action: ActionKind) -> ResourceKind {
    match action {
        ActionKind::UploadHomework => ResourceKind::Unallocated,
        ActionKind::ReviseReview | ActionKind::AppendReviewToGrade => ResourceKind::Review,
        _ => ResourceKind::Homework,
    }
}

impl DacAcl {
    pub fn new() -> Self {
        Self::default()
    }

    /// Adds an ACL entry. Granting twice is the same as granting once.
    pub fn grant(
        &mut self,
        world: &WorldState,
        resource: &str,
        user: &str,
        action: ActionKind,
    ) -> Result<(), BaselineError> {
        if !world.contains_id(resource) {
            return Err(ModelError::not_found("resource", resource).into());
        }
        self.grant_unchecked(resource, user, action);
        Ok(())
    }

    /// Removes an ACL entry; removing an absent entry does nothing.
    pub fn revoke(
        &mut self,
        world: &WorldState,
        resource: &str,
        user: &str,
        action: ActionKind,
    ) -> Result<(), BaselineError> {
        if !world.contains_id(resource) {
            return Err(ModelError::not_found("resource", resource).into());
        }
        if let Some(users) = self.entries.get_mut(resource) {
            if let Some(actions) = users.get_mut(user) {
                actions.remove(&action);
                if actions.is_empty() {
                    users.remove(user);
                }
            }
            if users.is_empty() {
                self.entries.remove(resource);
            }
        }
        Ok(())
    }

    fn grant_unchecked(&mut self, resource: &str, user: &str, action: ActionKind) {
        self.entries
            .entry(resource.to_owned())
            .or_default()
            .entry(user.to_owned())
            .or_default()
            .insert(action);
    }

    pub fn grant_public(&mut self, kind: ResourceKind, action: ActionKind) {
        self.public.entry(kind).or_default().insert(action);
    }

    pub fn public_grants(&self, kind: ResourceKind) -> BTreeSet<ActionKind> {
        self.public.get(&kind).cloned().unwrap_or_default()
    }

    pub fn is_listed(&self, resource: &str, user: &str, action: ActionKind) -> bool {
        self.entries
            .get(resource)
            .and_then(|u| u.get(user))
            .is_some_and(|a| a.contains(&action))
    }

    /// Public grants fitted to training data: for each action the owner
    /// defaults do not already cover, grant it publicly on its target kind
    /// when most training requests from non-owners were allowed.
    pub fn fit_majority(train: &[DatasetRecord]) -> Result<Self, BaselineError> {
        if train.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let mut counts = [(0usize, 0usize); 7];
        for r in train {
            let (_, owner) = acl_target(&r.state);
            let by_owner = owner == Some(r.request.user_id.as_str())
                && owner_grants(r.state.resource_type).contains(&r.action());
            if by_owner {
                continue;
            }
            let c = &mut counts[r.action().index()];
            match r.decision {
                Verdict::Allow => c.0 += 1,
                Verdict::Deny => c.1 += 1,
            }
        }
        let mut acl = DacAcl::new();
        for action in ActionKind::ALL {
            if action == ActionKind::UploadHomework {
                continue;
            }
            if majority(counts[action.index()]) == Verdict::Allow {
                acl.grant_public(target_kind(action), action);
            }
        }
        Ok(acl)
    }

    pub fn decide(&self, world: &WorldState, request: &AccessRequest) -> Result<Decision, BaselineError> {
        let snap = snapshot_for_request(world, request)?;
        self.decide_snapshot(&snap, request)
    }

    pub fn decide_snapshot(&self, snap: &StateSnapshot, request: &AccessRequest) -> Result<Decision, BaselineError> {
        let action = request.action;
        let user = request.user.as_str();
        let (resource, owner) = acl_target(snap);
        let reason = if action == ActionKind::UploadHomework {
            Some("anyone may create a homework".to_owned())
        } else if snap.resource_type == ResourceKind::Unallocated {
            return Err(ModelError::not_found("resource", resource).into());
        } else if owner == Some(user) && owner_grants(snap.resource_type).contains(&action) {
            Some(format!("{user} owns {resource} and owners may {action}"))
        } else if self.public_grants(snap.resource_type).contains(&action) {
            Some(format!("{action} is granted to everyone on {}s", snap.resource_type))
        } else if self.is_listed(resource, user, action) {
            Some(format!("the ACL of {resource} grants {action} to {user}"))
        } else {
            None
        };
        let decision = match reason {
            Some(why) => Decision {
                verdict: Verdict::Allow,
                policy: PolicyId::Dac,
                satisfied: vec![ACL_ENTRY],
                violated: vec![],
                explanation: format!("ALLOW: Policy dac \u{2014} {why}"),
            },
            None => Decision {
                verdict: Verdict::Deny,
                policy: PolicyId::Dac,
                satisfied: vec![],
                violated: vec![ACL_ENTRY],
                explanation: format!("DENY: Policy dac \u{2014} no ACL entry on {resource} grants {action} to {user}"),
            },
        };
        Ok(decision)
    }

    pub fn parse(text: &str) -> Result<Self, BaselineError> {
        let mut acl = DacAcl::new();
        for (line, content) in config_lines(text) {
            let bad = |message: String| BaselineError::Config { line, message };
            let (head, rhs) = content
                .split_once('=')
                .ok_or_else(|| bad("expected 'public <kind> = ...' or 'grant <resource> <user> = ...'".into()))?;
            let words: Vec<&str> = head.split_whitespace().collect();
            let actions = parse_actions(rhs, line)?;
            match words.as_slice() {
                ["public", kind] => {
                    let kind = kind_from_str(kind).ok_or_else(|| bad(format!("unknown resource kind {kind}")))?;
                    for a in actions {
                        acl.grant_public(kind, a);
                    }
                }
                ["grant", resource, user] => {
                    for a in actions {
                        acl.grant_unchecked(resource, user, a);
                    }
                }
                _ => return Err(bad(format!("cannot read '{head}'"))),
            }
        }
        Ok(acl)
    }

    pub fn to_text(&self) -> String {
        let join = |set: &BTreeSet<ActionKind>| set.iter().map(|a| a.as_str()).collect::<Vec<_>>().join(", ");
        let mut out = String::new();
        for (kind, actions) in &self.public {
            let _ = writeln!(out, "public {kind} = {}", join(actions));
        }
        for (resource, users) in &self.entries {
            for (user, actions) in users {
                let _ = writeln!(out, "grant {resource} {user} = {}", join(actions));
            }
        }
        out
    }
}

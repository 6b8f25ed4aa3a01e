//! Lowering of validated documents to an evaluator over state snapshots.
//!
//! Names and attributes are resolved once at compile time; evaluation only
//! reads snapshot fields. Anything the snapshot does not carry evaluates to
//! "unknown", and a requirement holds only if it is definitely true, so
//! missing data denies.

use std::sync::Arc;

use super::ast::{CmpOp, Expr, ExprKind};
use super::validate::{Dialect, ValidatedDoc};
use crate::model::{
    snapshot_for_request, split_append_target, AccessRequest, ActionKind, ModelError, ResourceKind,
    StateSnapshot, WorldState,
};
use crate::oracle::{ConditionId, Decision, PolicyId, Templates, Verdict};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Attr {
    ResourceAuthor,
    ResourceSubmitted,
    /// The homework's graded flag, whether the resource is the homework or
    /// one of its reviews.
    ResourceGraded,
    ResourceCreator,
    ResourceHomework,
    GradeCreator,
    GradeHomework,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Builtin {
    ReviewCount,
    HasReviewed,
    GradeCreator,
    AlreadyAppended,
    SameHomework,
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Node {
    Bool(bool),
    Int(i64),
    Requester,
    Resource,
    Grade,
    Attr(Attr),
    Call(Builtin, Vec<Node>),
    Not(Box<Node>),
    And(Box<Node>, Box<Node>),
    Or(Box<Node>, Box<Node>),
    Cmp(CmpOp, Box<Node>, Box<Node>),
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Entity {
    Homework,
    Review,
    Grade,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Value<'a> {
    Bool(bool),
    Int(i64),
    User(&'a str),
    Entity(Entity, &'a str),
}

fn lower(e: &Expr) -> Node {
    match &e.kind {
        ExprKind::Bool(b) => Node::Bool(*b),
        ExprKind::Int(n) => Node::Int(*n),
        ExprKind::Path(segs) => {
            let segs: Vec<&str> = segs.iter().map(String::as_str).collect();
            match segs.as_slice() {
                ["requester"] => Node::Requester,
                ["resource"] => Node::Resource,
                ["grade"] => Node::Grade,
                ["resource", "author"] => Node::Attr(Attr::ResourceAuthor),
                ["resource", "submitted"] => Node::Attr(Attr::ResourceSubmitted),
                ["resource", "graded"] => Node::Attr(Attr::ResourceGraded),
                ["resource", "creator"] => Node::Attr(Attr::ResourceCreator),
                ["resource", "homework"] => Node::Attr(Attr::ResourceHomework),
                ["grade", "creator"] => Node::Attr(Attr::GradeCreator),
                ["grade", "homework"] => Node::Attr(Attr::GradeHomework),
                other => unreachable!("validated path {other:?}"),
            }
        }
        ExprKind::Call { name, args } => {
            let b = match name.as_str() {
                "review_count" => Builtin::ReviewCount,
                "has_reviewed" => Builtin::HasReviewed,
                "grade_creator" => Builtin::GradeCreator,
                "already_appended" => Builtin::AlreadyAppended,
                "same_homework" => Builtin::SameHomework,
                other => unreachable!("validated builtin {other}"),
            };
            Node::Call(b, args.iter().map(lower).collect())
        }
        ExprKind::Not(inner) => Node::Not(Box::new(lower(inner))),
        ExprKind::And(a, b) => Node::And(Box::new(lower(a)), Box::new(lower(b))),
        ExprKind::Or(a, b) => Node::Or(Box::new(lower(a)), Box::new(lower(b))),
        ExprKind::Compare { op, lhs, rhs } => Node::Cmp(
            *op,
            Box::new(lower(lhs)),
            Box::new(lower(rhs)),
        ),
    }
}

/// The review id of a review-typed snapshot (the left half of an append
/// target).
fn review_id(snap: &StateSnapshot) -> Option<&str> {
    if snap.resource_type != ResourceKind::Review {
        return None;
    }
    let id = snap.resource_id.as_str();
    Some(split_append_target(id).map_or(id, |(r, _)| r))
}

fn is_entity(v: Value<'_>, kind: Entity, id: Option<&str>) -> bool {
    matches!(v, Value::Entity(k, x) if k == kind && Some(x) == id)
}

fn eval<'a>(node: &Node, snap: &'a StateSnapshot) -> Option<Value<'a>> {
    let hw_id = snap.homework_id.as_ref().map(|h| h.as_str());
    match node {
        Node::Bool(b) => Some(Value::Bool(*b)),
        Node::Int(n) => Some(Value::Int(*n)),
        Node::Requester => Some(Value::User(snap.requester.as_str())),
        Node::Resource => match snap.resource_type {
            ResourceKind::Homework => Some(Value::Entity(Entity::Homework, snap.resource_id.as_str())),
            ResourceKind::Review => review_id(snap).map(|r| Value::Entity(Entity::Review, r)),
            ResourceKind::Grade => Some(Value::Entity(Entity::Grade, snap.resource_id.as_str())),
            ResourceKind::Unallocated => None,
        },
        Node::Grade => snap.grade_id.as_ref().map(|g| Value::Entity(Entity::Grade, g.as_str())),
        Node::Attr(a) => match a {
            Attr::ResourceAuthor => snap.author.as_ref().map(|u| Value::User(u.as_str())),
            Attr::ResourceSubmitted => snap.submitted.map(Value::Bool),
            Attr::ResourceGraded => match snap.resource_type {
                ResourceKind::Review => snap.homework_graded.map(Value::Bool),
                _ => snap.graded.map(Value::Bool),
            },
            Attr::ResourceCreator => snap.creator.as_ref().map(|u| Value::User(u.as_str())),
            Attr::ResourceHomework => hw_id.map(|h| Value::Entity(Entity::Homework, h)),
            Attr::GradeCreator => snap.grade_creator.as_ref().map(|u| Value::User(u.as_str())),
            Attr::GradeHomework => snap
                .grade_homework_id
                .as_ref()
                .map(|h| Value::Entity(Entity::Homework, h.as_str())),
        },
        Node::Call(b, args) => {
            let vals: Vec<Value<'a>> = args.iter().map(|a| eval(a, snap)).collect::<Option<_>>()?;
            let grade_id = snap.grade_id.as_ref().map(|g| g.as_str());
            match (b, vals.as_slice()) {
                (Builtin::ReviewCount, [h]) if is_entity(*h, Entity::Homework, hw_id) => {
                    snap.review_count.map(|n| Value::Int(i64::from(n)))
                }
                (Builtin::HasReviewed, [Value::User(u), h]) if is_entity(*h, Entity::Homework, hw_id) => {
                    match &snap.reviewers {
                        Some(rs) => Some(Value::Bool(rs.iter().any(|r| r.as_str() == *u))),
                        None if *u == snap.requester.as_str() => Some(Value::Bool(snap.requester_has_reviewed)),
                        None => None,
                    }
                }
                (Builtin::GradeCreator, [g]) if is_entity(*g, Entity::Grade, grade_id) => {
                    snap.grade_creator.as_ref().map(|u| Value::User(u.as_str()))
                }
                (Builtin::AlreadyAppended, [r]) if is_entity(*r, Entity::Review, review_id(snap)) => {
                    snap.review_appended.map(Value::Bool)
                }
                (Builtin::SameHomework, [r, g])
                    if is_entity(*r, Entity::Review, review_id(snap)) && is_entity(*g, Entity::Grade, grade_id) =>
                {
                    match (&snap.homework_id, &snap.grade_homework_id) {
                        (Some(a), Some(b)) => Some(Value::Bool(a == b)),
                        _ => None,
                    }
                }
                _ => None,
            }
        }
        // Kleene logic: a definite operand decides where it can, otherwise
        // unknown propagates.
        Node::Not(inner) => match eval(inner, snap)? {
            Value::Bool(b) => Some(Value::Bool(!b)),
            _ => None,
        },
        Node::And(a, b) => match (eval(a, snap), eval(b, snap)) {
            (Some(Value::Bool(false)), _) | (_, Some(Value::Bool(false))) => Some(Value::Bool(false)),
            (Some(Value::Bool(true)), Some(Value::Bool(true))) => Some(Value::Bool(true)),
            _ => None,
        },
        Node::Or(a, b) => match (eval(a, snap), eval(b, snap)) {
            (Some(Value::Bool(true)), _) | (_, Some(Value::Bool(true))) => Some(Value::Bool(true)),
            (Some(Value::Bool(false)), Some(Value::Bool(false))) => Some(Value::Bool(false)),
            _ => None,
        },
        Node::Cmp(op, lhs, rhs) => {
            let (l, r) = (eval(lhs, snap)?, eval(rhs, snap)?);
            let b = match (l, r) {
                (Value::Int(x), Value::Int(y)) => match op {
                    CmpOp::Eq => x == y,
                    CmpOp::Ne => x != y,
                    CmpOp::Lt => x < y,
                    CmpOp::Le => x <= y,
                    CmpOp::Gt => x > y,
                    CmpOp::Ge => x >= y,
                },
                (l, r) => match op {
                    CmpOp::Eq => l == r,
                    CmpOp::Ne => l != r,
                    _ => return None,
                },
            };
            Some(Value::Bool(b))
        }
    }
}

/// One compiled policy.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct CompiledPolicy {
    pub id: PolicyId,
    pub action: ActionKind,
    requirements: Vec<(ConditionId, Node)>,
}

impl CompiledPolicy {
    pub fn condition_ids(&self) -> impl Iterator<Item = &ConditionId> {
        self.requirements.iter().map(|(id, _)| id)
    }
}

/// An immutable, thread-safe evaluator for a validated document.
#[derive(Clone, Debug)]
pub struct CompiledPolicySet {
    by_action: [Option<CompiledPolicy>; 7],
    dialect: Dialect,
    templates: Arc<Templates>,
}

/// Compiles a validated document, rendering explanations with the shipped
/// templates.
pub fn compile(doc: &ValidatedDoc) -> CompiledPolicySet {
    let mut by_action: [Option<CompiledPolicy>; 7] = Default::default();
    for p in &doc.policies {
        let requirements = p
            .requirements
            .iter()
            .map(|r| (ConditionId::new(r.condition_id.clone()), lower(&r.expr)))
            .collect();
        by_action[p.action.index()] = Some(CompiledPolicy {
            id: p.id.clone(),
            action: p.action,
            requirements,
        });
    }
    CompiledPolicySet {
        by_action,
        dialect: doc.dialect,
        templates: crate::oracle::Oracle::builtin().templates().clone(),
    }
}

impl CompiledPolicySet {
    pub fn with_templates(mut self, templates: Arc<Templates>) -> Self {
        self.templates = templates;
        self
    }

    pub fn dialect(&self) -> Dialect {
        self.dialect
    }

    pub fn policy_for(&self, action: ActionKind) -> Option<&CompiledPolicy> {
        self.by_action[action.index()].as_ref()
    }

    pub fn policies(&self) -> impl Iterator<Item = &CompiledPolicy> {
        self.by_action.iter().flatten()
    }

    /// Decides `request` against the live state.
    pub fn evaluate(&self, world: &WorldState, request: &AccessRequest) -> Result<Decision, ModelError> {
        let snap = snapshot_for_request(world, request)?;
        Ok(self.evaluate_snapshot(&snap, request))
    }

    /// Decides against a snapshot. All requirements are evaluated in
    /// order. No policy for the action means deny.
    pub fn evaluate_snapshot(&self, snap: &StateSnapshot, request: &AccessRequest) -> Decision {
        let Some(policy) = self.policy_for(request.action) else {
            let explanation = self
                .templates
                .explain(Verdict::Deny, &PolicyId::NoPolicy, &[], &[], request, snap);
            return Decision {
                verdict: Verdict::Deny,
                policy: PolicyId::NoPolicy,
                satisfied: vec![],
                violated: vec![],
                explanation,
            };
        };
        let fits = snap.fits_action(request.action);
        let mut satisfied = Vec::new();
        let mut violated = Vec::new();
        for (id, node) in &policy.requirements {
            let holds = fits && eval(node, snap) == Some(Value::Bool(true));
            if holds {
                satisfied.push(id.clone());
            } else {
                violated.push(id.clone());
            }
        }
        let verdict = if fits && violated.is_empty() {
            Verdict::Allow
        } else {
            Verdict::Deny
        };
        let explanation = self
            .templates
            .explain(verdict, &policy.id, &satisfied, &violated, request, snap);
        Decision {
            verdict,
            policy: policy.id.clone(),
            satisfied,
            violated,
            explanation,
        }
    }
}

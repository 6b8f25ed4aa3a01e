//! Semantic checks: action names, name binding per action, attribute
//! schemas, builtin signatures and boolean typing.
//!
//! Every error found is reported, not just the first one.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use super::ast::{Expr, ExprKind, PolicyDoc, Requirement, Span};
use crate::model::ActionKind;
use crate::oracle::PolicyId;

/// Which subset of the language a document may use.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Dialect {
    /// Everything, including the history builtins.
    #[default]
    Full,
    /// Scalar attribute comparisons only: no builtins, no `grade` binding,
    /// no `resource.homework`.
    Abac,
}

impl Dialect {
    pub fn name(self) -> &'static str {
        match self {
            Dialect::Full => "full",
            Dialect::Abac => "ABAC",
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Type {
    Bool,
    Int,
    User,
    Homework,
    Review,
    Grade,
}

impl fmt::Display for Type {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Type::Bool => "boolean",
            Type::Int => "integer",
            Type::User => "user",
            Type::Homework => "homework",
            Type::Review => "review",
            Type::Grade => "grade",
        })
    }
}

impl Type {
    fn plural(self) -> &'static str {
        match self {
            Type::Homework => "homeworks",
            Type::Review => "reviews",
            Type::Grade => "grades",
            Type::User => "users",
            Type::Bool => "booleans",
            Type::Int => "integers",
        }
    }
}

/// The type `resource` has in a policy on `action`, if it is bound at all.
pub fn resource_type(action: ActionKind) -> Option<Type> {
    match action {
        ActionKind::UploadHomework => None,
        ActionKind::ReviseReview | ActionKind::AppendReviewToGrade => Some(Type::Review),
        _ => Some(Type::Homework),
    }
}

/// Attribute schema per entity type.
pub fn attribute_type(entity: Type, attr: &str) -> Option<Type> {
    Some(match (entity, attr) {
        (Type::Homework, "author") => Type::User,
        (Type::Homework, "submitted") => Type::Bool,
        (Type::Homework, "graded") => Type::Bool,
        (Type::Review, "creator") => Type::User,
        (Type::Review, "graded") => Type::Bool,
        (Type::Review, "homework") => Type::Homework,
        (Type::Grade, "creator") => Type::User,
        (Type::Grade, "homework") => Type::Homework,
        _ => return None,
    })
}

const ABAC_ATTRIBUTES: [&str; 4] = ["author", "creator", "submitted", "graded"];

/// Builtin signatures: name, parameter types, result type.
pub const BUILTINS: [(&str, &[Type], Type); 5] = [
    ("review_count", &[Type::Homework], Type::Int),
    ("has_reviewed", &[Type::User, Type::Homework], Type::Bool),
    ("grade_creator", &[Type::Grade], Type::User),
    ("already_appended", &[Type::Review], Type::Bool),
    ("same_homework", &[Type::Review, Type::Grade], Type::Bool),
];

#[derive(Clone, Debug, PartialEq, Eq, thiserror::Error)]
#[error("{line}:{column}: {message}")]
pub struct SemanticError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

/// A policy whose action, names and types all check out.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedPolicy {
    pub id: PolicyId,
    pub action: ActionKind,
    pub requirements: Vec<Requirement>,
}

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct ValidatedDoc {
    pub doc: PolicyDoc,
    pub dialect: Dialect,
    pub policies: Vec<ValidatedPolicy>,
}

struct Checker {
    dialect: Dialect,
    action: ActionKind,
    errors: Vec<SemanticError>,
}

impl Checker {
    fn err(&mut self, span: Span, message: impl Into<String>) {
        self.errors.push(SemanticError {
            line: span.line,
            column: span.column,
            message: message.into(),
        });
    }

    fn path(&mut self, segs: &[String], span: Span) -> Option<Type> {
        let abac = self.dialect == Dialect::Abac;
        let base = match segs[0].as_str() {
            "requester" => Type::User,
            "resource" => match resource_type(self.action) {
                Some(t) => t,
                None => {
                    self.err(span, format!("{} has no resource attributes", self.action));
                    return None;
                }
            },
            "grade" => {
                if abac {
                    self.err(span, "grade is not available in the ABAC dialect");
                    return None;
                }
                if self.action != ActionKind::AppendReviewToGrade {
                    self.err(span, format!("grade is only bound on {}", ActionKind::AppendReviewToGrade));
                    return None;
                }
                Type::Grade
            }
            other => {
                self.err(span, format!("unknown name {other}"));
                return None;
            }
        };
        match segs {
            [_] => {
                if abac && base != Type::User {
                    self.err(span, "the ABAC dialect compares attributes, not whole resources");
                    return None;
                }
                Some(base)
            }
            [_, attr] => {
                let Some(t) = attribute_type(base, attr) else {
                    self.err(span, format!("{} have no attribute {attr}", base.plural()));
                    return None;
                };
                if abac && !ABAC_ATTRIBUTES.contains(&attr.as_str()) {
                    self.err(span, format!("attribute {attr} is not available in the ABAC dialect"));
                    return None;
                }
                Some(t)
            }
            _ => {
                self.err(span, "attribute paths have at most two segments");
                None
            }
        }
    }

    fn call(&mut self, name: &str, args: &[Expr], span: Span) -> Option<Type> {
        let arg_types: Vec<Option<Type>> = args.iter().map(|a| self.expr(a)).collect();
        let Some((_, params, result)) = BUILTINS.iter().find(|(n, _, _)| *n == name) else {
            self.err(span, format!("unknown function {name}"));
            return None;
        };
        if self.dialect == Dialect::Abac {
            self.err(span, format!("function {name} is not available in the ABAC dialect"));
            return None;
        }
        if params.len() != args.len() {
            let plural = if params.len() == 1 { "" } else { "s" };
            self.err(
                span,
                format!("{name} expects {} argument{plural}, found {}", params.len(), args.len()),
            );
            return None;
        }
        let mut ok = true;
        for (i, (want, got)) in params.iter().zip(&arg_types).enumerate() {
            match got {
                Some(got) if got != want => {
                    self.err(
                        args[i].span,
                        format!("argument {} of {name} must be {want}, found {got}", i + 1),
                    );
                    ok = false;
                }
                Some(_) => {}
                None => ok = false,
            }
        }
        ok.then_some(*result)
    }

    fn boolean(&mut self, e: &Expr, what: &str) -> bool {
        match self.expr(e) {
            Some(Type::Bool) => true,
            Some(t) => {
                self.err(e.span, format!("{what} must be boolean, found {t}"));
                false
            }
            None => false,
        }
    }

    fn expr(&mut self, e: &Expr) -> Option<Type> {
        match &e.kind {
            ExprKind::Bool(_) => Some(Type::Bool),
            ExprKind::Int(_) => Some(Type::Int),
            ExprKind::Path(segs) => self.path(segs, e.span),
            ExprKind::Call { name, args } => self.call(name, args, e.span),
            ExprKind::Not(inner) => self.boolean(inner, "operand of not").then_some(Type::Bool),
            ExprKind::And(a, b) | ExprKind::Or(a, b) => {
                let word = if matches!(e.kind, ExprKind::And(..)) { "and" } else { "or" };
                let l = self.boolean(a, &format!("operand of {word}"));
                let r = self.boolean(b, &format!("operand of {word}"));
                (l && r).then_some(Type::Bool)
            }
            ExprKind::Compare { op, lhs, rhs } => {
                let (l, r) = (self.expr(lhs), self.expr(rhs));
                let (l, r) = (l?, r?);
                if op.is_ordering() {
                    if l != Type::Int || r != Type::Int {
                        self.err(e.span, format!("operator {} needs integers, found {l} and {r}", op.as_str()));
                        return None;
                    }
                } else if l != r {
                    self.err(e.span, format!("cannot compare {l} with {r}"));
                    return None;
                }
                Some(Type::Bool)
            }
        }
    }
}

/// Validates `doc` in the full dialect.
pub fn validate(doc: &PolicyDoc) -> Result<ValidatedDoc, Vec<SemanticError>> {
    validate_dialect(doc, Dialect::Full)
}

pub fn validate_dialect(doc: &PolicyDoc, dialect: Dialect) -> Result<ValidatedDoc, Vec<SemanticError>> {
    let mut errors = Vec::new();
    let mut policies = Vec::new();
    let mut ids: BTreeMap<&str, usize> = BTreeMap::new();
    for def in &doc.policies {
        if let Some(line) = ids.get(def.id.as_str()) {
            errors.push(SemanticError {
                line: def.span.line,
                column: def.span.column,
                message: format!("duplicate policy id {} (also defined at line {line})", def.id),
            });
        } else {
            ids.insert(&def.id, def.span.line);
        }
        let action = match def.action.parse::<ActionKind>() {
            Ok(a) => a,
            Err(_) => {
                errors.push(SemanticError {
                    line: def.action_span.line,
                    column: def.action_span.column,
                    message: format!("unknown action {}", def.action),
                });
                continue;
            }
        };
        let mut checker = Checker {
            dialect,
            action,
            errors: Vec::new(),
        };
        let mut seen = BTreeSet::new();
        for req in &def.requirements {
            if !seen.insert(req.condition_id.as_str()) {
                checker.err(req.span, format!("duplicate condition id {}", req.condition_id));
            }
            checker.boolean(&req.expr, "requirement");
        }
        errors.append(&mut checker.errors);
        policies.push(ValidatedPolicy {
            id: PolicyId::from_label(&def.id),
            action,
            requirements: def.requirements.clone(),
        });
    }
    if errors.is_empty() {
        Ok(ValidatedDoc {
            doc: doc.clone(),
            dialect,
            policies,
        })
    } else {
        errors.sort_by_key(|e| (e.line, e.column));
        Err(errors)
    }
}

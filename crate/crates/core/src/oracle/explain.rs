//! Explanation templates and their rendering.
//!
//! The template file is a list of `key = value` lines; `#` starts a comment
//! line. Values may reference the placeholders in [`Placeholder`] as
//! `{name}`. Every key the oracle needs must be present, so a bad file is
//! rejected at load time rather than producing half-rendered explanations.

use std::collections::BTreeMap;
use std::path::Path;

use super::policy::{Condition, ConditionId, PolicyId, Verdict};
use crate::model::{split_append_target, AccessRequest, ActionKind, ResourceKind, StateSnapshot};

#[derive(Debug, thiserror::Error)]
pub enum TemplateError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("missing template key '{0}'")]
    MissingKey(String),
    #[error("reading {path}: {source}")]
    Io {
        path: String,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
enum Placeholder {
    Requester,
    Resource,
    Author,
    Creator,
    ReviewCount,
    Homework,
    Review,
    Grade,
    GradeCreator,
    GradeHomework,
    ResourceType,
    ExpectedType,
    Action,
    Id,
}

impl Placeholder {
    fn parse(name: &str) -> Option<Self> {
        Some(match name {
            "requester" => Placeholder::Requester,
            "resource" => Placeholder::Resource,
            "author" => Placeholder::Author,
            "creator" => Placeholder::Creator,
            "review_count" => Placeholder::ReviewCount,
            "homework" => Placeholder::Homework,
            "review" => Placeholder::Review,
            "grade" => Placeholder::Grade,
            "grade_creator" => Placeholder::GradeCreator,
            "grade_homework" => Placeholder::GradeHomework,
            "resource_type" => Placeholder::ResourceType,
            "expected_type" => Placeholder::ExpectedType,
            "action" => Placeholder::Action,
            "id" => Placeholder::Id,
            _ => return None,
        })
    }
}

#[derive(Clone, Debug, PartialEq, Eq)]
enum Segment {
    Text(String),
    Var(Placeholder),
}

/// A parsed template file.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Templates {
    entries: BTreeMap<String, Vec<Segment>>,
}

/// The template file shipped with the crate.
pub const BUILTIN_TEMPLATES: &str = include_str!("../../../../policies/explanations.txt");

fn required_keys() -> Vec<String> {
    let mut keys: Vec<String> = ["P1.open", "type_mismatch", "no_policy", "generic.pass", "generic.fail", "generic.open"]
        .into_iter()
        .map(String::from)
        .collect();
    for c in Condition::ALL {
        keys.push(format!("{}.pass", c.as_str()));
        keys.push(format!("{}.fail", c.as_str()));
    }
    keys
}

fn parse_value(value: &str, line: usize) -> Result<Vec<Segment>, TemplateError> {
    let mut segments = Vec::new();
    let mut rest = value;
    while let Some(open) = rest.find('{') {
        if open > 0 {
            segments.push(Segment::Text(rest[..open].to_owned()));
        }
        let after = &rest[open + 1..];
        let close = after.find('}').ok_or_else(|| TemplateError::Syntax {
            line,
            message: "unclosed '{' in template".into(),
        })?;
        let name = &after[..close];
        let var = Placeholder::parse(name).ok_or_else(|| TemplateError::Syntax {
            line,
            message: format!("unknown placeholder {{{name}}}"),
        })?;
        segments.push(Segment::Var(var));
        rest = &after[close + 1..];
    }
    if rest.contains('}') {
        return Err(TemplateError::Syntax {
            line,
            message: "stray '}' in template".into(),
        });
    }
    if !rest.is_empty() {
        segments.push(Segment::Text(rest.to_owned()));
    }
    Ok(segments)
}

impl Templates {
    pub fn parse(source: &str) -> Result<Self, TemplateError> {
        let mut entries = BTreeMap::new();
        for (idx, raw) in source.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            let (key, value) = trimmed.split_once('=').ok_or_else(|| TemplateError::Syntax {
                line,
                message: "expected 'key = value'".into(),
            })?;
            let key = key.trim();
            if key.is_empty() {
                return Err(TemplateError::Syntax {
                    line,
                    message: "empty key".into(),
                });
            }
            let segments = parse_value(value.trim(), line)?;
            if entries.insert(key.to_owned(), segments).is_some() {
                return Err(TemplateError::Syntax {
                    line,
                    message: format!("duplicate key '{key}'"),
                });
            }
        }
        for key in required_keys() {
            if !entries.contains_key(&key) {
                return Err(TemplateError::MissingKey(key));
            }
        }
        Ok(Templates { entries })
    }

    pub fn load(path: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|source| TemplateError::Io {
            path: path.display().to_string(),
            source,
        })?;
        Self::parse(&text)
    }

    pub fn builtin() -> Self {
        Self::parse(BUILTIN_TEMPLATES).expect("shipped template file is valid")
    }

    pub fn contains(&self, key: &str) -> bool {
        self.entries.contains_key(key)
    }

    fn render_into(&self, key: &str, ctx: &Context<'_>, id: &str, out: &mut String) -> bool {
        let Some(segments) = self.entries.get(key) else {
            return false;
        };
        for seg in segments {
            match seg {
                Segment::Text(t) => out.push_str(t),
                Segment::Var(v) => out.push_str(&ctx.value(*v, id)),
            }
        }
        true
    }

    fn render_condition(&self, id: &ConditionId, pass: bool, ctx: &Context<'_>, out: &mut String) {
        let suffix = if pass { "pass" } else { "fail" };
        let key = format!("{id}.{suffix}");
        if !self.render_into(&key, ctx, id.as_str(), out) {
            self.render_into(&format!("generic.{suffix}"), ctx, id.as_str(), out);
        }
    }

    /// Renders the explanation for a decision trace.
    ///
    /// Deny lists the violated clauses; allow lists the satisfied ones, or
    /// the policy's `open` clause when it has no conditions. A snapshot that
    /// does not fit the action renders the type-mismatch clause instead, and
    /// `NoPolicy` renders the default-deny clause.
    pub fn explain(
        &self,
        verdict: Verdict,
        policy: &PolicyId,
        satisfied: &[ConditionId],
        violated: &[ConditionId],
        request: &AccessRequest,
        snap: &StateSnapshot,
    ) -> String {
        let ctx = Context { request, snap };
        let head = match verdict {
            Verdict::Allow => "ALLOW",
            Verdict::Deny => "DENY",
        };
        let mut out = format!("{head}: Policy {policy} \u{2014} ");
        if *policy == PolicyId::NoPolicy {
            self.render_into("no_policy", &ctx, "", &mut out);
            return out;
        }
        if verdict == Verdict::Deny && !snap.fits_action(request.action) {
            self.render_into("type_mismatch", &ctx, "", &mut out);
            return out;
        }
        let (ids, pass) = match verdict {
            Verdict::Allow => (satisfied, true),
            Verdict::Deny => (violated, false),
        };
        if ids.is_empty() {
            let open = format!("{policy}.open");
            if !self.render_into(&open, &ctx, "", &mut out) {
                self.render_into("generic.open", &ctx, "", &mut out);
            }
            return out;
        }
        for (i, id) in ids.iter().enumerate() {
            if i > 0 {
                out.push_str("; ");
            }
            self.render_condition(id, pass, &ctx, &mut out);
        }
        out
    }
}

struct Context<'a> {
    request: &'a AccessRequest,
    snap: &'a StateSnapshot,
}

const UNKNOWN: &str = "unknown";

fn or_unknown<T: ToString>(v: Option<T>) -> String {
    v.map(|x| x.to_string()).unwrap_or_else(|| UNKNOWN.to_owned())
}

fn expected_type(action: ActionKind) -> &'static str {
    match action {
        ActionKind::UploadHomework => "new homework id",
        ActionKind::ReviseReview => "review",
        ActionKind::AppendReviewToGrade => "review@grade pair",
        _ => "homework",
    }
}

impl Context<'_> {
    fn value(&self, var: Placeholder, id: &str) -> String {
        let s = self.snap;
        match var {
            Placeholder::Requester => s.requester.to_string(),
            Placeholder::Resource => s.resource_id.to_string(),
            Placeholder::Author => or_unknown(s.author.as_ref()),
            Placeholder::Creator => or_unknown(s.creator.as_ref()),
            Placeholder::ReviewCount => or_unknown(s.review_count),
            Placeholder::Homework => or_unknown(s.homework_id.as_ref()),
            Placeholder::Review => {
                if s.resource_type != ResourceKind::Review {
                    return UNKNOWN.to_owned();
                }
                let id = s.resource_id.as_str();
                split_append_target(id).map_or(id, |(r, _)| r).to_owned()
            }
            Placeholder::Grade => or_unknown(s.grade_id.as_ref()),
            Placeholder::GradeCreator => or_unknown(s.grade_creator.as_ref()),
            Placeholder::GradeHomework => or_unknown(s.grade_homework_id.as_ref()),
            Placeholder::ResourceType => s.resource_type.to_string(),
            Placeholder::ExpectedType => expected_type(self.request.action).to_owned(),
            Placeholder::Action => self.request.action.to_string(),
            Placeholder::Id => id.to_owned(),
        }
    }
}

//! Comparison engines from the classic access-control paradigms.
//!
//! Each engine is the strongest version its paradigm can express: free
//! parameters (which actions a role may perform, which actions are granted
//! publicly, what to answer when no attribute rule applies) are fitted to
//! the majority label of a training set. What each engine cannot see stays
//! out of reach by construction:
//!
//! * [`RbacConfig`] sees only the requester's roles and the action.
//! * [`AbacEngine`] sees scalar attributes of the requester and the target.
//! * [`DacAcl`] sees only ACL membership and resource ownership.

mod abac;
mod dac;
mod rbac;

pub use abac::AbacEngine;
pub use dac::{DacAcl, OWNER_GRANTS};
pub use rbac::RbacConfig;

use crate::dsl::DslError;
use crate::generator::DatasetRecord;
use crate::model::{ActionKind, ModelError};
use crate::oracle::Verdict;

#[derive(Debug, thiserror::Error)]
pub enum BaselineError {
    #[error("cannot fit on an empty training set")]
    EmptyTrainingSet,
    #[error("config line {line}: {message}")]
    Config { line: usize, message: String },
    #[error(transparent)]
    Model(#[from] ModelError),
    #[error(transparent)]
    Dsl(#[from] DslError),
}

/// Allow/deny label counts per action, in [`ActionKind::ALL`] order.
pub(crate) fn label_counts<'a>(
    records: impl IntoIterator<Item = &'a DatasetRecord>,
) -> [(usize, usize); 7] {
    let mut counts = [(0usize, 0usize); 7];
    for r in records {
        let c = &mut counts[r.action().index()];
        match r.decision {
            Verdict::Allow => c.0 += 1,
            Verdict::Deny => c.1 += 1,
        }
    }
    counts
}

/// Strict-majority verdict; ties (including no data) deny.
pub(crate) fn majority((allow, deny): (usize, usize)) -> Verdict {
    if allow > deny {
        Verdict::Allow
    } else {
        Verdict::Deny
    }
}

/// Parses a comma-separated action list.
pub(crate) fn parse_actions(list: &str, line: usize) -> Result<Vec<ActionKind>, BaselineError> {
    list.split(',')
        .map(str::trim)
        .filter(|s| !s.is_empty())
        .map(|s| {
            s.parse().map_err(|_| BaselineError::Config {
                line,
                message: format!("unknown action {s}"),
            })
        })
        .collect()
}

/// Splits config text into (line number, trimmed content) pairs, dropping
/// blanks and `#` comments.
pub(crate) fn config_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.trim()))
        .filter(|(_, l)| !l.is_empty() && !l.starts_with('#'))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn majority_ties_deny() {
        assert_eq!(majority((3, 2)), Verdict::Allow);
        assert_eq!(majority((2, 2)), Verdict::Deny);
        assert_eq!(majority((0, 0)), Verdict::Deny);
    }

    #[test]
    fn action_lists() {
        assert_eq!(
            parse_actions("upload_homework, submit_homework", 1).unwrap(),
            [ActionKind::UploadHomework, ActionKind::SubmitHomework]
        );
        assert!(parse_actions("upload_homework, fly", 4).is_err());
        assert!(parse_actions("", 1).unwrap().is_empty());
    }
}

use std::collections::BTreeMap;
use std::fmt;

use serde::Serialize;

use super::DatasetRecord;
use crate::model::ActionKind;
use crate::oracle::Oracle;

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ActionStats {
    pub action: ActionKind,
    pub count: usize,
    pub allow: usize,
    /// 0 when the action has no records.
    pub allow_rate: f64,
}

/// Summary of a dataset. Violations are recomputed with the oracle from
/// each stored snapshot, keyed by policy and then condition id.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct StatsReport {
    pub total: usize,
    pub per_action: Vec<ActionStats>,
    pub violations: BTreeMap<String, BTreeMap<String, usize>>,
}

pub fn dataset_stats(records: &[DatasetRecord]) -> StatsReport {
    let mut per_action: Vec<ActionStats> = ActionKind::ALL
        .into_iter()
        .map(|action| ActionStats {
            action,
            count: 0,
            allow: 0,
            allow_rate: 0.0,
        })
        .collect();
    let mut violations: BTreeMap<String, BTreeMap<String, usize>> = BTreeMap::new();
    let oracle = Oracle::builtin();
    for r in records {
        let s = &mut per_action[r.action().index()];
        s.count += 1;
        s.allow += usize::from(r.decision.is_allow());
        let d = oracle.decide_snapshot(&r.state, &r.access_request());
        for c in &d.violated {
            *violations
                .entry(d.policy.to_string())
                .or_default()
                .entry(c.to_string())
                .or_default() += 1;
        }
    }
    for s in &mut per_action {
        if s.count > 0 {
            s.allow_rate = s.allow as f64 / s.count as f64;
        }
    }
    StatsReport {
        total: records.len(),
        per_action,
        violations,
    }
}

impl fmt::Display for StatsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "records: {}", self.total)?;
        writeln!(f, "{:<24} {:>7} {:>7} {:>10}", "action", "count", "allow", "allow_rate")?;
        for s in &self.per_action {
            writeln!(f, "{:<24} {:>7} {:>7} {:>10.3}", s.action.as_str(), s.count, s.allow, s.allow_rate)?;
        }
        writeln!(f, "violated conditions:")?;
        for (policy, conds) in &self.violations {
            for (c, n) in conds {
                writeln!(f, "  {policy:<4} {c:<28} {n:>7}")?;
            }
        }
        Ok(())
    }
}

use super::{label_counts, majority, BaselineError};
use crate::dsl::{self, CompiledPolicySet, Dialect};
use crate::generator::DatasetRecord;
use crate::model::{snapshot_for_request, AccessRequest, ActionKind, StateSnapshot, WorldState};
use crate::oracle::{ConditionId, Decision, PolicyId, Verdict};

const FITTED_DEFAULT: ConditionId = ConditionId::from_static("abac.fitted_default");

/// Attribute rules in the restricted policy dialect, plus a constant
/// verdict for actions the rules do not cover.
#[derive(Clone, Debug)]
pub struct AbacEngine {
    rules: CompiledPolicySet,
    fallback: [Option<Verdict>; 7],
}

impl AbacEngine {
    /// Loads rules written in the ABAC dialect; history builtins and the
    /// `grade` binding are rejected.
    pub fn from_source(source: &str) -> Result<Self, BaselineError> {
        Ok(AbacEngine {
            rules: dsl::compile_source(source, Dialect::Abac)?,
            fallback: [None; 7],
        })
    }

    /// The shipped rule file, without fitted fallbacks.
    pub fn reference() -> Self {
        Self::from_source(dsl::ABAC_BASELINE_POLICY).expect("shipped ABAC rules are valid")
    }

    pub fn rules(&self) -> &CompiledPolicySet {
        &self.rules
    }

    pub fn covers(&self, action: ActionKind) -> bool {
        self.rules.policy_for(action).is_some()
    }

    pub fn fallback(&self, action: ActionKind) -> Option<Verdict> {
        self.fallback[action.index()]
    }

    pub fn set_fallback(&mut self, action: ActionKind, verdict: Verdict) {
        self.fallback[action.index()] = Some(verdict);
    }

    /// Sets the fallback of every uncovered action to its majority training
    /// label (ties deny).
    pub fn fit(mut self, train: &[DatasetRecord]) -> Result<Self, BaselineError> {
        if train.is_empty() {
            return Err(BaselineError::EmptyTrainingSet);
        }
        let counts = label_counts(train);
        for action in ActionKind::ALL {
            if !self.covers(action) {
                self.fallback[action.index()] = Some(majority(counts[action.index()]));
            }
        }
        Ok(self)
    }

    pub fn decide(&self, world: &WorldState, request: &AccessRequest) -> Result<Decision, BaselineError> {
        let snap = snapshot_for_request(world, request)?;
        Ok(self.decide_snapshot(&snap, request))
    }

    pub fn decide_snapshot(&self, snap: &StateSnapshot, request: &AccessRequest) -> Decision {
        if self.covers(request.action) {
            return self.rules.evaluate_snapshot(snap, request);
        }
        let Some(verdict) = self.fallback(request.action) else {
            return self.rules.evaluate_snapshot(snap, request);
        };
        let (satisfied, violated) = match verdict {
            Verdict::Allow => (vec![FITTED_DEFAULT], vec![]),
            Verdict::Deny => (vec![], vec![FITTED_DEFAULT]),
        };
        let head = if verdict.is_allow() { "ALLOW" } else { "DENY" };
        Decision {
            verdict,
            policy: PolicyId::Abac,
            satisfied,
            violated,
            explanation: format!(
                "{head}: Policy abac \u{2014} no attribute rule covers {}; fitted default is {verdict}",
                request.action
            ),
        }
    }
}

use std::sync::Arc;

use crate::baselines::{AbacEngine, BaselineError, DacAcl, RbacConfig};
use crate::dsl::CompiledPolicySet;
use crate::model::{AccessRequest, StateSnapshot};
use crate::oracle::{ConditionId, Decision, Oracle, PolicyId, Verdict};

/// Why a decider produced no decision. Evaluation scores such records as
/// incorrect and counts them separately.
#[derive(Debug, thiserror::Error)]
pub enum DecideError {
    #[error(transparent)]
    Baseline(#[from] BaselineError),
    #[error("remote decider failed: {0}")]
    Remote(String),
}

/// Something that answers access requests from a state snapshot.
pub trait Decider: Send + Sync {
    fn name(&self) -> &str;
    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError>;
}

impl Decider for Oracle {
    fn name(&self) -> &str {
        "oracle"
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        Ok(self.decide_snapshot(state, request))
    }
}

impl Decider for CompiledPolicySet {
    fn name(&self) -> &str {
        "dsl"
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        Ok(self.evaluate_snapshot(state, request))
    }
}

impl Decider for RbacConfig {
    fn name(&self) -> &str {
        "rbac"
    }

    fn decide(&self, _state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        Ok(RbacConfig::decide(self, request)?)
    }
}

impl Decider for AbacEngine {
    fn name(&self) -> &str {
        "abac"
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        Ok(self.decide_snapshot(state, request))
    }
}

impl Decider for DacAcl {
    fn name(&self) -> &str {
        "dac"
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        Ok(self.decide_snapshot(state, request)?)
    }
}

impl<D: Decider + ?Sized> Decider for &D {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        (**self).decide(state, request)
    }
}

impl<D: Decider + ?Sized> Decider for Arc<D> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        (**self).decide(state, request)
    }
}

impl<D: Decider + ?Sized> Decider for Box<D> {
    fn name(&self) -> &str {
        (**self).name()
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        (**self).decide(state, request)
    }
}

/// Always answers the same verdict. Useful as a floor in reports.
#[derive(Clone, Debug)]
pub struct ConstantDecider {
    verdict: Verdict,
    name: String,
}

impl ConstantDecider {
    pub fn new(verdict: Verdict) -> Self {
        ConstantDecider {
            verdict,
            name: format!("always-{verdict}"),
        }
    }
}

impl Decider for ConstantDecider {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, _state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        let id = ConditionId::from_static("constant");
        let (satisfied, violated) = if self.verdict.is_allow() { (vec![id], vec![]) } else { (vec![], vec![id]) };
        Ok(Decision {
            verdict: self.verdict,
            policy: PolicyId::Named(self.name.clone()),
            satisfied,
            violated,
            explanation: format!(
                "{}: Policy {} \u{2014} constant answer for {}",
                self.verdict.as_str().to_uppercase(),
                self.name,
                request.action
            ),
        })
    }
}

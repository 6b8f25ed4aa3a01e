use serde::{Deserialize, Serialize};

use super::GeneratorError;

/// Knobs for dataset generation. All fields have defaults, so a config
/// file (or CLI) only needs to name what it changes.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GeneratorConfig {
    pub seed: u64,
    pub num_records: usize,
    pub num_users: usize,
    /// Fixed by the review policy; kept as a field so datasets record it.
    pub max_reviews_per_homework: u32,
    /// Probability that a step samples a request violating exactly one
    /// condition instead of a legitimate one.
    pub invalid_request_rate: f64,
    /// Lower bound on each action's share of the records.
    pub per_action_min_share: f64,
    /// Probability that an allowed request is applied to the state.
    pub execute_probability: f64,
}

impl Default for GeneratorConfig {
    fn default() -> Self {
        GeneratorConfig {
            seed: 0,
            num_records: 10_000,
            num_users: 30,
            max_reviews_per_homework: 3,
            invalid_request_rate: 0.5,
            per_action_min_share: 0.10,
            execute_probability: 0.9,
        }
    }
}

/// Fewest users for which every sampling menu is always non-empty: a
/// homework excludes at most its author and three reviewers from reviewing.
pub const MIN_USERS: usize = 5;

impl GeneratorConfig {
    pub fn with_seed(seed: u64) -> Self {
        GeneratorConfig {
            seed,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<(), GeneratorError> {
        let bad = |m: String| Err(GeneratorError::InvalidConfig(m));
        for (name, v) in [
            ("invalid_request_rate", self.invalid_request_rate),
            ("per_action_min_share", self.per_action_min_share),
            ("execute_probability", self.execute_probability),
        ] {
            if !(0.0..=1.0).contains(&v) {
                return bad(format!("{name} must be within [0, 1], got {v}"));
            }
        }
        if 7.0 * self.per_action_min_share > 1.0 + 1e-12 {
            return bad(format!(
                "per_action_min_share {} is infeasible: seven actions cannot each take that share",
                self.per_action_min_share
            ));
        }
        if self.num_users < MIN_USERS {
            return bad(format!("num_users must be at least {MIN_USERS}, got {}", self.num_users));
        }
        if self.max_reviews_per_homework != 3 {
            return bad(format!(
                "max_reviews_per_homework is fixed at 3 by the review policy, got {}",
                self.max_reviews_per_homework
            ));
        }
        Ok(())
    }

    /// Records each action needs to reach its minimum share.
    pub fn min_per_action(&self) -> usize {
        (self.per_action_min_share * self.num_records as f64 - 1e-9).ceil().max(0.0) as usize
    }
}

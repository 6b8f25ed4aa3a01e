use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{DecideError, Decider, EvalError};
use crate::model::{AccessRequest, StateSnapshot};
use crate::oracle::{ConditionId, Decision, Verdict};

/// Violation recorded on an allow that noise turned into a deny.
pub const NOISE_CONDITION: ConditionId = ConditionId::from_static("noise.flipped");

/// Flips the inner decider's verdict with probability `epsilon`.
///
/// Whether a request flips depends only on the seed and the request id, so
/// repeated evaluations agree and records can be shuffled freely.
#[derive(Clone, Debug)]
pub struct Noisy<D> {
    inner: D,
    epsilon: f64,
    seed: u64,
    name: String,
}

impl<D: Decider> Noisy<D> {
    pub fn new(inner: D, epsilon: f64, seed: u64) -> Result<Self, EvalError> {
        if !(0.0..=1.0).contains(&epsilon) {
            return Err(EvalError::InvalidEpsilon(epsilon));
        }
        let name = format!("noisy({},{epsilon})", inner.name());
        Ok(Noisy {
            inner,
            epsilon,
            seed,
            name,
        })
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    /// Whether the request with this id is flipped.
    pub fn flips(&self, request_id: &str) -> bool {
        let digest = Sha256::new()
            .chain_update(self.seed.to_le_bytes())
            .chain_update(request_id.as_bytes())
            .finalize();
        let seed: [u8; 32] = digest.into();
        ChaCha8Rng::from_seed(seed).random::<f64>() < self.epsilon
    }
}

impl<D: Decider> Decider for Noisy<D> {
    fn name(&self) -> &str {
        &self.name
    }

    fn decide(&self, state: &StateSnapshot, request: &AccessRequest) -> Result<Decision, DecideError> {
        let mut d = self.inner.decide(state, request)?;
        if !self.flips(&request.request_id) {
            return Ok(d);
        }
        match d.verdict {
            Verdict::Deny => {
                let violated = std::mem::take(&mut d.violated);
                d.satisfied.extend(violated);
            }
            Verdict::Allow => d.violated = vec![NOISE_CONDITION],
        }
        d.verdict = d.verdict.flipped();
        let rest = d.explanation.split_once(": ").map_or(d.explanation.as_str(), |(_, r)| r);
        d.explanation = format!("{}: {rest} (noise-flipped)", d.verdict.as_str().to_uppercase());
        Ok(d)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::evaluate;
    use crate::generator::{generate, GeneratorConfig};
    use crate::oracle::Oracle;

    fn data() -> Vec<crate::generator::DatasetRecord> {
        generate(&GeneratorConfig {
            seed: 23,
            num_records: 2000,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn zero_noise_is_identity_and_full_noise_complements() {
        let recs = data();
        let clean = Noisy::new(Oracle::builtin(), 0.0, 1).unwrap();
        let inverse = Noisy::new(Oracle::builtin(), 1.0, 1).unwrap();
        for r in recs.iter().take(300) {
            let req = r.access_request();
            let truth = Oracle::builtin().decide_snapshot(&r.state, &req);
            assert_eq!(clean.decide(&r.state, &req).unwrap(), truth);
            let flipped = inverse.decide(&r.state, &req).unwrap();
            assert_eq!(flipped.verdict, truth.verdict.flipped());
            assert!(flipped.explanation.ends_with("(noise-flipped)"));
            assert_eq!(flipped.is_allow(), flipped.violated.is_empty());
        }
        assert_eq!(evaluate(&inverse, &recs).unwrap().accuracy, 0.0);
    }

    #[test]
    fn flips_are_keyed_by_seed_and_id() {
        let a = Noisy::new(Oracle::builtin(), 0.5, 7).unwrap();
        let b = Noisy::new(Oracle::builtin(), 0.5, 8).unwrap();
        let ids: Vec<String> = (0..200).map(|i| format!("r{i:05}")).collect();
        let fa: Vec<bool> = ids.iter().map(|i| a.flips(i)).collect();
        assert_eq!(fa, ids.iter().map(|i| a.flips(i)).collect::<Vec<_>>());
        assert_ne!(fa, ids.iter().map(|i| b.flips(i)).collect::<Vec<_>>());
    }

    #[test]
    fn epsilon_range_checked() {
        assert!(Noisy::new(Oracle::builtin(), 1.01, 0).is_err());
        assert!(Noisy::new(Oracle::builtin(), -0.5, 0).is_err());
    }
}

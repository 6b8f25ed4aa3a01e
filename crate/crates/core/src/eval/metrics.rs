use std::collections::BTreeMap;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use super::{Decider, EvalError};
use crate::generator::DatasetRecord;
use crate::model::ActionKind;
use crate::oracle::Verdict;

/// Confusion counts with allow as the positive class.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Confusion {
    pub tp: u64,
    pub fp: u64,
    pub tn: u64,
    #[serde(rename = "fn")]
    pub fn_: u64,
}

impl Confusion {
    pub fn n(&self) -> u64 {
        self.tp + self.fp + self.tn + self.fn_
    }

    /// Records one scored prediction.
    pub fn add(&mut self, label: Verdict, predicted: Verdict) {
        match (label, predicted) {
            (Verdict::Allow, Verdict::Allow) => self.tp += 1,
            (Verdict::Deny, Verdict::Allow) => self.fp += 1,
            (Verdict::Deny, Verdict::Deny) => self.tn += 1,
            (Verdict::Allow, Verdict::Deny) => self.fn_ += 1,
        }
    }

    /// Derived rates. A ratio with a zero denominator is 1.0: a decider
    /// that never predicts allow has made no false allow.
    pub fn rates(&self) -> Rates {
        let ratio = |num: u64, den: u64| if den == 0 { 1.0 } else { num as f64 / den as f64 };
        let f1 = |p: f64, r: f64| if p + r == 0.0 { 0.0 } else { 2.0 * p * r / (p + r) };
        let precision_allow = ratio(self.tp, self.tp + self.fp);
        let recall_allow = ratio(self.tp, self.tp + self.fn_);
        let precision_deny = ratio(self.tn, self.tn + self.fn_);
        let recall_deny = ratio(self.tn, self.tn + self.fp);
        let f1_allow = f1(precision_allow, recall_allow);
        let f1_deny = f1(precision_deny, recall_deny);
        Rates {
            accuracy: if self.n() == 0 { 0.0 } else { (self.tp + self.tn) as f64 / self.n() as f64 },
            precision_allow,
            recall_allow,
            f1_allow,
            f1_deny,
            macro_f1: (f1_allow + f1_deny) / 2.0,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Rates {
    pub accuracy: f64,
    pub precision_allow: f64,
    pub recall_allow: f64,
    pub f1_allow: f64,
    pub f1_deny: f64,
    pub macro_f1: f64,
}

/// Per-call latency in milliseconds.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct Latency {
    pub mean: f64,
    pub p50: f64,
    pub p95: f64,
}

impl Latency {
    /// Nearest-rank percentiles over the samples (milliseconds).
    pub fn from_samples(samples: &mut [f64]) -> Self {
        if samples.is_empty() {
            return Latency::default();
        }
        samples.sort_by(f64::total_cmp);
        let rank = |p: f64| samples[((p * samples.len() as f64).ceil() as usize).clamp(1, samples.len()) - 1];
        Latency {
            mean: samples.iter().sum::<f64>() / samples.len() as f64,
            p50: rank(0.50),
            p95: rank(0.95),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ActionAccuracy {
    pub n: u64,
    pub correct: u64,
    /// `None` when the dataset has no record of this action.
    pub accuracy: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub decider: String,
    pub n: u64,
    pub accuracy: f64,
    pub precision_allow: f64,
    pub recall_allow: f64,
    pub f1_allow: f64,
    pub f1_deny: f64,
    pub macro_f1: f64,
    pub per_action_accuracy: BTreeMap<ActionKind, ActionAccuracy>,
    pub confusion: Confusion,
    pub latency_ms: Latency,
    pub throughput_rps: f64,
    pub error_count: u64,
}

impl MetricsReport {
    pub fn action_accuracy(&self, action: ActionKind) -> Option<f64> {
        self.per_action_accuracy.get(&action).and_then(|a| a.accuracy)
    }
}

/// Runs `decider` over every record, one timed call at a time.
///
/// A decider error counts as a wrong answer: the record lands in `fn` if
/// its label is allow and in `fp` otherwise, and `error_count` goes up.
pub fn evaluate<D: Decider + ?Sized>(decider: &D, records: &[DatasetRecord]) -> Result<MetricsReport, EvalError> {
    if records.is_empty() {
        return Err(EvalError::EmptyDataset);
    }
    let mut confusion = Confusion::default();
    let mut per_action = [(0u64, 0u64); 7];
    let mut samples = Vec::with_capacity(records.len());
    let mut errors = 0;
    for r in records {
        let request = r.access_request();
        let started = Instant::now();
        let outcome = decider.decide(&r.state, &request);
        samples.push(started.elapsed().as_secs_f64() * 1e3);
        let predicted = match outcome {
            Ok(d) => d.verdict,
            Err(_) => {
                errors += 1;
                r.decision.flipped()
            }
        };
        confusion.add(r.decision, predicted);
        let slot = &mut per_action[r.action().index()];
        slot.0 += 1;
        slot.1 += u64::from(predicted == r.decision);
    }
    let total_secs = samples.iter().sum::<f64>() / 1e3;
    let rates = confusion.rates();
    let per_action_accuracy = ActionKind::ALL
        .into_iter()
        .map(|a| {
            let (n, correct) = per_action[a.index()];
            let accuracy = (n > 0).then(|| correct as f64 / n as f64);
            (a, ActionAccuracy { n, correct, accuracy })
        })
        .collect();
    Ok(MetricsReport {
        decider: decider.name().to_owned(),
        n: records.len() as u64,
        accuracy: rates.accuracy,
        precision_allow: rates.precision_allow,
        recall_allow: rates.recall_allow,
        f1_allow: rates.f1_allow,
        f1_deny: rates.f1_deny,
        macro_f1: rates.macro_f1,
        per_action_accuracy,
        confusion,
        latency_ms: Latency::from_samples(&mut samples),
        throughput_rps: records.len() as f64 / total_secs.max(1e-9),
        error_count: errors,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::eval::{ConstantDecider, DecideError};
    use crate::generator::{generate, GeneratorConfig};
    use crate::model::{AccessRequest, StateSnapshot};
    use crate::oracle::{Decision, Oracle};

    fn data() -> Vec<DatasetRecord> {
        generate(&GeneratorConfig {
            seed: 17,
            num_records: 700,
            ..GeneratorConfig::default()
        })
        .unwrap()
    }

    #[test]
    fn oracle_is_perfect() {
        let m = evaluate(Oracle::builtin(), &data()).unwrap();
        assert_eq!((m.accuracy, m.macro_f1, m.error_count), (1.0, 1.0, 0));
        assert!(ActionKind::ALL.iter().all(|a| m.action_accuracy(*a) == Some(1.0)));
        assert_eq!(m.decider, "oracle");
    }

    #[test]
    fn always_deny_scores_the_deny_share() {
        let recs = data();
        let allow = recs.iter().filter(|r| r.decision.is_allow()).count() as f64;
        let m = evaluate(&ConstantDecider::new(Verdict::Deny), &recs).unwrap();
        assert!((m.accuracy - (1.0 - allow / recs.len() as f64)).abs() < 1e-12);
        assert_eq!(m.precision_allow, 1.0);
        assert_eq!(m.recall_allow, 0.0);
        assert_eq!(m.action_accuracy(ActionKind::UploadHomework), Some(0.0));
    }

    struct Broken;
    impl Decider for Broken {
        fn name(&self) -> &str {
            "broken"
        }
        fn decide(&self, _: &StateSnapshot, _: &AccessRequest) -> Result<Decision, DecideError> {
            Err(DecideError::Remote("down".into()))
        }
    }

    #[test]
    fn errors_are_wrong_and_counted() {
        let recs = data();
        let m = evaluate(&Broken, &recs).unwrap();
        assert_eq!(m.error_count, recs.len() as u64);
        assert_eq!(m.accuracy, 0.0);
        assert_eq!(m.confusion.tp + m.confusion.tn, 0);
    }

    #[test]
    fn empty_dataset_is_rejected() {
        assert_eq!(evaluate(Oracle::builtin(), &[]).unwrap_err(), EvalError::EmptyDataset);
    }

    #[test]
    fn percentiles_use_nearest_rank() {
        let mut s: Vec<f64> = (1..=20).map(f64::from).collect();
        let l = Latency::from_samples(&mut s);
        assert_eq!((l.p50, l.p95, l.mean), (10.0, 19.0, 10.5));
    }

    #[test]
    fn report_json_round_trips() {
        let m = evaluate(Oracle::builtin(), &data()).unwrap();
        let back: MetricsReport = serde_json::from_str(&serde_json::to_string(&m).unwrap()).unwrap();
        assert_eq!(back, m);
    }
}

//! Acceptance suite. Prints one PASS/FAIL line per criterion and exits
//! non-zero if any criterion fails.
//!
//! Pinned tolerances:
//! * exhaustive oracle and DSL checks: exact agreement, >= 100_000 cases, < 60 s
//! * baseline pattern: exact 1.0 for upload and oracle rows, ordinal elsewhere
//! * noisy oracle: |accuracy - (1 - eps)| <= 3 binomial standard deviations;
//!   metric identities to 1e-12
//! * generator: byte-identical reruns, exact relabeling, shares >= 0.10,
//!   >= 50 violations per condition, < 30 s for 10_000 records
//! * parser: 1_000 round trips, positioned errors, 1_000_000 fuzz inputs
//! * service: byte-exact decide bodies, unchanged state after denials,
//!   100% fail-closed on malformed replies, server-side p95 < 5 ms at 64
//!   concurrent inline-state requests

mod common;

use std::collections::{BTreeMap, BTreeSet};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use common::{brute_force, conditions_of_policy, dsl_gen, for_each_world, requests_for};
use provac::baselines::{AbacEngine, DacAcl, RbacConfig};
use provac::dsl::{self, Dialect};
use provac::eval::{evaluate, Decider, MetricsReport, Noisy};
use provac::generator::{generate, split, to_jsonl_string, DatasetRecord, GeneratorConfig};
use provac::model::{AccessRequest, ActionKind, WorldState};
use provac::oracle::{Oracle, Verdict};
use provac::service::mock::{Fault, MockLlm, MockMode};
use provac::service::{
    AppState, DecideHttpRequest, DecideHttpResponse, Engine, RemoteDecider, RemoteDeciderConfig, RunningService,
};

type Outcome = Result<String, String>;

fn main() {
    let criteria: [(&str, fn() -> Outcome); 7] = [
        ("oracle exhaustive equivalence", oracle_exhaustive),
        ("DSL equivalence", dsl_exhaustive),
        ("baseline pattern on default dataset", baseline_pattern),
        ("metric code validation", metric_validation),
        ("generator determinism and soundness", generator_soundness),
        ("parser suite", parser_suite),
        ("service contract", service_contract),
    ];
    let mut failed = 0;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let outcome = catch_unwind(run).unwrap_or_else(|p| {
            let msg = p
                .downcast_ref::<String>()
                .cloned()
                .or_else(|| p.downcast_ref::<&str>().map(|s| s.to_string()))
                .unwrap_or_default();
            Err(format!("panicked: {msg}"))
        });
        match outcome {
            Ok(detail) => println!("PASS {} {name}: {detail}", i + 1),
            Err(detail) => {
                failed += 1;
                println!("FAIL {} {name}: {detail}", i + 1);
            }
        }
    }
    println!("acceptance: {} passed, {failed} failed", criteria.len() - failed);
    if failed > 0 {
        std::process::exit(1);
    }
}

fn ensure(ok: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if ok {
        Ok(())
    } else {
        Err(msg())
    }
}

// ---------------------------------------------------------------- 1 and 2

fn oracle_exhaustive() -> Outcome {
    let started = Instant::now();
    let oracle = Oracle::builtin();
    let (mut cases, mut worlds) = (0usize, 0usize);
    let mut mismatches = Vec::new();
    for_each_world(|w| {
        worlds += 1;
        for req in requests_for(w) {
            cases += 1;
            let got = oracle.decide(w, &req).ok().map(|d| {
                let violated: BTreeSet<String> = d.violated_ids().into_iter().map(str::to_owned).collect();
                (d.verdict, d.policy.as_str().to_owned(), violated)
            });
            let want = brute_force(w, &req).map(|e| {
                let violated: BTreeSet<String> = e.violated.iter().map(|s| s.to_string()).collect();
                (e.verdict, e.policy.to_owned(), violated)
            });
            if got != want && mismatches.len() < 5 {
                mismatches.push(format!("{req:?}: oracle {got:?} vs brute force {want:?}"));
            }
        }
    });
    let elapsed = started.elapsed();
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    ensure(cases >= 100_000, || format!("only {cases} cases"))?;
    ensure(elapsed < Duration::from_secs(60), || format!("took {elapsed:?}"))?;
    Ok(format!("{cases} cases over {worlds} worlds agree, {:.1} s", elapsed.as_secs_f64()))
}

fn dsl_exhaustive() -> Outcome {
    let started = Instant::now();
    let oracle = Oracle::builtin();
    let compiled = dsl::classroom();
    let mut cases = 0usize;
    let mut mismatches = Vec::new();
    for_each_world(|w| {
        for req in requests_for(w) {
            cases += 1;
            let key = |d: provac::oracle::Decision| {
                let violated: BTreeSet<String> = d.violated_ids().into_iter().map(str::to_owned).collect();
                (d.verdict, violated)
            };
            let a = oracle.decide(w, &req).ok().map(key);
            let b = compiled.evaluate(w, &req).ok().map(key);
            if a != b && mismatches.len() < 5 {
                mismatches.push(format!("{req:?}: oracle {a:?} vs dsl {b:?}"));
            }
        }
    });
    ensure(mismatches.is_empty(), || mismatches.join("; "))?;
    Ok(format!(
        "verdict and violated set match on {cases} cases, {:.1} s",
        started.elapsed().as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 3

fn default_dataset() -> Vec<DatasetRecord> {
    generate(&GeneratorConfig::default()).expect("default dataset")
}

fn baseline_pattern() -> Outcome {
    let records = default_dataset();
    let parts = split(&records, 0.1, 0.0, 0.9, 0).map_err(|e| e.to_string())?;
    let (train, test) = (&parts.train, &parts.test);
    let rbac = RbacConfig::fit_majority(train).map_err(|e| e.to_string())?;
    let abac = AbacEngine::reference().fit(train).map_err(|e| e.to_string())?;
    let dac = DacAcl::fit_majority(train).map_err(|e| e.to_string())?;
    let oracle = Oracle::builtin();

    let baselines: [&dyn Decider; 3] = [&rbac, &abac, &dac];
    let mut reports: BTreeMap<String, MetricsReport> = BTreeMap::new();
    for d in baselines.iter().copied().chain([oracle as &dyn Decider]) {
        reports.insert(d.name().to_owned(), evaluate(d, test).map_err(|e| e.to_string())?);
    }
    let acc = |who: &str, a: ActionKind| reports[who].action_accuracy(a).unwrap_or(f64::NAN);

    for who in ["oracle", "rbac", "abac", "dac"] {
        let a = acc(who, ActionKind::UploadHomework);
        ensure(a == 1.0, || format!("(a) {who} upload accuracy {a}"))?;
    }
    for action in ActionKind::ALL {
        let a = acc("oracle", action);
        ensure(a == 1.0, || format!("(b) oracle {action} accuracy {a}"))?;
    }

    let mut ceilings = Vec::new();
    for action in [ActionKind::GradeHomework, ActionKind::AppendReviewToGrade] {
        let rows: Vec<&DatasetRecord> = test.iter().filter(|r| r.action() == action).collect();
        let allow = rows.iter().filter(|r| r.decision == Verdict::Allow).count();
        let ceiling = allow.max(rows.len() - allow) as f64 / rows.len() as f64;
        for d in baselines {
            let mut emitted: Vec<Verdict> = rows
                .iter()
                .map(|r| d.decide(&r.state, &r.access_request()).map(|x| x.verdict).unwrap_or(Verdict::Deny))
                .collect();
            emitted.dedup();
            ensure(emitted.len() == 1, || format!("(c) {} is not constant on {action}", d.name()))?;
            let v = emitted[0];
            let share = rows.iter().filter(|r| r.decision == v).count() as f64 / rows.len() as f64;
            let a = acc(d.name(), action);
            ensure(a == share && a == ceiling && a < acc("oracle", action), || {
                format!("(c) {} on {action}: accuracy {a}, constant {v} share {share}, ceiling {ceiling}", d.name())
            })?;
        }
        ceilings.push(format!("{action} {ceiling:.3}"));
    }

    for action in [ActionKind::SubmitHomework, ActionKind::ReviewHomework] {
        let (a, r, d) = (acc("abac", action), acc("rbac", action), acc("dac", action));
        ensure(a >= r && a >= d, || format!("(d) {action}: abac {a:.3}, rbac {r:.3}, dac {d:.3}"))?;
    }
    Ok(format!(
        "upload 1.000 for all, oracle 1.000 everywhere, baselines at constant ceiling ({}), abac leads on submit ({:.3}/{:.3}/{:.3}) and review ({:.3}/{:.3}/{:.3})",
        ceilings.join(", "),
        acc("abac", ActionKind::SubmitHomework),
        acc("rbac", ActionKind::SubmitHomework),
        acc("dac", ActionKind::SubmitHomework),
        acc("abac", ActionKind::ReviewHomework),
        acc("rbac", ActionKind::ReviewHomework),
        acc("dac", ActionKind::ReviewHomework),
    ))
}

// ---------------------------------------------------------------- 4

/// Metrics recomputed from raw predictions with different formulas.
fn independent_metrics(pairs: &[(Verdict, Verdict)]) -> [f64; 6] {
    let count = |l: Verdict, p: Verdict| pairs.iter().filter(|(a, b)| *a == l && *b == p).count() as f64;
    let tp = count(Verdict::Allow, Verdict::Allow);
    let tn = count(Verdict::Deny, Verdict::Deny);
    let fp = count(Verdict::Deny, Verdict::Allow);
    let fn_ = count(Verdict::Allow, Verdict::Deny);
    let f1 = |t: f64, other: f64| if t + other == 0.0 { 1.0 } else { 2.0 * t / (2.0 * t + other) };
    let f1_allow = f1(tp, fp + fn_);
    let f1_deny = f1(tn, fp + fn_);
    let ratio = |a: f64, b: f64| if b == 0.0 { 1.0 } else { a / b };
    [
        (tp + tn) / pairs.len() as f64,
        ratio(tp, tp + fp),
        ratio(tp, tp + fn_),
        f1_allow,
        f1_deny,
        0.5 * (f1_allow + f1_deny),
    ]
}

fn metric_validation() -> Outcome {
    let records = default_dataset();
    let n = records.len() as f64;
    let mut lines = Vec::new();
    for eps in [0.05, 0.25, 0.5] {
        let noisy = Noisy::new(Oracle::builtin(), eps, 7).map_err(|e| e.to_string())?;
        let report = evaluate(&noisy, &records).map_err(|e| e.to_string())?;
        let sd = (eps * (1.0 - eps) / n).sqrt();
        let dev = (report.accuracy - (1.0 - eps)).abs();
        ensure(dev <= 3.0 * sd, || format!("eps {eps}: accuracy {} is {:.1} sd off", report.accuracy, dev / sd))?;

        let pairs: Vec<(Verdict, Verdict)> = records
            .iter()
            .map(|r| (r.decision, noisy.decide(&r.state, &r.access_request()).unwrap().verdict))
            .collect();
        let want = independent_metrics(&pairs);
        let got = [
            report.accuracy,
            report.precision_allow,
            report.recall_allow,
            report.f1_allow,
            report.f1_deny,
            report.macro_f1,
        ];
        for (i, (g, w)) in got.iter().zip(want).enumerate() {
            ensure((g - w).abs() <= 1e-12, || format!("eps {eps}: metric #{i} is {g}, independent {w}"))?;
        }
        lines.push(format!("eps {eps}: acc {:.4} ({:+.2} sd)", report.accuracy, (report.accuracy - (1.0 - eps)) / sd));
    }
    Ok(format!("{}; metric identities hold to 1e-12", lines.join(", ")))
}

// ---------------------------------------------------------------- 5

fn generator_soundness() -> Outcome {
    let config = GeneratorConfig::default();
    let started = Instant::now();
    let first = generate(&config).map_err(|e| e.to_string())?;
    let elapsed = started.elapsed();
    let second = generate(&config).map_err(|e| e.to_string())?;
    ensure(to_jsonl_string(&first) == to_jsonl_string(&second), || "reruns differ".into())?;
    ensure(elapsed < Duration::from_secs(30), || format!("took {elapsed:?}"))?;

    let oracle = Oracle::builtin();
    let mut violations: BTreeMap<String, usize> = BTreeMap::new();
    let mut per_action = [0usize; 7];
    for r in &first {
        let d = oracle.decide_snapshot(&r.state, &r.access_request());
        ensure(d.verdict == r.decision && d.policy == r.policy_id && d.explanation == r.explanation, || {
            format!("record {} relabels differently", r.id)
        })?;
        for c in d.violated_ids() {
            *violations.entry(c.to_owned()).or_default() += 1;
        }
        per_action[r.action().index()] += 1;
    }
    for action in ActionKind::ALL {
        let share = per_action[action.index()] as f64 / first.len() as f64;
        ensure(share >= 0.10, || format!("{action} share {share}"))?;
    }
    let mut min = usize::MAX;
    for policy in ["P2", "P3", "P4", "P5", "P6", "P7"] {
        for c in conditions_of_policy(policy) {
            let k = violations.get(*c).copied().unwrap_or(0);
            ensure(k >= 50, || format!("{c} violated only {k} times"))?;
            min = min.min(k);
        }
    }
    let min_share = per_action.iter().min().copied().unwrap_or(0) as f64 / first.len() as f64;
    Ok(format!(
        "{} records in {:.2} s, identical reruns, exact relabeling, min action share {min_share:.3}, min violations per condition {min}",
        first.len(),
        elapsed.as_secs_f64()
    ))
}

// ---------------------------------------------------------------- 6

/// Documented error cases: source, dialect, expected position (column
/// `None` when only the line is pinned) and message fragment.
const ERROR_CASES: &[(&str, Dialect, (usize, Option<usize>), &str)] = &[
    ("", Dialect::Full, (1, Some(1)), "at least one policy"),
    ("policy P1 on upload_homework {\n  require x @ y;\n}", Dialect::Full, (2, Some(13)), "illegal character"),
    ("policy P1 on a { require 1abc; }", Dialect::Full, (1, Some(26)), "must not start with a digit"),
    ("policy P1 on a { require x ! y; }", Dialect::Full, (1, Some(28)), "'!' must be followed by '='"),
    ("/* open", Dialect::Full, (1, Some(1)), "unterminated block comment"),
    ("policy P1 on a { require x = 99999999999999999999; }", Dialect::Full, (1, Some(30)), "out of range"),
    ("policy P1 on a { require x < ; }", Dialect::Full, (1, Some(30)), "expected integer or attribute path"),
    ("policy P1 on a { require a < b < c; }", Dialect::Full, (1, Some(32)), "do not chain"),
    ("policy P1 on a { require x }", Dialect::Full, (1, Some(28)), "expected ';'"),
    ("policy P1 a { }", Dialect::Full, (1, Some(11)), "expected 'on'"),
    ("policy P1 on a { }\npolicy P2 on a { }", Dialect::Full, (2, Some(1)), "duplicate policy for action"),
    ("policy P1 on upload_homework { require resource.author = requester; }", Dialect::Full, (1, Some(40)), "has no resource attributes"),
    ("policy P1 on fly { }", Dialect::Full, (1, Some(14)), "unknown action fly"),
    ("policy P2 on replace_homework { require foo; }", Dialect::Full, (1, Some(41)), "unknown name foo"),
    ("policy P2 on replace_homework { require frob(resource); }", Dialect::Full, (1, Some(41)), "unknown function frob"),
    ("policy P4 on review_homework { require review_count() < 3; }", Dialect::Full, (1, Some(40)), "expects 1 argument"),
    ("policy P2 on replace_homework { require resource.author < 3; }", Dialect::Full, (1, Some(57)), "needs integers"),
    ("policy P2 on replace_homework { require 3; }", Dialect::Full, (1, Some(41)), "must be boolean"),
    ("policy P2 on replace_homework { require grade.creator = requester; }", Dialect::Full, (1, Some(41)), "grade is only bound"),
    ("policy P4 on review_homework { require review_count(resource) < 3; }", Dialect::Abac, (1, Some(40)), "not available in the ABAC dialect"),
    ("policy P1 on upload_homework { }\npolicy P1 on submit_homework { }", Dialect::Full, (2, Some(1)), "duplicate policy id"),
    ("policy P2 on replace_homework { require a: true; require a: true; }", Dialect::Full, (1, Some(50)), "duplicate condition id"),
];

fn parser_suite() -> Outcome {
    for seed in 0..1_000u64 {
        let doc = dsl_gen::doc(seed);
        let text = dsl::pretty_print(&doc);
        let back = dsl::parse_source(&text).map_err(|e| format!("seed {seed}: {e}\n{text}"))?;
        ensure(back == doc, || format!("seed {seed}: round trip changed the document\n{text}"))?;
        ensure(dsl::pretty_print(&back) == text, || format!("seed {seed}: printing is not stable"))?;
    }

    for (src, dialect, (line, column), fragment) in ERROR_CASES {
        let err = match dsl::check_source(src, *dialect) {
            Ok(_) => return Err(format!("{src:?} was accepted")),
            Err(e) => e,
        };
        let diags = err.diagnostics();
        let d = diags.first().ok_or_else(|| format!("{src:?}: no diagnostics"))?;
        ensure(
            d.line == *line && column.is_none_or(|c| d.column == c) && d.message.contains(fragment),
            || format!("{src:?}: got {}:{} {:?}", d.line, d.column, d.message),
        )?;
    }
    let deep = format!("policy P on a {{ require {}x{}; }}", "(".repeat(500), ")".repeat(500));
    let err = dsl::check_source(&deep, Dialect::Full).err().ok_or("deep nesting accepted")?;
    ensure(err.diagnostics().first().is_some_and(|d| d.line == 1 && d.column > 1), || format!("{err}"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let base = "policy P4 on review_homework {\n    require submitted: resource.submitted;\n    require lt: review_count(resource) < 3;\n}\n";
    let (mut accepted, mut crashes) = (0usize, 0usize);
    let quiet = std::panic::take_hook();
    std::panic::set_hook(Box::new(|_| {}));
    for _ in 0..1_000_000 {
        let input = dsl_gen::fuzz_input(&mut rng, base);
        match catch_unwind(AssertUnwindSafe(|| dsl::check_source(&input, Dialect::Full).is_ok())) {
            Ok(true) => accepted += 1,
            Ok(false) => {}
            Err(_) => crashes += 1,
        }
    }
    std::panic::set_hook(quiet);
    ensure(crashes == 0, || format!("{crashes} fuzz inputs panicked"))?;
    Ok(format!(
        "1000 round trips, {} positioned error cases, 1000000 fuzz inputs without a crash ({accepted} accepted)",
        ERROR_CASES.len() + 1
    ))
}

// ---------------------------------------------------------------- 7

fn agent() -> ureq::Agent {
    ureq::Agent::config_builder()
        .http_status_as_error(false)
        .timeout_global(Some(Duration::from_secs(10)))
        .build()
        .into()
}

fn post(agent: &ureq::Agent, url: &str, body: &impl serde::Serialize) -> (u16, String) {
    let mut resp = agent.post(url).send_json(body).expect("request");
    let status = resp.status().as_u16();
    (status, resp.body_mut().read_to_string().expect("body"))
}

fn inline_body(r: &DatasetRecord) -> DecideHttpRequest {
    DecideHttpRequest { request: r.request.clone(), state: Some(r.state.clone()) }
}

fn percentile(sorted: &[f64], p: f64) -> f64 {
    let rank = ((p * sorted.len() as f64).ceil() as usize).clamp(1, sorted.len());
    sorted[rank - 1]
}

fn service_contract() -> Outcome {
    let records = generate(&GeneratorConfig { num_records: 1_000, ..GeneratorConfig::with_seed(3) })
        .map_err(|e| e.to_string())?;
    let oracle = Oracle::builtin();
    let svc = RunningService::start_with_state(
        "127.0.0.1:0",
        Arc::new(AppState::new(Engine::Local(Arc::new(oracle)), WorldState::new(4, 0).unwrap())),
    )
    .map_err(|e| e.to_string())?;
    let http = agent();

    // Decide bodies equal the engine's decision, serialized.
    let decide_url = svc.url("/v1/decide");
    for r in records.iter().take(300) {
        let (status, body) = post(&http, &decide_url, &inline_body(r));
        ensure(status == 200, || format!("decide returned {status}: {body}"))?;
        let parsed: DecideHttpResponse = serde_json::from_str(&body).map_err(|e| e.to_string())?;
        let want = DecideHttpResponse::new(&oracle.decide_snapshot(&r.state, &r.access_request()), "oracle", parsed.latency_ms);
        let want = serde_json::to_string(&want).unwrap();
        ensure(body == want, || format!("record {}: body {body} != {want}", r.id))?;
    }

    // Denied events leave the held state untouched.
    let event_url = svc.url("/v1/events");
    let event = |user: &str, action: ActionKind, target: &str| {
        let req = AccessRequest::new("e", user, action, target, common::t0());
        serde_json::json!({"request": {
            "user_id": req.user, "action": req.action, "resource_id": req.resource, "timestamp": req.timestamp,
        }})
    };
    for (u, a, t) in [
        ("u1", ActionKind::UploadHomework, "hw1"),
        ("u1", ActionKind::SubmitHomework, "hw1"),
        ("u2", ActionKind::ReviewHomework, "hw1"),
    ] {
        let (status, body) = post(&http, &event_url, &event(u, a, t));
        ensure(status == 200, || format!("setup event {a} by {u}: {status} {body}"))?;
    }
    let resource_url = svc.url("/v1/resources/hw1?requester=u1");
    let snapshot_before = http.get(&resource_url).call().map_err(|e| e.to_string())?.body_mut().read_to_string().unwrap();
    let world_before = svc.state().world();
    let review = world_before.reviews().keys().next().unwrap().to_string();
    let denials = [
        ("u2", ActionKind::ReplaceHomework, "hw1"),
        ("u1", ActionKind::SubmitHomework, "hw1"),
        ("u1", ActionKind::ReviewHomework, "hw1"),
        ("u2", ActionKind::ReviewHomework, "hw1"),
        ("u3", ActionKind::GradeHomework, "hw1"),
        ("u3", ActionKind::ReviseReview, review.as_str()),
    ];
    for (u, a, t) in denials {
        let (status, body) = post(&http, &event_url, &event(u, a, t));
        ensure(status == 403, || format!("event {a} by {u} on {t}: {status} {body}"))?;
    }
    let snapshot_after = http.get(&resource_url).call().map_err(|e| e.to_string())?.body_mut().read_to_string().unwrap();
    ensure(snapshot_before == snapshot_after && svc.state().world() == world_before, || {
        format!("state changed: {snapshot_before} -> {snapshot_after}")
    })?;

    // Malformed model replies always fail closed.
    let mut fail_closed = 0;
    let mut attempts = 0;
    let mut faults: Vec<(Fault, u64)> = Fault::MALFORMED.iter().map(|f| (*f, 2_000)).collect();
    faults.push((Fault::Slow(Duration::from_millis(400)), 100));
    for (fault, timeout_ms) in faults {
        let mock = MockLlm::start(MockMode::Fault(fault)).map_err(|e| e.to_string())?;
        let remote = RemoteDecider::new(RemoteDeciderConfig {
            timeout_ms,
            ..RemoteDeciderConfig::with_endpoint(mock.endpoint())
        })
        .map_err(|e| e.to_string())?;
        for r in records.iter().filter(|r| r.decision == Verdict::Allow).take(20) {
            attempts += 1;
            let d = remote.decide_fail_closed(&r.state, &r.access_request());
            if d.verdict == Verdict::Deny && d.violated_ids() == ["remote.unavailable"] {
                fail_closed += 1;
            }
        }
    }
    let mock = MockLlm::start(MockMode::Cycle(Fault::MALFORMED.to_vec())).map_err(|e| e.to_string())?;
    let remote = RemoteDecider::new(RemoteDeciderConfig::with_endpoint(mock.endpoint())).map_err(|e| e.to_string())?;
    let remote_svc = RunningService::start_with_state(
        "127.0.0.1:0",
        Arc::new(AppState::new(Engine::Remote(Arc::new(remote)), WorldState::new(4, 0).unwrap())),
    )
    .map_err(|e| e.to_string())?;
    for r in records.iter().filter(|r| r.decision == Verdict::Allow).take(24) {
        attempts += 1;
        let (status, body) = post(&http, &remote_svc.url("/v1/decide"), &inline_body(r));
        let parsed: DecideHttpResponse = serde_json::from_str(&body).map_err(|e| format!("{status}: {e}"))?;
        if status == 200 && parsed.decision == Verdict::Deny && parsed.violated == ["remote.unavailable"] {
            fail_closed += 1;
        }
    }
    ensure(fail_closed == attempts, || format!("{fail_closed}/{attempts} malformed replies failed closed"))?;

    // Latency at 64 concurrent clients, inline state.
    let per_client = 40;
    let shared = Arc::new(records);
    let url = Arc::new(decide_url);
    let handles: Vec<_> = (0..64)
        .map(|c| {
            let (records, url) = (shared.clone(), url.clone());
            std::thread::spawn(move || {
                let http = agent();
                let mut samples = Vec::with_capacity(per_client);
                for k in 0..per_client {
                    let r = &records[(c * per_client + k) % records.len()];
                    let t = Instant::now();
                    let (status, body) = post(&http, &url, &inline_body(r));
                    let rtt = t.elapsed().as_secs_f64() * 1e3;
                    assert_eq!(status, 200, "{body}");
                    let parsed: DecideHttpResponse = serde_json::from_str(&body).unwrap();
                    samples.push((parsed.latency_ms, rtt));
                }
                samples
            })
        })
        .collect();
    let samples: Vec<(f64, f64)> = handles.into_iter().flat_map(|h| h.join().unwrap()).collect();
    let mut server: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let mut client: Vec<f64> = samples.iter().map(|s| s.1).collect();
    server.sort_by(f64::total_cmp);
    client.sort_by(f64::total_cmp);
    let (p95, rtt95) = (percentile(&server, 0.95), percentile(&client, 0.95));
    ensure(p95 < 5.0, || format!("server-side p95 {p95:.3} ms (client round trip p95 {rtt95:.3} ms)"))?;

    Ok(format!(
        "300 byte-exact decide bodies, {} denied events left state unchanged, {attempts}/{attempts} malformed replies failed closed, p95 {p95:.3} ms server-side over {} requests at 64 clients (client round trip p95 {rtt95:.2} ms)",
        denials.len(),
        samples.len()
    ))
}

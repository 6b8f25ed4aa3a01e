//! The three comparison engines on hand-built situations where the
//! workflow matters, next to the oracle.
//!
//! ```text
//! cargo run --example baseline_engines
//! ```

use provac::baselines::{AbacEngine, DacAcl, RbacConfig};
use provac::model::{snapshot_for_request, AccessRequest, ActionKind, ResourceKind, Timestamp, WorldState};
use provac::oracle::{Oracle, Verdict};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t: Timestamp = "2025-01-06T09:00:00Z".parse()?;
    let req = |user: &str, action, target: &str| AccessRequest::new("x", user, action, target, t);

    let mut world = WorldState::new(5, 0)?;
    for r in [
        req("u1", ActionKind::UploadHomework, "hw1"),
        req("u1", ActionKind::SubmitHomework, "hw1"),
        req("u2", ActionKind::ReviewHomework, "hw1"),
    ] {
        world.apply_in_place(&r)?;
    }

    // Everyone is a student; students may do everything except grade.
    let rbac = RbacConfig::parse(
        "permit student = upload_homework, replace_homework, submit_homework, review_homework, revise_review\n\
         permit grader = grade_homework, append_review_to_grade\n\
         assign * = student\n\
         assign u5 = grader\n",
    )?;
    let mut abac = AbacEngine::reference();
    abac.set_fallback(ActionKind::GradeHomework, Verdict::Allow);
    abac.set_fallback(ActionKind::AppendReviewToGrade, Verdict::Deny);
    let mut dac = DacAcl::new();
    dac.grant_public(ResourceKind::Homework, ActionKind::ReviewHomework);
    dac.grant(&world, "hw1", "u5", ActionKind::GradeHomework)?;

    let cases = [
        ("self-review", req("u1", ActionKind::ReviewHomework, "hw1")),
        ("second review by u2", req("u2", ActionKind::ReviewHomework, "hw1")),
        ("replace after submit", req("u1", ActionKind::ReplaceHomework, "hw1")),
        ("grade with one review", req("u5", ActionKind::GradeHomework, "hw1")),
        ("fresh review by u3", req("u3", ActionKind::ReviewHomework, "hw1")),
    ];
    println!("{:<24} {:>6} {:>6} {:>6} {:>6}", "situation", "oracle", "rbac", "abac", "dac");
    for (label, r) in &cases {
        let snap = snapshot_for_request(&world, r)?;
        let cell = |v: Verdict| v.as_str().to_owned();
        println!(
            "{label:<24} {:>6} {:>6} {:>6} {:>6}",
            cell(Oracle::builtin().decide_snapshot(&snap, r).verdict),
            cell(rbac.decide(r)?.verdict),
            cell(abac.decide_snapshot(&snap, r).verdict),
            cell(dac.decide_snapshot(&snap, r)?.verdict),
        );
    }

    // Revoking the grader's entry is immediate.
    dac.revoke(&world, "hw1", "u5", ActionKind::GradeHomework)?;
    let d = dac.decide(&world, &req("u5", ActionKind::GradeHomework, "hw1"))?;
    println!("\nafter revoke: {}", d.explanation);
    println!("\nACL as text:\n{}", dac.to_text());
    Ok(())
}

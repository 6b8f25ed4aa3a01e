//! Walks one homework through the workflow, asking the oracle before each
//! step and applying only what it allows. Prints every decision with its
//! condition trace.
//!
//! ```text
//! cargo run --example decide_with_oracle
//! ```

use provac::model::{snapshot_for_request, AccessRequest, ActionKind, Timestamp, WorldState};
use provac::oracle::Oracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut world = WorldState::new(5, 0)?;
    let oracle = Oracle::builtin();
    let mut clock: Timestamp = "2025-01-06T09:00:00Z".parse()?;

    let script = [
        ("u1", ActionKind::UploadHomework, "hw1"),
        ("u2", ActionKind::ReplaceHomework, "hw1"), // not the author
        ("u1", ActionKind::ReplaceHomework, "hw1"),
        ("u2", ActionKind::ReviewHomework, "hw1"), // not submitted yet
        ("u1", ActionKind::SubmitHomework, "hw1"),
        ("u1", ActionKind::ReviewHomework, "hw1"), // self-review
        ("u2", ActionKind::ReviewHomework, "hw1"),
        ("u2", ActionKind::ReviewHomework, "hw1"), // second review by the same user
        ("u5", ActionKind::GradeHomework, "hw1"), // only one review so far
        ("u3", ActionKind::ReviewHomework, "hw1"),
        ("u5", ActionKind::GradeHomework, "hw1"),
        ("u2", ActionKind::ReviseReview, "rv1"), // homework already graded
        ("u4", ActionKind::AppendReviewToGrade, "rv1@gr1"), // not the grader
        ("u5", ActionKind::AppendReviewToGrade, "rv1@gr1"),
        ("u5", ActionKind::AppendReviewToGrade, "rv1@gr1"), // already appended
    ];

    for (i, (user, action, target)) in script.into_iter().enumerate() {
        clock = clock.plus_seconds(60);
        let req = AccessRequest::new(format!("r{i}"), user, action, target, clock);
        let decision = oracle.decide(&world, &req)?;
        println!("{user} {action} {target}");
        println!("  {}", decision.explanation);
        if !decision.satisfied.is_empty() {
            println!("  satisfied: {}", decision.satisfied_ids().join(", "));
        }
        if !decision.violated.is_empty() {
            println!("  violated:  {}", decision.violated_ids().join(", "));
        }
        if decision.is_allow() {
            println!("  applied:   {:?}", world.apply_in_place(&req)?);
        }
    }

    // The flattened state a decision is made against, as sent over the wire.
    let req = AccessRequest::new("peek", "u4", ActionKind::ReviewHomework, "hw1", clock);
    println!("\nsnapshot for u4 reviewing hw1:");
    println!("{}", serde_json::to_string_pretty(&snapshot_for_request(&world, &req)?)?);
    world.check_workflow_invariants()?;
    Ok(())
}

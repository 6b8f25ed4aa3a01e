//! Loads the shipped policy file, shows what the checker reports for a
//! broken edit, and measures how far a stricter variant drifts from the
//! oracle on generated data.
//!
//! ```text
//! cargo run --example policy_dsl -- [path/to/policy.acpol]
//! ```

use provac::dsl::{self, Dialect};
use provac::eval::{evaluate, Decider};
use provac::generator::{generate, GeneratorConfig};
use provac::model::ActionKind;
use provac::oracle::Oracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let source = match std::env::args().nth(1) {
        Some(path) => dsl::read_source(path)?,
        None => dsl::CLASSROOM_POLICY.to_owned(),
    };
    let policies = dsl::compile_source(&source, Dialect::Full)?;
    println!("canonical form:\n{}", dsl::pretty_print(&dsl::parse_source(&source)?));
    for p in policies.policies() {
        let ids: Vec<&str> = p.condition_ids().map(|c| c.as_str()).collect();
        println!("{:<24} {}", p.action.as_str(), ids.join(", "));
    }

    let broken = "policy P6 on grade_homework {\n    require enough: review_count(resource) >= true;\n}\n";
    println!("\nchecking a broken policy:");
    match dsl::check_source(broken, Dialect::Full) {
        Ok(_) => println!("  unexpectedly valid"),
        Err(e) => {
            for d in e.diagnostics() {
                println!("  {}:{}: {}", d.line, d.column, d.message);
            }
        }
    }

    // Demand three reviews before grading instead of two.
    let stricter = source.replace("review_count(resource) >= 2", "review_count(resource) >= 3");
    let stricter = dsl::compile_source(&stricter, Dialect::Full)?;
    let data = generate(&GeneratorConfig { num_records: 3_000, ..GeneratorConfig::with_seed(1) })?;
    for (name, d) in [("shipped", &policies as &dyn Decider), ("stricter", &stricter)] {
        let m = evaluate(d, &data)?;
        println!(
            "{name:<9} accuracy {:.3}, grade_homework {:.3}",
            m.accuracy,
            m.action_accuracy(ActionKind::GradeHomework).unwrap_or(f64::NAN)
        );
    }
    let agree = data
        .iter()
        .filter(|r| {
            let req = r.access_request();
            stricter.evaluate_snapshot(&r.state, &req).verdict == Oracle::builtin().decide_snapshot(&r.state, &req).verdict
        })
        .count();
    println!("stricter variant agrees with the oracle on {agree}/{} records", data.len());
    Ok(())
}

//! Compares the oracle, the compiled policy file and the three fitted
//! baselines on a generated dataset, plus a noisy oracle as a sanity check
//! of the metric code.
//!
//! ```text
//! cargo run --release --example evaluate_deciders -- [SEED]
//! ```

use provac::baselines::{AbacEngine, DacAcl, RbacConfig};
use provac::dsl;
use provac::eval::{evaluate, render_report, Decider, Noisy, ReportFormat};
use provac::generator::{generate, split, GeneratorConfig};
use provac::oracle::Oracle;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let seed = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0);
    let records = generate(&GeneratorConfig::with_seed(seed))?;

    // Baselines are fitted on a 10% stratified sample and scored on the rest.
    let parts = split(&records, 0.1, 0.0, 0.9, seed)?;
    let (train, test) = (parts.train, parts.test);
    let rbac = RbacConfig::fit_majority(&train)?;
    let abac = AbacEngine::reference().fit(&train)?;
    let dac = DacAcl::fit_majority(&train)?;
    println!("fitted RBAC:\n{}", rbac.to_text());
    match dac.to_text() {
        t if t.trim().is_empty() => println!("fitted DAC: owner defaults only\n"),
        t => println!("fitted DAC:\n{t}"),
    }

    let deciders: Vec<Box<dyn Decider>> = vec![
        Box::new(Oracle::builtin()),
        Box::new(dsl::classroom()),
        Box::new(rbac),
        Box::new(abac),
        Box::new(dac),
        Box::new(Noisy::new(Oracle::builtin(), 0.05, seed)?),
    ];
    let mut reports = Vec::new();
    for d in &deciders {
        reports.push(evaluate(d, &test)?);
    }
    print!("{}", render_report(&reports, ReportFormat::Text));
    Ok(())
}

//! Puts a model-backed decider behind the fail-closed client. A local mock
//! stands in for the model: first a noisy one, run in shadow mode against
//! the oracle, then one that only returns garbage.
//!
//! ```text
//! cargo run --example remote_decider_shadow -- [EPSILON]
//! ```

use provac::eval::{evaluate, render_report, ReportFormat};
use provac::generator::{generate, GeneratorConfig};
use provac::service::mock::{Fault, MockLlm, MockMode};
use provac::service::{RemoteDecider, RemoteDeciderConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let epsilon: f64 = std::env::args().nth(1).map(|s| s.parse()).transpose()?.unwrap_or(0.1);
    let data = generate(&GeneratorConfig { num_records: 1_000, ..GeneratorConfig::with_seed(7) })?;

    let mock = MockLlm::start(MockMode::Noisy { epsilon, seed: 1 })?;
    let remote = RemoteDecider::new(RemoteDeciderConfig {
        shadow_mode: true,
        ..RemoteDeciderConfig::with_endpoint(mock.endpoint())
    })?;
    let report = evaluate(&remote, &data)?;
    print!("{}", render_report(&[report], ReportFormat::Text));
    let stats = remote.stats();
    println!(
        "\nshadow: {} of {} remote verdicts disagreed with the oracle ({:.3})",
        stats.shadow_disagreements,
        stats.shadow_compared,
        stats.shadow_disagreements as f64 / stats.shadow_compared.max(1) as f64
    );

    let broken = MockLlm::start(MockMode::Cycle(Fault::MALFORMED.to_vec()))?;
    let remote = RemoteDecider::new(RemoteDeciderConfig::with_endpoint(broken.endpoint()))?;
    println!("\nagainst a model that only sends malformed replies:");
    for (fault, r) in Fault::MALFORMED.iter().zip(&data) {
        let d = remote.decide_fail_closed(&r.state, &r.access_request());
        println!("  {fault:?}: {} ({})", d.verdict, d.explanation);
    }
    println!("  calls {}, failures {}", remote.stats().calls, remote.stats().failures);
    Ok(())
}

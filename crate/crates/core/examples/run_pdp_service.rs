//! Starts the decision service on a free local port, drives a short
//! session over HTTP and shuts it down. For a long-running server use
//! `provac serve`.
//!
//! ```text
//! cargo run --example run_pdp_service
//! ```

use serde_json::{json, Value};

use provac::service::{RunningService, ServiceConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let config = ServiceConfig { bind: "127.0.0.1:0".into(), users: 5, ..ServiceConfig::default() };
    let svc = RunningService::start(&config)?;
    println!("listening on {}", svc.addr());

    let agent: ureq::Agent = ureq::Agent::config_builder().http_status_as_error(false).build().into();
    let call = |path: &str, body: Value| -> Result<(u16, Value), Box<dyn std::error::Error>> {
        let mut resp = agent.post(&svc.url(path)).send_json(&body)?;
        Ok((resp.status().as_u16(), resp.body_mut().read_json()?))
    };
    let request = |user: &str, action: &str, target: &str| {
        json!({"request": {"user_id": user, "action": action, "resource_id": target,
                           "timestamp": "2025-01-06T09:00:00Z"}})
    };

    for (user, action, target) in [
        ("u1", "upload_homework", "hw1"),
        ("u1", "submit_homework", "hw1"),
        ("u1", "review_homework", "hw1"),
        ("u2", "review_homework", "hw1"),
    ] {
        let (status, body) = call("/v1/events", request(user, action, target))?;
        let decision = if status == 200 { &body["decision"] } else { &body };
        println!("event {user} {action} {target} -> {status}: {}", decision["explanation"]);
    }

    let (_, body) = call("/v1/decide", request("u5", "grade_homework", "hw1"))?;
    println!("\ndecide u5 grade_homework hw1:\n{}", serde_json::to_string_pretty(&body)?);

    let (status, body) = call("/v1/decide", request("u1", "fly_away", "hw1"))?;
    println!("\nmalformed request -> {status}: {body}");

    let snapshot = agent.get(&svc.url("/v1/resources/hw1?requester=u3")).call()?.body_mut().read_to_string()?;
    println!("\nheld state of hw1 as seen by u3:\n{snapshot}");
    Ok(())
}

//! Generates a labelled dataset, prints its statistics and a stratified
//! split, and optionally writes the records as JSON Lines.
//!
//! ```text
//! cargo run --release --example generate_dataset -- [SEED] [RECORDS] [OUT.jsonl]
//! ```

use std::time::Instant;

use provac::generator::{dataset_stats, generate, split, write_jsonl_file, GeneratorConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let args: Vec<String> = std::env::args().skip(1).collect();
    let config = GeneratorConfig {
        seed: args.first().map(|s| s.parse()).transpose()?.unwrap_or(0),
        num_records: args.get(1).map(|s| s.parse()).transpose()?.unwrap_or(10_000),
        ..GeneratorConfig::default()
    };

    let started = Instant::now();
    let records = generate(&config)?;
    println!("generated {} records in {:.2?}", records.len(), started.elapsed());
    println!("{}", dataset_stats(&records));

    let parts = split(&records, 0.1, 0.1, 0.8, config.seed)?;
    println!(
        "split 10/10/80: train {} / val {} / test {}",
        parts.train.len(),
        parts.val.len(),
        parts.test.len()
    );

    println!("first record:\n{}", records[0].to_json_line());
    if let Some(path) = args.get(2) {
        write_jsonl_file(path, &records)?;
        println!("wrote {path}");
    }
    Ok(())
}

//! Replay a recorded two-turn conversation. The first grammar references an
//! undefined terminal and the error goes back to the model; the second
//! grammar parses the snippet.
//!
//! `cargo run --example replay_walkthrough`

use std::error::Error;

use grammar_infer::pipeline::{self, RunConfig};

pub fn run() -> Result<(), Box<dyn Error>> {
    let fx = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let out = tempfile::tempdir()?;
    let cfg = RunConfig {
        transcript: Some(format!("{fx}/walkthrough/transcript.json").into()),
        deterministic: true,
        ..RunConfig::new(
            format!("{fx}/walkthrough/eval.json"),
            format!("{fx}/fsl.json"),
            out.path().join("report.json"),
        )
    };
    let report = pipeline::run(&cfg)?;

    for rec in &report.records {
        println!(
            "{}: {:?} at iteration {:?}",
            rec.id, rec.status, rec.success_iteration
        );
        for f in &rec.fewshot {
            println!("  exemplar {} ({:.3})", f.id, f.score);
        }
        for it in &rec.iterations {
            let error = it.error_message.as_deref().unwrap_or("-");
            println!("  #{} {:?}/{:?} {error}", it.index, it.validity, it.parse);
        }
    }
    println!("{}", serde_json::to_string(&report.metrics)?);
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

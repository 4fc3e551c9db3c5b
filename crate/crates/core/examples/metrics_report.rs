//! Compare runs with and without few-shot exemplars on the bundled replay
//! transcripts, then verify each written report against its own records.
//!
//! `cargo run --example metrics_report`

use std::error::Error;

use grammar_infer::evaluator::{check_report, compute_gvi, compute_pap};
use grammar_infer::pipeline::{self, RunConfig};

pub fn run() -> Result<(), Box<dyn Error>> {
    let fx = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let out = tempfile::tempdir()?;

    println!(
        "{:<10} {:>5} {:>5} {:>6} {:>6}  first success per iteration",
        "variant", "valid", "ok", "GVI", "PAP"
    );
    for (name, transcript, few_shot) in [
        ("few-shot", "fewshot", true),
        ("baseline", "baseline", false),
    ] {
        let path = out.path().join(format!("{name}.json"));
        let cfg = RunConfig {
            few_shot,
            transcript: Some(format!("{fx}/transcripts/{transcript}.json").into()),
            deterministic: true,
            ..RunConfig::new(format!("{fx}/eval.json"), format!("{fx}/fsl.json"), &path)
        };
        let m = pipeline::run(&cfg)?.metrics;
        println!(
            "{name:<10} {:>5} {:>5} {:>6.1} {:>6.1}  {:?}",
            m.valid, m.correct, m.gvi, m.pap, m.isrgc
        );

        // The embedded metrics must be reproducible from the records alone.
        let diffs = check_report(&std::fs::read_to_string(&path)?)?;
        assert!(diffs.is_empty(), "{diffs:?}");
    }

    println!("pap(12, 20) = {:.1}", compute_pap(12, 20)?);
    println!("gvi(9, 20) = {:.1}", compute_gvi(9, 20)?);
    println!("pap(13, 12): {}", compute_pap(13, 12).unwrap_err());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

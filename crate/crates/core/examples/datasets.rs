//! Load the bundled evaluation and few-shot datasets. Few-shot exemplars are
//! checked on load: each grammar must compile and parse its own code.
//!
//! `cargo run --example datasets`

use std::error::Error;

use grammar_infer::dataset::{load_eval, load_fsl};

pub fn run() -> Result<(), Box<dyn Error>> {
    let dir = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures");
    let eval = load_eval(format!("{dir}/eval.json"))?;
    let fsl = load_fsl(format!("{dir}/fsl.json"))?;
    println!("{} evaluation records, {} exemplars", eval.len(), fsl.len());
    for r in &eval {
        let first = r.code.lines().next().unwrap_or_default();
        println!("{:<13} {:<20} {first}", r.id, r.name);
    }
    for f in &fsl {
        println!(
            "exemplar {}: {} grammar lines",
            f.id,
            f.grammar.lines().count()
        );
    }

    // Problems are reported with the file and record index.
    let tmp = tempfile::tempdir()?;
    let bad = tmp.path().join("eval.json");
    std::fs::write(
        &bad,
        r#"[{"id": "a", "name": "x", "code": "1"}, {"id": "a", "name": "y", "code": "2"}]"#,
    )?;
    println!("{}", load_eval(&bad).unwrap_err());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

//! Pick few-shot exemplars for a snippet by cosine similarity of code-point
//! vectors.
//!
//! `cargo run --example similarity_search`

use std::error::Error;

use grammar_infer::dataset::load_fsl;
use grammar_infer::similarity::{
    cosine, retrieve_similar, vectorize, DEFAULT_THRESHOLD, DEFAULT_TOP_K,
};

pub fn run() -> Result<(), Box<dyn Error>> {
    let ab = cosine(&vectorize("ab"), &vectorize("ba"));
    println!(
        "cos(ab, ba) = {ab:.9} (19012/19013 = {:.9})",
        19012.0 / 19013.0
    );

    let fsl = load_fsl(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fsl.json"))?;
    for query in ["Kset x = 5\nKadd x, 3", "light porch on", "circle 3 at 1,2"] {
        println!("query {:?}", query.lines().next().unwrap_or_default());
        for hit in retrieve_similar(query, &fsl, DEFAULT_TOP_K, DEFAULT_THRESHOLD) {
            println!("  {:<11} {:.4}", hit.record.id, hit.score);
        }
    }

    // A strict threshold can leave nothing to show the model.
    let none = retrieve_similar("light porch on", &fsl, 3, 0.999);
    println!("threshold 0.999: {} hits", none.len());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

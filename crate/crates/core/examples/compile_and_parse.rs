//! Compile a grammar at runtime and parse a snippet with it. Also shows how
//! grammar errors and input errors are reported.
//!
//! `cargo run --example compile_and_parse`

use std::error::Error;

use grammar_infer::engine::{self, format_error};

const SNIPPET: &str = include_str!("../fixtures/listings/snippet3.txt");
const GRAMMAR: &str = include_str!("../fixtures/listings/grammar4.txt");
const BROKEN: &str = include_str!("../fixtures/listings/grammar3.txt");

pub fn run() -> Result<(), Box<dyn Error>> {
    let g = engine::compile(GRAMMAR)?;
    println!(
        "{} terminals, {} productions",
        g.bnf.terminals.len(),
        g.bnf.productions.len()
    );
    // The ambiguous binary operators resolve by shifting; each cell is reported once.
    for w in g.warnings.iter().take(2) {
        println!("warning: {w}");
    }
    println!("... {} shift/reduce warnings in total", g.warnings.len());

    let first_line = SNIPPET.lines().next().unwrap_or_default();
    for t in engine::tokenize(&g, first_line)? {
        println!("{:>8} {:?}", t.terminal, t.lexeme);
    }

    let tree = g.parse(SNIPPET)?;
    print!("{}", tree.pretty());
    assert_eq!(tree.children.len(), 8);

    // A grammar that references an undefined terminal is rejected at compile time.
    let err = engine::compile(BROKEN).unwrap_err();
    println!("{}", format_error(&err));

    for bad in ["Kset = 5", "Kset x = 5 §"] {
        let err = g.parse(bad).unwrap_err();
        println!("{:?}: {}", err.kind(), format_error(&err));
    }
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

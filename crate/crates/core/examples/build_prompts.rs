//! Build the chat messages sent to the model: the first request with
//! few-shot pairs, and a feedback turn after a failed attempt.
//!
//! `cargo run --example build_prompts`

use std::error::Error;

use grammar_infer::dataset::load_fsl;
use grammar_infer::prompting::{
    build_feedback_message, build_initial_messages, extract_grammar, ChatMessage, PromptTemplates,
};
use grammar_infer::similarity::retrieve_similar;

fn show(messages: &[ChatMessage]) {
    for m in messages {
        let first = m.content.lines().next().unwrap_or_default();
        println!("{:>9}: {first}", m.role);
    }
}

pub fn run() -> Result<(), Box<dyn Error>> {
    let templates = PromptTemplates::default();
    let fsl = load_fsl(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fsl.json"))?;
    let snippet = "light porch on\ndim porch 30";
    let hits = retrieve_similar(snippet, &fsl, 3, 0.5);

    let mut messages = build_initial_messages(&templates, &hits, snippet);
    show(&messages);

    let reply = "Sure.\n<GRAMMAR>\nstart: action+\naction: \"light\" NAME STATE\n</GRAMMAR>";
    let grammar = extract_grammar(reply)?;
    messages.push(ChatMessage::assistant(reply));
    messages.push(build_feedback_message(
        &templates,
        Some(&grammar),
        "Rule 'NAME' used but not defined",
    ));
    println!("--- after one failed attempt ---");
    println!(
        "{}",
        messages
            .last()
            .map(|m| m.content.as_str())
            .unwrap_or_default()
    );

    // Replies without tags are fed back too, with a placeholder in place of the grammar.
    let err = extract_grammar("I think it is a lighting DSL.").unwrap_err();
    println!("--- no grammar block ---");
    println!(
        "{}",
        build_feedback_message(&templates, None, &err.to_string()).content
    );
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

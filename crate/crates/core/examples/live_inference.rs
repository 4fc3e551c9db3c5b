//! Infer a grammar with a live chat-completion endpoint and record the
//! replies so the run can be replayed later.
//!
//! Needs `LLM_API_KEY`; `LLM_API_BASE` and `LLM_MODEL` override the defaults.
//! Without a key the example explains what it would do and exits.
//!
//! `LLM_API_KEY=... cargo run --example live_inference`

use std::error::Error;

use grammar_infer::dataset::{load_fsl, SnippetRecord};
use grammar_infer::llm_client::{
    HttpChatClient, ModelConfig, RecordingClient, DEFAULT_API_KEY_ENV,
};
use grammar_infer::pipeline::{infer_record, RunConfig};
use grammar_infer::prompting::PromptTemplates;

pub fn run() -> Result<(), Box<dyn Error>> {
    if std::env::var_os(DEFAULT_API_KEY_ENV).is_none() {
        println!("{DEFAULT_API_KEY_ENV} is not set; skipping the live request.");
        println!("Replay the bundled transcripts instead: cargo run --example metrics_report");
        return Ok(());
    }
    let mut model = ModelConfig::default();
    if let Ok(base) = std::env::var("LLM_API_BASE") {
        model.base_url = base;
    }
    if let Ok(name) = std::env::var("LLM_MODEL") {
        model.model = name;
    }
    let sink = std::env::temp_dir().join("grammar-infer-live.json");
    let client = RecordingClient::new(HttpChatClient::from_env(model)?, &sink)?;

    let fsl = load_fsl(concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/fsl.json"))?;
    let record = SnippetRecord {
        id: "stack".into(),
        name: "Stack machine".into(),
        code: "PUSH 3\nPUSH 4\nADD\nPRINT".into(),
    };
    let cfg = RunConfig::new("-", "-", "-");
    let outcome = infer_record(&record, &fsl, &client, &PromptTemplates::default(), &cfg)?;
    for it in &outcome.iterations {
        println!(
            "#{} {:?}/{:?} {}",
            it.index,
            it.validity,
            it.parse,
            it.error_message.as_deref().unwrap_or("")
        );
    }
    match &outcome.final_grammar {
        Some(g) if outcome.success_iteration.is_some() => println!("{g}"),
        _ => println!(
            "no working grammar after {} iterations",
            outcome.iterations.len()
        ),
    }
    println!("replies recorded to {}", sink.display());
    Ok(())
}

fn main() {
    if let Err(e) = run() {
        eprintln!("error: {e}");
        std::process::exit(1);
    }
}

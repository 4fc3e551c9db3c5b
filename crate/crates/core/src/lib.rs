//! Grammar inference for unknown DSL snippets.
//!
//! A chat model proposes a grammar for a snippet, optionally primed with the
//! most similar (snippet, grammar) exemplars. The grammar is compiled with the
//! built-in LALR(1) [`engine`] and tried on the snippet; parser errors go back
//! to the model until it succeeds or the iteration budget runs out.

pub mod cli;
pub mod dataset;
pub mod engine;
pub mod evaluator;
pub mod llm_client;
pub mod pipeline;
pub mod prompting;
pub mod similarity;

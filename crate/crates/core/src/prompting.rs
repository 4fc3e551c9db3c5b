//! Chat message construction and grammar extraction.

use std::collections::BTreeSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::LazyLock;

use regex::Regex;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::similarity::SimilarityHit;

/// Shown in the `{grammar}` slot when the previous reply had no grammar block.
pub const NO_GRAMMAR_PLACEHOLDER: &str = "(no grammar block was found in your reply)";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    System,
    User,
    Assistant,
}

impl fmt::Display for Role {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Role::System => "system",
            Role::User => "user",
            Role::Assistant => "assistant",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChatMessage {
    pub role: Role,
    pub content: String,
}

impl ChatMessage {
    pub fn system(content: impl Into<String>) -> Self {
        Self {
            role: Role::System,
            content: content.into(),
        }
    }

    pub fn user(content: impl Into<String>) -> Self {
        Self {
            role: Role::User,
            content: content.into(),
        }
    }

    pub fn assistant(content: impl Into<String>) -> Self {
        Self {
            role: Role::Assistant,
            content: content.into(),
        }
    }
}

#[derive(Debug, Error)]
pub enum TemplateError {
    #[error("cannot read template {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
    #[error("template {file} must use exactly the placeholders {expected:?}, found {found:?}")]
    Placeholders {
        file: &'static str,
        expected: Vec<&'static str>,
        found: Vec<String>,
    },
    #[error("system template must ask for a `start` rule and a <GRAMMAR> block")]
    SystemInstructions,
}

static PLACEHOLDER: LazyLock<Regex> = LazyLock::new(|| Regex::new(r"\{([a-z_]+)\}").unwrap());
static GRAMMAR_BLOCK: LazyLock<Regex> =
    LazyLock::new(|| Regex::new(r"(?s)<GRAMMAR>(.*?)</GRAMMAR>").unwrap());

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptTemplates {
    pub system_text: String,
    /// Placeholder: `{code}`.
    pub initial_user_pattern: String,
    /// Placeholders: `{grammar}`, `{error}`.
    pub feedback_user_pattern: String,
}

pub const SYSTEM_FILE: &str = "system.txt";
pub const INITIAL_USER_FILE: &str = "initial_user.txt";
pub const FEEDBACK_USER_FILE: &str = "feedback_user.txt";

impl Default for PromptTemplates {
    fn default() -> Self {
        Self::new(
            include_str!("../templates/system.txt"),
            include_str!("../templates/initial_user.txt"),
            include_str!("../templates/feedback_user.txt"),
        )
        .expect("bundled templates are valid")
    }
}

fn check_placeholders(
    file: &'static str,
    text: &str,
    expected: &[&'static str],
) -> Result<(), TemplateError> {
    let found: BTreeSet<String> = PLACEHOLDER
        .captures_iter(text)
        .map(|c| c[1].to_string())
        .collect();
    let want: BTreeSet<String> = expected.iter().map(|s| s.to_string()).collect();
    if found != want {
        return Err(TemplateError::Placeholders {
            file,
            expected: expected.to_vec(),
            found: found.into_iter().collect(),
        });
    }
    Ok(())
}

impl PromptTemplates {
    pub fn new(
        system_text: impl Into<String>,
        initial_user_pattern: impl Into<String>,
        feedback_user_pattern: impl Into<String>,
    ) -> Result<Self, TemplateError> {
        let t = PromptTemplates {
            system_text: system_text.into().trim_end().to_string(),
            initial_user_pattern: initial_user_pattern.into().trim_end().to_string(),
            feedback_user_pattern: feedback_user_pattern.into().trim_end().to_string(),
        };
        check_placeholders(SYSTEM_FILE, &t.system_text, &[])?;
        check_placeholders(INITIAL_USER_FILE, &t.initial_user_pattern, &["code"])?;
        check_placeholders(
            FEEDBACK_USER_FILE,
            &t.feedback_user_pattern,
            &["error", "grammar"],
        )?;
        if !(t.system_text.contains("<GRAMMAR>") && t.system_text.contains("start")) {
            return Err(TemplateError::SystemInstructions);
        }
        Ok(t)
    }

    /// Read `system.txt`, `initial_user.txt` and `feedback_user.txt` from `dir`.
    pub fn load(dir: impl AsRef<Path>) -> Result<Self, TemplateError> {
        let read = |name: &str| {
            let path = dir.as_ref().join(name);
            std::fs::read_to_string(&path).map_err(|source| TemplateError::Io { path, source })
        };
        Self::new(
            read(SYSTEM_FILE)?,
            read(INITIAL_USER_FILE)?,
            read(FEEDBACK_USER_FILE)?,
        )
    }
}

/// Substitute `{name}` slots in one pass, so values containing brace text
/// are never re-expanded.
fn instantiate(pattern: &str, values: &[(&str, &str)]) -> String {
    PLACEHOLDER
        .replace_all(pattern, |c: &regex::Captures<'_>| {
            values
                .iter()
                .find(|(k, _)| *k == &c[1])
                .map(|(_, v)| v.to_string())
                .unwrap_or_else(|| c[0].to_string())
        })
        .into_owned()
}

pub fn wrap_grammar(grammar: &str) -> String {
    format!("<GRAMMAR>\n{}\n</GRAMMAR>", grammar.trim())
}

/// `[system, (user, assistant)*, user]`: one pair per exemplar, then the snippet.
pub fn build_initial_messages(
    t: &PromptTemplates,
    examples: &[SimilarityHit<'_>],
    snippet: &str,
) -> Vec<ChatMessage> {
    let mut msgs = Vec::with_capacity(2 + 2 * examples.len());
    msgs.push(ChatMessage::system(t.system_text.clone()));
    for ex in examples {
        msgs.push(ChatMessage::user(instantiate(
            &t.initial_user_pattern,
            &[("code", &ex.record.code)],
        )));
        msgs.push(ChatMessage::assistant(wrap_grammar(&ex.record.grammar)));
    }
    msgs.push(ChatMessage::user(instantiate(
        &t.initial_user_pattern,
        &[("code", snippet)],
    )));
    msgs
}

pub fn build_feedback_message(
    t: &PromptTemplates,
    prev_grammar: Option<&str>,
    error: &str,
) -> ChatMessage {
    debug_assert!(!error.is_empty());
    let grammar = prev_grammar.unwrap_or(NO_GRAMMAR_PLACEHOLDER);
    ChatMessage::user(instantiate(
        &t.feedback_user_pattern,
        &[("grammar", grammar), ("error", error)],
    ))
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("No <GRAMMAR>...</GRAMMAR> block found in the output")]
pub struct MissingGrammarTags;

/// Content of the first complete `<GRAMMAR>` block, trimmed.
pub fn extract_grammar(response: &str) -> Result<String, MissingGrammarTags> {
    GRAMMAR_BLOCK
        .captures(response)
        .map(|c| c[1].trim().to_string())
        .ok_or(MissingGrammarTags)
}

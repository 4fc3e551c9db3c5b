use std::fmt;

use thiserror::Error;

use super::ast::Pos;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum EngineErrorKind {
    NotationSyntax,
    UnknownImport,
    UndefinedSymbol,
    MissingStartRule,
    EmptyMatchTerminal,
    ReduceReduceConflict,
    NoTerminalMatches,
    UnexpectedToken,
}

impl EngineErrorKind {
    /// Errors that make a grammar structurally invalid (as opposed to a
    /// grammar that compiles but rejects the input).
    pub fn is_grammar_validity(self) -> bool {
        !self.is_parse()
    }

    pub fn is_parse(self) -> bool {
        matches!(
            self,
            EngineErrorKind::NoTerminalMatches | EngineErrorKind::UnexpectedToken
        )
    }
}

impl fmt::Display for EngineErrorKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

/// Every failure the engine can report. `Display` renders the exact message
/// fed back to the model.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum EngineError {
    #[error("Grammar syntax error at line {}, column {}: {message}", pos.line, pos.column)]
    NotationSyntax { message: String, pos: Pos },

    #[error("Unknown import '{name}' at line {}", pos.line)]
    UnknownImport { name: String, pos: Pos },

    #[error("Rule '{name}' used but not defined")]
    UndefinedSymbol { name: String, pos: Pos },

    #[error("Missing start rule 'start'")]
    MissingStartRule,

    #[error("Terminal '{name}' matches the empty string")]
    EmptyMatchTerminal { name: String },

    #[error("Reduce/Reduce collision in state {state} on terminal {terminal}: {} / {}", productions.0, productions.1)]
    ReduceReduceConflict {
        state: usize,
        terminal: String,
        productions: (String, String),
    },

    #[error("No terminal matches '{text}' in the current parser context, at line {} col {}", pos.line, pos.column)]
    NoTerminalMatches { text: String, pos: Pos },

    #[error("Unexpected token '{lexeme}' ({terminal}) at line {}, column {}. Expected one of: {}", pos.line, pos.column, expected.join(", "))]
    UnexpectedToken {
        lexeme: String,
        terminal: String,
        pos: Pos,
        /// Sorted terminal names.
        expected: Vec<String>,
    },
}

impl EngineError {
    pub fn kind(&self) -> EngineErrorKind {
        match self {
            EngineError::NotationSyntax { .. } => EngineErrorKind::NotationSyntax,
            EngineError::UnknownImport { .. } => EngineErrorKind::UnknownImport,
            EngineError::UndefinedSymbol { .. } => EngineErrorKind::UndefinedSymbol,
            EngineError::MissingStartRule => EngineErrorKind::MissingStartRule,
            EngineError::EmptyMatchTerminal { .. } => EngineErrorKind::EmptyMatchTerminal,
            EngineError::ReduceReduceConflict { .. } => EngineErrorKind::ReduceReduceConflict,
            EngineError::NoTerminalMatches { .. } => EngineErrorKind::NoTerminalMatches,
            EngineError::UnexpectedToken { .. } => EngineErrorKind::UnexpectedToken,
        }
    }

    pub fn position(&self) -> Option<Pos> {
        match self {
            EngineError::NotationSyntax { pos, .. }
            | EngineError::UnknownImport { pos, .. }
            | EngineError::UndefinedSymbol { pos, .. }
            | EngineError::NoTerminalMatches { pos, .. }
            | EngineError::UnexpectedToken { pos, .. } => Some(*pos),
            _ => None,
        }
    }

    pub fn expected(&self) -> Option<&[String]> {
        match self {
            EngineError::UnexpectedToken { expected, .. } => Some(expected),
            _ => None,
        }
    }

    pub(crate) fn syntax(message: impl Into<String>, pos: Pos) -> Self {
        EngineError::NotationSyntax {
            message: message.into(),
            pos,
        }
    }
}

/// Renders the message handed back to the model in feedback iterations.
pub fn format_error(e: &EngineError) -> String {
    e.to_string()
}

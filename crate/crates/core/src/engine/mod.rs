//! Runtime grammar engine: notation reader, LALR(1) table builder,
//! longest-match lexer and shift/reduce parser.
//!
//! [`compile`] is the validity check for a candidate grammar and
//! [`parse`] is the correctness check against a snippet.
//!
//! ```
//! use grammar_infer::engine;
//!
//! let g = engine::compile("start: \"a\"+").unwrap();
//! assert!(engine::parse(&g, "aaa").is_ok());
//! assert!(engine::parse(&g, "").is_err());
//! ```

pub mod ast;
pub mod error;
pub mod lalr;
pub mod lexer;
pub mod lower;
pub mod notation;
pub mod parser;
pub mod resolve;

pub use ast::{GrammarAst, Pos};
pub use error::{format_error, EngineError, EngineErrorKind};
pub use lalr::{Action, ConflictWarning, Tables};
pub use lexer::{LexerSpec, Token};
pub use lower::{lower_to_bnf, Bnf};
pub use notation::parse_notation;
pub use parser::{ParseNode, ParseTree};
pub use resolve::{resolve_imports, validate_references, BUILTINS};

/// A grammar ready to parse input. Immutable; share freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct CompiledGrammar {
    pub bnf: Bnf,
    pub tables: Tables,
    pub lexer: LexerSpec,
    /// Shift/reduce collisions resolved as shift, one per table cell.
    pub warnings: Vec<ConflictWarning>,
}

pub fn build_tables(bnf: Bnf) -> Result<CompiledGrammar, EngineError> {
    let built = lalr::build(&bnf)?;
    let lexer = LexerSpec::build(&bnf)?;
    Ok(CompiledGrammar {
        bnf,
        tables: built.tables,
        lexer,
        warnings: built.warnings,
    })
}

/// Full pipeline from notation text to a compiled grammar.
pub fn compile(text: &str) -> Result<CompiledGrammar, EngineError> {
    let ast = resolve_imports(parse_notation(text)?)?;
    validate_references(&ast)?;
    build_tables(lower_to_bnf(&ast))
}

/// Significant tokens of `input`; ignored spans are dropped.
pub fn tokenize(g: &CompiledGrammar, input: &str) -> Result<Vec<Token>, EngineError> {
    let mut lx = lexer::Lexer::new(&g.lexer, input);
    std::iter::from_fn(|| lx.next_token()).collect()
}

/// Every lexeme of `input`, ignored ones included (flagged `ignored`).
pub fn scan(g: &CompiledGrammar, input: &str) -> Result<Vec<Token>, EngineError> {
    let mut lx = lexer::Lexer::new(&g.lexer, input);
    std::iter::from_fn(|| lx.next_any()).collect()
}

pub fn parse(g: &CompiledGrammar, input: &str) -> Result<ParseTree, EngineError> {
    parser::run(g, input)
}

impl CompiledGrammar {
    pub fn parse(&self, input: &str) -> Result<ParseTree, EngineError> {
        parse(self, input)
    }
}

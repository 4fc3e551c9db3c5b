//! Longest-match scanner.
//!
//! At each position every terminal (ignored ones included) is tried. The
//! longest match wins; ties go to string literals over regexes, then to the
//! earlier definition. A winning ignored terminal is skipped.

use regex::Regex;
use serde::Serialize;

use super::ast::Pos;
use super::error::EngineError;
use super::lower::Bnf;

#[derive(Debug, Clone)]
pub struct LexTerminal {
    pub name: String,
    pub pattern: String,
    pub literal: bool,
    pub ignored: bool,
    /// Action-table column; ignored-only terminals have none.
    pub column: Option<usize>,
    regex: Regex,
}

impl PartialEq for LexTerminal {
    fn eq(&self, other: &Self) -> bool {
        self.name == other.name
            && self.pattern == other.pattern
            && self.literal == other.literal
            && self.ignored == other.ignored
            && self.column == other.column
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct LexerSpec {
    /// In priority order for equal-length matches.
    pub terminals: Vec<LexTerminal>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Token {
    pub terminal: String,
    pub lexeme: String,
    /// Byte offset into the input.
    pub offset: usize,
    pub line: usize,
    pub column: usize,
    #[serde(skip)]
    pub ignored: bool,
    #[serde(skip)]
    pub(crate) table_column: Option<usize>,
}

impl Token {
    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }
}

impl LexerSpec {
    pub fn build(bnf: &Bnf) -> Result<Self, EngineError> {
        let mut terminals = Vec::with_capacity(bnf.terminals.len());
        for (i, t) in bnf.terminals.iter().enumerate() {
            // Lookaround and backreferences are not supported by the regex
            // dialect and surface here as syntax errors.
            let regex = Regex::new(&format!("^(?:{})", t.pattern)).map_err(|e| {
                let detail = e.to_string();
                let detail = detail.lines().last().unwrap_or("").trim().to_string();
                EngineError::NotationSyntax {
                    message: format!("invalid regex for terminal {}: {}", t.name, detail),
                    pos: if t.pos.line == 0 {
                        Pos { line: 1, column: 1 }
                    } else {
                        t.pos
                    },
                }
            })?;
            if regex.is_match("") {
                return Err(EngineError::EmptyMatchTerminal {
                    name: t.name.clone(),
                });
            }
            let used = bnf
                .productions
                .iter()
                .any(|p| p.rhs.contains(&super::lower::Symbol::Terminal(i)));
            terminals.push(LexTerminal {
                name: t.name.clone(),
                pattern: t.pattern.clone(),
                literal: t.literal,
                ignored: bnf.ignored.contains(&i),
                column: used.then_some(i),
                regex,
            });
        }
        // Stable: definition order survives within each class.
        let mut order: Vec<usize> = (0..terminals.len()).collect();
        order.sort_by_key(|&i| (!terminals[i].literal, def_rank(bnf, i)));
        let terminals = order.into_iter().map(|i| terminals[i].clone()).collect();
        Ok(LexerSpec { terminals })
    }

    /// Best match at the start of `rest`: (terminal index, match length).
    fn best(&self, rest: &str) -> Option<(usize, usize)> {
        let mut best: Option<(usize, usize)> = None;
        for (i, t) in self.terminals.iter().enumerate() {
            if let Some(m) = t.regex.find(rest) {
                let len = m.end();
                if len > 0 && best.is_none_or(|(_, l)| len > l) {
                    best = Some((i, len));
                }
            }
        }
        best
    }
}

/// User terminals keep their definition order; anonymous ones follow in
/// order of first use.
fn def_rank(bnf: &Bnf, i: usize) -> (bool, usize, usize, usize) {
    let t = &bnf.terminals[i];
    (t.anonymous, t.pos.line, t.pos.column, i)
}

/// Incremental scanner over one input.
pub struct Lexer<'g, 'i> {
    spec: &'g LexerSpec,
    input: &'i str,
    offset: usize,
    line: usize,
    column: usize,
}

impl<'g, 'i> Lexer<'g, 'i> {
    pub fn new(spec: &'g LexerSpec, input: &'i str) -> Self {
        Lexer {
            spec,
            input,
            offset: 0,
            line: 1,
            column: 1,
        }
    }

    pub fn pos(&self) -> Pos {
        Pos {
            line: self.line,
            column: self.column,
        }
    }

    /// Next lexeme, ignored ones included.
    pub fn next_any(&mut self) -> Option<Result<Token, EngineError>> {
        let rest = &self.input[self.offset..];
        if rest.is_empty() {
            return None;
        }
        let Some((ti, len)) = self.spec.best(rest) else {
            let text: String = rest
                .chars()
                .enumerate()
                .take_while(|(k, c)| *k == 0 || !c.is_whitespace())
                .take(10)
                .map(|(_, c)| c)
                .collect();
            return Some(Err(EngineError::NoTerminalMatches {
                text,
                pos: self.pos(),
            }));
        };
        let t = &self.spec.terminals[ti];
        let lexeme = &rest[..len];
        let tok = Token {
            terminal: t.name.clone(),
            lexeme: lexeme.to_string(),
            offset: self.offset,
            line: self.line,
            column: self.column,
            ignored: t.ignored,
            table_column: t.column,
        };
        for c in lexeme.chars() {
            if c == '\n' {
                self.line += 1;
                self.column = 1;
            } else {
                self.column += 1;
            }
        }
        self.offset += len;
        Some(Ok(tok))
    }

    /// Next significant token.
    pub fn next_token(&mut self) -> Option<Result<Token, EngineError>> {
        loop {
            match self.next_any()? {
                Ok(t) if t.ignored => continue,
                other => return Some(other),
            }
        }
    }
}

//! Grammar notation AST.

use indexmap::IndexMap;

/// Source position of a definition or reference (1-based).
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Pos {
    pub line: usize,
    pub column: usize,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct GrammarAst {
    pub rules: IndexMap<String, RuleDef>,
    pub terminals: IndexMap<String, TerminalDef>,
    pub ignores: Vec<IgnoreItem>,
    pub imports: Vec<Import>,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RuleDef {
    pub body: Alternation,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalDef {
    pub body: TerminalBody,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Import {
    pub name: String,
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum IgnoreItem {
    Terminal { name: String, pos: Pos },
    Literal(String),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TerminalBody {
    Regex(String),
    Literal(String),
    Literals(Vec<String>),
}

impl TerminalBody {
    pub fn is_literal(&self) -> bool {
        !matches!(self, TerminalBody::Regex(_))
    }

    /// Regex source matching exactly this body.
    pub fn pattern(&self) -> String {
        match self {
            TerminalBody::Regex(p) => p.clone(),
            TerminalBody::Literal(s) => regex::escape(s),
            TerminalBody::Literals(v) => {
                // Longer literals first so leftmost-first alternation is longest-match.
                let mut v: Vec<&String> = v.iter().collect();
                v.sort_by_key(|s| std::cmp::Reverse(s.len()));
                v.iter()
                    .map(|s| regex::escape(s))
                    .collect::<Vec<_>>()
                    .join("|")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alternation {
    pub alternatives: Vec<Alternative>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Alternative {
    pub items: Vec<Item>,
    pub alias: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Item {
    pub atom: Atom,
    pub quantifier: Quantifier,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Quantifier {
    One,
    Optional,
    Star,
    Plus,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub enum Atom {
    Rule { name: String, pos: Pos },
    Terminal { name: String, pos: Pos },
    Literal(String),
    Regex { pattern: String, pos: Pos },
    Group(Alternation),
}

pub fn is_rule_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_lowercase() || c == '_')
        && chars.all(|c| c.is_ascii_lowercase() || c.is_ascii_digit() || c == '_')
}

pub fn is_terminal_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if c.is_ascii_uppercase() || c == '_')
        && chars.all(|c| c.is_ascii_uppercase() || c.is_ascii_digit() || c == '_')
}

impl Atom {
    /// Structural key ignoring source positions, used to share synthetic rules.
    pub(crate) fn key(&self) -> String {
        match self {
            Atom::Rule { name, .. } | Atom::Terminal { name, .. } => name.clone(),
            Atom::Literal(s) => format!("{s:?}"),
            Atom::Regex { pattern, .. } => format!("/{pattern}/"),
            Atom::Group(alt) => format!("({})", alt.key()),
        }
    }
}

impl Alternation {
    pub(crate) fn key(&self) -> String {
        self.alternatives
            .iter()
            .map(|a| {
                let items = a
                    .items
                    .iter()
                    .map(|i| {
                        let q = match i.quantifier {
                            Quantifier::One => "",
                            Quantifier::Optional => "?",
                            Quantifier::Star => "*",
                            Quantifier::Plus => "+",
                        };
                        format!("{}{q}", i.atom.key())
                    })
                    .collect::<Vec<_>>()
                    .join(" ");
                match &a.alias {
                    Some(al) => format!("{items} -> {al}"),
                    None => items,
                }
            })
            .collect::<Vec<_>>()
            .join(" | ")
    }
}

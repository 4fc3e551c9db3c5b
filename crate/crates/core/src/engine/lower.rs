//! EBNF sugar to plain BNF.
//!
//! `x?` becomes `__opt_k: x | <empty>`, `x*` becomes the left-recursive
//! `__star_k: __star_k x | <empty>`, `x+` becomes `__plus_k: __plus_k x | x`
//! and groups become `__group_k`. Inline string literals and regexes become
//! terminals of their own. Synthetic names share one per-grammar counter.

use std::collections::{HashMap, HashSet};
use std::fmt;

use super::ast::*;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Symbol {
    Terminal(usize),
    Nonterminal(usize),
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TerminalSpec {
    pub name: String,
    pub pattern: String,
    pub literal: bool,
    /// Created from an inline string or regex in a rule body.
    pub anonymous: bool,
    /// Position used in regex diagnostics.
    pub pos: Pos,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Nonterminal {
    pub name: String,
    /// Synthetic rules are spliced into their parent in parse trees.
    pub synthetic: bool,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Production {
    pub lhs: usize,
    pub rhs: Vec<Symbol>,
    pub alias: Option<String>,
    /// Per rhs position: false for inline literals, which are left out of trees.
    pub keep: Vec<bool>,
}

/// Lowered grammar. Nonterminal 0 is `start`.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Bnf {
    pub terminals: Vec<TerminalSpec>,
    pub nonterminals: Vec<Nonterminal>,
    pub productions: Vec<Production>,
    /// Indices into `terminals` that the lexer skips.
    pub ignored: Vec<usize>,
}

impl Bnf {
    pub fn symbol_name(&self, s: Symbol) -> &str {
        match s {
            Symbol::Terminal(t) => &self.terminals[t].name,
            Symbol::Nonterminal(n) => &self.nonterminals[n].name,
        }
    }

    pub fn render_production(&self, p: usize) -> String {
        let prod = &self.productions[p];
        let rhs = if prod.rhs.is_empty() {
            "<empty>".to_string()
        } else {
            prod.rhs
                .iter()
                .map(|s| self.symbol_name(*s))
                .collect::<Vec<_>>()
                .join(" ")
        };
        format!("{} -> {}", self.nonterminals[prod.lhs].name, rhs)
    }
}

/// One production per line, grouped by left-hand side in nonterminal order.
impl fmt::Display for Bnf {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut order: Vec<usize> = (0..self.productions.len()).collect();
        order.sort_by_key(|&p| self.productions[p].lhs);
        for p in order {
            writeln!(f, "{}", self.render_production(p))?;
        }
        Ok(())
    }
}

const PUNCTUATION: [(char, &str); 35] = [
    ('.', "DOT"),
    (',', "COMMA"),
    (':', "COLON"),
    (';', "SEMICOLON"),
    ('+', "PLUS"),
    ('-', "MINUS"),
    ('*', "STAR"),
    ('/', "SLASH"),
    ('\\', "BACKSLASH"),
    ('|', "VBAR"),
    ('?', "QMARK"),
    ('!', "BANG"),
    ('@', "AT"),
    ('#', "HASH"),
    ('$', "DOLLAR"),
    ('%', "PERCENT"),
    ('^', "CIRCUMFLEX"),
    ('&', "AMPERSAND"),
    ('_', "UNDERSCORE"),
    ('<', "LESSTHAN"),
    ('>', "MORETHAN"),
    ('=', "EQUAL"),
    ('"', "DBLQUOTE"),
    ('\'', "QUOTE"),
    ('`', "BACKQUOTE"),
    ('~', "TILDE"),
    ('(', "LPAR"),
    (')', "RPAR"),
    ('{', "LBRACE"),
    ('}', "RBRACE"),
    ('[', "LSQB"),
    (']', "RSQB"),
    ('\n', "NEWLINE"),
    ('\t', "TAB"),
    (' ', "SPACE"),
];

/// Readable name for an inline literal, if one can be derived.
fn literal_name(s: &str) -> Option<String> {
    let mut chars = s.chars();
    let first = chars.next()?;
    if (first.is_ascii_alphabetic() || first == '_')
        && chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
    {
        return Some(s.to_ascii_uppercase());
    }
    s.chars()
        .map(|c| PUNCTUATION.iter().find(|(p, _)| *p == c).map(|(_, n)| *n))
        .collect::<Option<Vec<_>>>()
        .map(|v| v.concat())
}

struct Lowerer<'a> {
    ast: &'a GrammarAst,
    bnf: Bnf,
    rule_ids: HashMap<String, usize>,
    terminal_ids: HashMap<String, usize>,
    literal_ids: HashMap<String, usize>,
    regex_ids: HashMap<String, usize>,
    synthetic_ids: HashMap<String, usize>,
    reserved: HashSet<String>,
    counter: usize,
}

impl<'a> Lowerer<'a> {
    fn fresh(&mut self, kind: &str) -> String {
        loop {
            let name = format!("__{kind}_{}", self.counter);
            self.counter += 1;
            if !self.reserved.contains(&name) {
                self.reserved.insert(name.clone());
                return name;
            }
        }
    }

    fn add_terminal(&mut self, spec: TerminalSpec) -> usize {
        self.reserved.insert(spec.name.clone());
        self.bnf.terminals.push(spec);
        self.bnf.terminals.len() - 1
    }

    fn user_terminal(&mut self, name: &str) -> usize {
        if let Some(&id) = self.terminal_ids.get(name) {
            return id;
        }
        let def = &self.ast.terminals[name];
        let id = self.add_terminal(TerminalSpec {
            name: name.to_string(),
            pattern: def.body.pattern(),
            literal: def.body.is_literal(),
            anonymous: false,
            pos: def.pos,
        });
        self.terminal_ids.insert(name.to_string(), id);
        id
    }

    fn literal_terminal(&mut self, s: &str) -> usize {
        if let Some(&id) = self.literal_ids.get(s) {
            return id;
        }
        // Reuse a user terminal defined by exactly this string.
        let user = self
            .ast
            .terminals
            .iter()
            .find(|(_, d)| d.body == TerminalBody::Literal(s.to_string()))
            .map(|(n, _)| n.clone());
        let id = match user {
            Some(n) => self.user_terminal(&n),
            None => {
                let name = match literal_name(s) {
                    Some(n) if !self.reserved.contains(&n) => n,
                    _ => self.fresh("ANON"),
                };
                self.add_terminal(TerminalSpec {
                    name,
                    pattern: regex::escape(s),
                    literal: true,
                    anonymous: true,
                    pos: Pos { line: 0, column: 0 },
                })
            }
        };
        self.literal_ids.insert(s.to_string(), id);
        id
    }

    fn regex_terminal(&mut self, pattern: &str, pos: Pos) -> usize {
        if let Some(&id) = self.regex_ids.get(pattern) {
            return id;
        }
        let name = self.fresh("ANON");
        let id = self.add_terminal(TerminalSpec {
            name,
            pattern: pattern.to_string(),
            literal: false,
            anonymous: true,
            pos,
        });
        self.regex_ids.insert(pattern.to_string(), id);
        id
    }

    fn new_nonterminal(&mut self, name: String, synthetic: bool) -> usize {
        self.bnf.nonterminals.push(Nonterminal { name, synthetic });
        self.bnf.nonterminals.len() - 1
    }

    fn push(&mut self, lhs: usize, rhs: Vec<(Symbol, bool)>, alias: Option<String>) {
        let (rhs, keep) = rhs.into_iter().unzip();
        self.bnf.productions.push(Production {
            lhs,
            rhs,
            alias,
            keep,
        });
    }

    fn atom(&mut self, atom: &Atom) -> (Symbol, bool) {
        match atom {
            Atom::Rule { name, .. } => (Symbol::Nonterminal(self.rule_ids[name]), true),
            Atom::Terminal { name, .. } => (Symbol::Terminal(self.user_terminal(name)), true),
            Atom::Literal(s) => (Symbol::Terminal(self.literal_terminal(s)), false),
            Atom::Regex { pattern, pos } => {
                (Symbol::Terminal(self.regex_terminal(pattern, *pos)), true)
            }
            Atom::Group(alt) => {
                if let [Alternative { items, alias: None }] = alt.alternatives.as_slice() {
                    if let [item] = items.as_slice() {
                        return self.item(item);
                    }
                }
                let key = format!("group:{}", alt.key());
                if let Some(&id) = self.synthetic_ids.get(&key) {
                    return (Symbol::Nonterminal(id), true);
                }
                let name = self.fresh("group");
                let id = self.new_nonterminal(name, true);
                self.synthetic_ids.insert(key, id);
                for a in &alt.alternatives {
                    let rhs = self.sequence(&a.items);
                    self.push(id, rhs, None);
                }
                (Symbol::Nonterminal(id), true)
            }
        }
    }

    fn item(&mut self, item: &Item) -> (Symbol, bool) {
        let kind = match item.quantifier {
            Quantifier::One => return self.atom(&item.atom),
            Quantifier::Optional => "opt",
            Quantifier::Star => "star",
            Quantifier::Plus => "plus",
        };
        let key = format!("{kind}:{}", item.atom.key());
        if let Some(&id) = self.synthetic_ids.get(&key) {
            return (Symbol::Nonterminal(id), true);
        }
        let name = self.fresh(kind);
        let id = self.new_nonterminal(name, true);
        self.synthetic_ids.insert(key, id);
        let inner = self.atom(&item.atom);
        let me = (Symbol::Nonterminal(id), true);
        match item.quantifier {
            Quantifier::Optional => {
                self.push(id, vec![inner], None);
                self.push(id, vec![], None);
            }
            Quantifier::Star => {
                self.push(id, vec![me, inner], None);
                self.push(id, vec![], None);
            }
            Quantifier::Plus => {
                self.push(id, vec![me, inner], None);
                self.push(id, vec![inner], None);
            }
            Quantifier::One => unreachable!(),
        }
        me
    }

    fn sequence(&mut self, items: &[Item]) -> Vec<(Symbol, bool)> {
        items.iter().map(|i| self.item(i)).collect()
    }
}

/// Lower a resolved, validated AST to BNF. Only terminals that are referenced
/// by some rule or by `%ignore` reach the lexer.
pub fn lower_to_bnf(ast: &GrammarAst) -> Bnf {
    let mut reserved: HashSet<String> = ast.rules.keys().cloned().collect();
    reserved.extend(ast.terminals.keys().cloned());
    let mut lw = Lowerer {
        ast,
        bnf: Bnf {
            terminals: Vec::new(),
            nonterminals: Vec::new(),
            productions: Vec::new(),
            ignored: Vec::new(),
        },
        rule_ids: HashMap::new(),
        terminal_ids: HashMap::new(),
        literal_ids: HashMap::new(),
        regex_ids: HashMap::new(),
        synthetic_ids: HashMap::new(),
        reserved,
        counter: 0,
    };

    // `start` first, then the remaining rules in definition order.
    let order: Vec<&String> = std::iter::once("start")
        .filter(|s| ast.rules.contains_key(*s))
        .map(|s| ast.rules.get_key_value(s).unwrap().0)
        .chain(ast.rules.keys().filter(|k| k.as_str() != "start"))
        .collect();
    for name in &order {
        let id = lw.new_nonterminal((*name).clone(), false);
        lw.rule_ids.insert((*name).clone(), id);
    }
    for name in order {
        let lhs = lw.rule_ids[name];
        for alt in &ast.rules[name].body.alternatives {
            let rhs = lw.sequence(&alt.items);
            lw.push(lhs, rhs, alt.alias.clone());
        }
    }
    for ig in &ast.ignores {
        let id = match ig {
            IgnoreItem::Terminal { name, .. } => lw.user_terminal(name),
            IgnoreItem::Literal(s) => lw.literal_terminal(s),
        };
        if !lw.bnf.ignored.contains(&id) {
            lw.bnf.ignored.push(id);
        }
    }
    lw.bnf
}

//! Shift/reduce driver and parse trees.

use std::fmt::Write as _;

use serde::Serialize;

use super::error::EngineError;
use super::lalr::Action;
use super::lexer::{Lexer, Token};
use super::CompiledGrammar;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(untagged)]
pub enum ParseNode {
    Tree(ParseTree),
    Token(Token),
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ParseTree {
    /// Alias when the alternative has one, rule name otherwise.
    pub label: String,
    pub children: Vec<ParseNode>,
}

impl ParseTree {
    /// Indented rendering, one node per line; a node whose only child is a
    /// token is printed on one line.
    pub fn pretty(&self) -> String {
        let mut out = String::new();
        self.pretty_into(0, &mut out);
        out
    }

    fn pretty_into(&self, depth: usize, out: &mut String) {
        let indent = "  ".repeat(depth);
        if let [ParseNode::Token(t)] = self.children.as_slice() {
            let _ = writeln!(out, "{indent}{}\t{}", self.label, t.lexeme);
            return;
        }
        let _ = writeln!(out, "{indent}{}", self.label);
        for c in &self.children {
            match c {
                ParseNode::Tree(t) => t.pretty_into(depth + 1, out),
                ParseNode::Token(t) => {
                    let _ = writeln!(out, "{indent}  {}", t.lexeme);
                }
            }
        }
    }

    /// Number of nodes labelled `label` anywhere in the tree.
    pub fn count(&self, label: &str) -> usize {
        let own = usize::from(self.label == label);
        own + self
            .children
            .iter()
            .map(|c| match c {
                ParseNode::Tree(t) => t.count(label),
                ParseNode::Token(_) => 0,
            })
            .sum::<usize>()
    }
}

enum Frame {
    Node(ParseNode),
    /// Children of a synthetic rule, spliced into the parent on reduction.
    Inline(Vec<ParseNode>),
}

pub(crate) fn run(g: &CompiledGrammar, input: &str) -> Result<ParseTree, EngineError> {
    let tables = &g.tables;
    let bnf = &g.bnf;
    let mut lexer = Lexer::new(&g.lexer, input);
    let mut states: Vec<usize> = vec![0];
    let mut frames: Vec<Frame> = Vec::new();

    let mut lookahead = lexer.next_token().transpose()?;
    loop {
        let state = *states.last().expect("state stack never empties");
        let column = match &lookahead {
            Some(t) => t.table_column,
            None => Some(tables.end_column),
        };
        let act = column.map_or(Action::Error, |c| tables.action[state][c]);
        match act {
            Action::Shift(next) => {
                let tok = lookahead.take().expect("shift needs a token");
                frames.push(Frame::Node(ParseNode::Token(tok)));
                states.push(next);
                lookahead = lexer.next_token().transpose()?;
            }
            Action::Reduce(p) => {
                let prod = &bnf.productions[p];
                let n = prod.rhs.len();
                let popped = frames.split_off(frames.len() - n);
                states.truncate(states.len() - n);
                let mut children = Vec::new();
                for (frame, keep) in popped.into_iter().zip(&prod.keep) {
                    match frame {
                        Frame::Node(node) if *keep => children.push(node),
                        Frame::Node(_) => {}
                        Frame::Inline(nodes) => children.extend(nodes),
                    }
                }
                let lhs = &bnf.nonterminals[prod.lhs];
                frames.push(if lhs.synthetic {
                    Frame::Inline(children)
                } else {
                    Frame::Node(ParseNode::Tree(ParseTree {
                        label: prod.alias.clone().unwrap_or_else(|| lhs.name.clone()),
                        children,
                    }))
                });
                let top = *states.last().expect("state stack never empties");
                let next = tables.goto[top][prod.lhs].expect("goto defined after reduce");
                states.push(next);
            }
            Action::Accept => {
                return match frames.pop() {
                    Some(Frame::Node(ParseNode::Tree(t))) => Ok(t),
                    _ => unreachable!("accept follows reduction to start"),
                };
            }
            Action::Error => {
                let mut expected: Vec<String> = tables.action[state]
                    .iter()
                    .enumerate()
                    .filter(|(_, a)| **a != Action::Error)
                    .map(|(c, _)| {
                        if c == tables.end_column {
                            "$END".to_string()
                        } else {
                            bnf.terminals[c].name.clone()
                        }
                    })
                    .collect();
                expected.sort();
                return Err(match lookahead {
                    Some(t) => EngineError::UnexpectedToken {
                        lexeme: t.lexeme.clone(),
                        terminal: t.terminal.clone(),
                        pos: t.pos(),
                        expected,
                    },
                    None => EngineError::UnexpectedToken {
                        lexeme: String::new(),
                        terminal: "$END".to_string(),
                        pos: lexer.pos(),
                        expected,
                    },
                });
            }
        }
    }
}

//! Import splicing and reference checks.

use super::ast::*;
use super::error::EngineError;

/// Terminals available through `%import common.NAME`.
pub const BUILTINS: [(&str, &str); 10] = [
    ("DIGIT", r"[0-9]"),
    ("LETTER", r"[a-zA-Z]"),
    ("INT", r"[0-9]+"),
    ("FLOAT", r"[0-9]+\.[0-9]+([eE][+-]?[0-9]+)?"),
    ("NUMBER", r"([0-9]+\.[0-9]+([eE][+-]?[0-9]+)?)|([0-9]+)"),
    (
        "SIGNED_NUMBER",
        r"[+-]?(([0-9]+\.[0-9]+([eE][+-]?[0-9]+)?)|([0-9]+))",
    ),
    ("CNAME", r"[a-zA-Z_][a-zA-Z0-9_]*"),
    ("ESCAPED_STRING", r#""(\\.|[^"\\])*""#),
    ("WS", r"[ \t\r\n]+"),
    ("NEWLINE", r"(\r?\n)+"),
];

pub fn builtin_pattern(name: &str) -> Option<&'static str> {
    BUILTINS.iter().find(|(n, _)| *n == name).map(|(_, p)| *p)
}

/// Splice builtin terminals for every `%import`. User definitions shadow
/// builtins of the same name. Terminals are kept in source order, with an
/// imported terminal placed where its `%import` line appears.
pub fn resolve_imports(mut ast: GrammarAst) -> Result<GrammarAst, EngineError> {
    for import in &ast.imports {
        if ast.terminals.contains_key(&import.name) {
            continue;
        }
        let pattern = builtin_pattern(&import.name).ok_or_else(|| EngineError::UnknownImport {
            name: format!("common.{}", import.name),
            pos: import.pos,
        })?;
        ast.terminals.insert(
            import.name.clone(),
            TerminalDef {
                body: TerminalBody::Regex(pattern.to_string()),
                pos: import.pos,
            },
        );
    }
    ast.terminals.sort_by(|_, a, _, b| a.pos.cmp(&b.pos));
    Ok(ast)
}

fn collect_refs<'a>(alt: &'a Alternation, out: &mut Vec<(Pos, &'a str, bool)>) {
    for a in &alt.alternatives {
        for item in &a.items {
            match &item.atom {
                Atom::Rule { name, pos } => out.push((*pos, name, true)),
                Atom::Terminal { name, pos } => out.push((*pos, name, false)),
                Atom::Group(g) => collect_refs(g, out),
                Atom::Literal(_) | Atom::Regex { .. } => {}
            }
        }
    }
}

/// Every referenced rule and terminal must be defined, and `start` must exist.
/// The first undefined reference in source order is reported.
pub fn validate_references(ast: &GrammarAst) -> Result<(), EngineError> {
    let mut refs = Vec::new();
    for rule in ast.rules.values() {
        collect_refs(&rule.body, &mut refs);
    }
    for ig in &ast.ignores {
        if let IgnoreItem::Terminal { name, pos } = ig {
            refs.push((*pos, name, false));
        }
    }
    refs.sort_by_key(|(pos, _, _)| *pos);
    for (pos, name, is_rule) in refs {
        let defined = if is_rule {
            ast.rules.contains_key(name)
        } else {
            ast.terminals.contains_key(name)
        };
        if !defined {
            return Err(EngineError::UndefinedSymbol {
                name: name.to_string(),
                pos,
            });
        }
    }
    if !ast.rules.contains_key("start") {
        return Err(EngineError::MissingStartRule);
    }
    Ok(())
}

//! Reader for the grammar notation produced by the model.
//!
//! Definitions are `name: body`; lowercase names are rules and uppercase names
//! are terminals. A new definition starts only on a line whose first tokens
//! are a name followed by `:` (optionally prefixed by `?` or `!`), so bodies
//! may continue over several lines. `//` starts a comment.

use indexmap::IndexMap;

use super::ast::*;
use super::error::EngineError;

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Name(String),
    Str(String),
    /// Regex literal with inline flags already applied.
    Regex(String),
    Directive(String),
    Colon,
    Pipe,
    Arrow,
    LParen,
    RParen,
    LBracket,
    RBracket,
    Question,
    Bang,
    Star,
    Plus,
    Dot,
    Comma,
    Newline,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Name(n) => format!("name '{n}'"),
            Tok::Str(s) => format!("string {s:?}"),
            Tok::Regex(r) => format!("regex /{r}/"),
            Tok::Directive(d) => format!("directive '%{d}'"),
            Tok::Colon => "':'".into(),
            Tok::Pipe => "'|'".into(),
            Tok::Arrow => "'->'".into(),
            Tok::LParen => "'('".into(),
            Tok::RParen => "')'".into(),
            Tok::LBracket => "'['".into(),
            Tok::RBracket => "']'".into(),
            Tok::Question => "'?'".into(),
            Tok::Bang => "'!'".into(),
            Tok::Star => "'*'".into(),
            Tok::Plus => "'+'".into(),
            Tok::Dot => "'.'".into(),
            Tok::Comma => "','".into(),
            Tok::Newline => "end of line".into(),
        }
    }
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    pos: Pos,
}

fn lex(text: &str) -> Result<Vec<Spanned>, EngineError> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    let mut line = 1;
    let mut col = 1;

    macro_rules! push {
        ($tok:expr, $pos:expr) => {
            out.push(Spanned {
                tok: $tok,
                pos: $pos,
            })
        };
    }

    while i < chars.len() {
        let c = chars[i];
        let pos = Pos { line, column: col };
        match c {
            '\n' => {
                push!(Tok::Newline, pos);
                i += 1;
                line += 1;
                col = 1;
                continue;
            }
            ' ' | '\t' | '\r' => {}
            '/' if chars.get(i + 1) == Some(&'/') => {
                while i < chars.len() && chars[i] != '\n' {
                    i += 1;
                    col += 1;
                }
                continue;
            }
            '/' => {
                let start = i;
                i += 1;
                let mut pat = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(EngineError::syntax("unterminated regex", pos));
                        }
                        Some('\\') if chars.get(i + 1) == Some(&'/') => {
                            pat.push('/');
                            i += 2;
                        }
                        Some('\\') => {
                            pat.push('\\');
                            if let Some(&n) = chars.get(i + 1) {
                                if n == '\n' {
                                    return Err(EngineError::syntax("unterminated regex", pos));
                                }
                                pat.push(n);
                            }
                            i += 2;
                        }
                        Some('/') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            pat.push(ch);
                            i += 1;
                        }
                    }
                }
                let mut flags = String::new();
                while let Some(&f) = chars.get(i) {
                    if !f.is_ascii_alphabetic() {
                        break;
                    }
                    if !"imsx".contains(f) {
                        let fpos = Pos {
                            line,
                            column: col + (i - start),
                        };
                        return Err(EngineError::syntax(
                            format!("unsupported regex flag '{f}'"),
                            fpos,
                        ));
                    }
                    flags.push(f);
                    i += 1;
                }
                if pat.is_empty() {
                    return Err(EngineError::syntax("empty regex", pos));
                }
                let pat = if flags.is_empty() {
                    pat
                } else {
                    format!("(?{flags}){pat}")
                };
                col += i - start;
                push!(Tok::Regex(pat), pos);
                continue;
            }
            '"' => {
                let start = i;
                i += 1;
                let mut s = String::new();
                loop {
                    match chars.get(i) {
                        None | Some('\n') => {
                            return Err(EngineError::syntax("unterminated string", pos));
                        }
                        Some('\\') => {
                            match chars.get(i + 1) {
                                Some('n') => s.push('\n'),
                                Some('t') => s.push('\t'),
                                Some('r') => s.push('\r'),
                                Some('"') => s.push('"'),
                                Some('\\') => s.push('\\'),
                                Some(&o) if o != '\n' => {
                                    s.push('\\');
                                    s.push(o);
                                }
                                _ => return Err(EngineError::syntax("unterminated string", pos)),
                            }
                            i += 2;
                        }
                        Some('"') => {
                            i += 1;
                            break;
                        }
                        Some(&ch) => {
                            s.push(ch);
                            i += 1;
                        }
                    }
                }
                if s.is_empty() {
                    return Err(EngineError::syntax("empty string literal", pos));
                }
                // `"kw"i` is a case-insensitive literal; it becomes a regex.
                let tok = if chars.get(i) == Some(&'i')
                    && !chars
                        .get(i + 1)
                        .is_some_and(|c| c.is_alphanumeric() || *c == '_')
                {
                    i += 1;
                    Tok::Regex(format!("(?i){}", regex::escape(&s)))
                } else {
                    Tok::Str(s)
                };
                col += i - start;
                push!(tok, pos);
                continue;
            }
            '%' => {
                let start = i;
                i += 1;
                let mut word = String::new();
                while let Some(&ch) = chars.get(i) {
                    if !(ch.is_ascii_alphanumeric() || ch == '_') {
                        break;
                    }
                    word.push(ch);
                    i += 1;
                }
                if word.is_empty() {
                    return Err(EngineError::syntax("expected a directive after '%'", pos));
                }
                col += i - start;
                push!(Tok::Directive(word), pos);
                continue;
            }
            '-' if chars.get(i + 1) == Some(&'>') => {
                push!(Tok::Arrow, pos);
                i += 2;
                col += 2;
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                let start = i;
                let mut word = String::new();
                while let Some(&ch) = chars.get(i) {
                    if !(ch.is_ascii_alphanumeric() || ch == '_') {
                        break;
                    }
                    word.push(ch);
                    i += 1;
                }
                col += i - start;
                push!(Tok::Name(word), pos);
                continue;
            }
            ':' => push!(Tok::Colon, pos),
            '|' => push!(Tok::Pipe, pos),
            '(' => push!(Tok::LParen, pos),
            ')' => push!(Tok::RParen, pos),
            '[' => push!(Tok::LBracket, pos),
            ']' => push!(Tok::RBracket, pos),
            '?' => push!(Tok::Question, pos),
            '!' => push!(Tok::Bang, pos),
            '*' => push!(Tok::Star, pos),
            '+' => push!(Tok::Plus, pos),
            '.' => push!(Tok::Dot, pos),
            ',' => push!(Tok::Comma, pos),
            other => {
                return Err(EngineError::syntax(
                    format!("unexpected character '{other}'"),
                    pos,
                ));
            }
        }
        i += 1;
        col += 1;
    }
    out.push(Spanned {
        tok: Tok::Newline,
        pos: Pos { line, column: col },
    });
    Ok(out)
}

/// One top-level statement: its head tokens and the body tokens up to the
/// next statement (newlines removed).
enum Statement {
    Definition {
        name: String,
        pos: Pos,
        body: Vec<Spanned>,
        colon_pos: Pos,
    },
    Directive {
        word: String,
        pos: Pos,
        args: Vec<Spanned>,
    },
}

fn split_statements(toks: Vec<Spanned>) -> Result<Vec<Statement>, EngineError> {
    let mut stmts: Vec<Statement> = Vec::new();
    let mut i = 0;
    let mut at_line_start = true;
    // Directive arguments end at the end of their line.
    let mut directive_open = false;
    while i < toks.len() {
        let t = &toks[i];
        if t.tok == Tok::Newline {
            at_line_start = true;
            directive_open = false;
            i += 1;
            continue;
        }
        if at_line_start {
            at_line_start = false;
            let prefixed = matches!(t.tok, Tok::Question | Tok::Bang);
            let off = usize::from(prefixed);
            if let (
                Some(Spanned {
                    tok: Tok::Name(n),
                    pos,
                }),
                Some(Spanned {
                    tok: Tok::Colon,
                    pos: cpos,
                }),
            ) = (toks.get(i + off), toks.get(i + off + 1))
            {
                stmts.push(Statement::Definition {
                    name: n.clone(),
                    pos: *pos,
                    body: Vec::new(),
                    colon_pos: *cpos,
                });
                i += off + 2;
                continue;
            }
            if let Tok::Directive(w) = &t.tok {
                stmts.push(Statement::Directive {
                    word: w.clone(),
                    pos: t.pos,
                    args: Vec::new(),
                });
                directive_open = true;
                i += 1;
                continue;
            }
        }
        match stmts.last_mut() {
            Some(Statement::Definition { body, .. }) => body.push(t.clone()),
            Some(Statement::Directive { args, .. }) if directive_open => args.push(t.clone()),
            _ => {
                return Err(EngineError::syntax(
                    format!(
                        "expected a definition 'name: ...', found {}",
                        t.tok.describe()
                    ),
                    t.pos,
                ));
            }
        }
        i += 1;
    }
    Ok(stmts)
}

struct BodyParser<'a> {
    toks: &'a [Spanned],
    i: usize,
    end: Pos,
}

impl<'a> BodyParser<'a> {
    fn peek(&self) -> Option<&'a Spanned> {
        self.toks.get(self.i)
    }

    fn err_here(&self, what: &str) -> EngineError {
        match self.peek() {
            Some(t) => EngineError::syntax(
                format!("expected {what}, found {}", t.tok.describe()),
                t.pos,
            ),
            None => EngineError::syntax(
                format!("expected {what}, found end of definition"),
                self.end,
            ),
        }
    }

    fn alternation(&mut self, top: bool) -> Result<Alternation, EngineError> {
        let mut alternatives = vec![self.sequence(top)?];
        while matches!(self.peek(), Some(Spanned { tok: Tok::Pipe, .. })) {
            self.i += 1;
            alternatives.push(self.sequence(top)?);
        }
        Ok(Alternation { alternatives })
    }

    fn sequence(&mut self, top: bool) -> Result<Alternative, EngineError> {
        let mut items = Vec::new();
        while let Some(item) = self.item()? {
            items.push(item);
        }
        if items.is_empty() {
            return Err(self.err_here("a symbol, string, regex or group"));
        }
        let mut alias = None;
        if let Some(Spanned {
            tok: Tok::Arrow,
            pos,
        }) = self.peek()
        {
            if !top {
                return Err(EngineError::syntax(
                    "aliases are only allowed on top-level alternatives",
                    *pos,
                ));
            }
            self.i += 1;
            match self.peek() {
                Some(Spanned {
                    tok: Tok::Name(n), ..
                }) if is_rule_name(n) => {
                    alias = Some(n.clone());
                    self.i += 1;
                }
                _ => return Err(self.err_here("a lowercase alias name after '->'")),
            }
        }
        Ok(Alternative { items, alias })
    }

    fn item(&mut self) -> Result<Option<Item>, EngineError> {
        let Some(t) = self.peek() else {
            return Ok(None);
        };
        let atom = match &t.tok {
            Tok::Name(n) => {
                self.i += 1;
                if is_rule_name(n) {
                    Atom::Rule {
                        name: n.clone(),
                        pos: t.pos,
                    }
                } else if is_terminal_name(n) {
                    Atom::Terminal {
                        name: n.clone(),
                        pos: t.pos,
                    }
                } else {
                    return Err(EngineError::syntax(
                        format!("'{n}' is neither a rule name (lowercase) nor a terminal name (uppercase)"),
                        t.pos,
                    ));
                }
            }
            Tok::Str(s) => {
                self.i += 1;
                Atom::Literal(s.clone())
            }
            Tok::Regex(r) => {
                self.i += 1;
                Atom::Regex {
                    pattern: r.clone(),
                    pos: t.pos,
                }
            }
            Tok::LParen | Tok::LBracket => {
                let close = if t.tok == Tok::LParen {
                    Tok::RParen
                } else {
                    Tok::RBracket
                };
                self.i += 1;
                let inner = self.alternation(false)?;
                match self.peek() {
                    Some(c) if c.tok == close => self.i += 1,
                    _ => return Err(self.err_here(&close.describe())),
                }
                if close == Tok::RBracket {
                    return Ok(Some(Item {
                        atom: Atom::Group(inner),
                        quantifier: Quantifier::Optional,
                    }));
                }
                Atom::Group(inner)
            }
            _ => return Ok(None),
        };
        let quantifier = match self.peek().map(|t| &t.tok) {
            Some(Tok::Question) => Quantifier::Optional,
            Some(Tok::Star) => Quantifier::Star,
            Some(Tok::Plus) => Quantifier::Plus,
            _ => Quantifier::One,
        };
        if quantifier != Quantifier::One {
            self.i += 1;
        }
        Ok(Some(Item { atom, quantifier }))
    }
}

fn parse_terminal_body(toks: &[Spanned], colon: Pos) -> Result<TerminalBody, EngineError> {
    let bad = |pos: Pos| {
        EngineError::syntax(
            "terminal bodies must be a single regex, a single string, or an alternation of strings",
            pos,
        )
    };
    match toks {
        [] => Err(EngineError::syntax("empty terminal body", colon)),
        [Spanned {
            tok: Tok::Regex(r), ..
        }] => Ok(TerminalBody::Regex(r.clone())),
        [Spanned {
            tok: Tok::Str(s), ..
        }] => Ok(TerminalBody::Literal(s.clone())),
        _ => {
            let mut lits = Vec::new();
            for (k, t) in toks.iter().enumerate() {
                match (&t.tok, k % 2) {
                    (Tok::Str(s), 0) => lits.push(s.clone()),
                    (Tok::Pipe, 1) if k + 1 < toks.len() => {}
                    _ => return Err(bad(t.pos)),
                }
            }
            Ok(TerminalBody::Literals(lits))
        }
    }
}

fn parse_import(args: &[Spanned], pos: Pos) -> Result<Vec<Import>, EngineError> {
    let malformed = |p: Pos| {
        EngineError::syntax(
            "expected '%import common.NAME' or '%import common (A, B)'",
            p,
        )
    };
    let Some(Spanned {
        tok: Tok::Name(module),
        pos: mpos,
    }) = args.first()
    else {
        return Err(malformed(pos));
    };
    let names: Vec<(String, Pos)> = match args.get(1).map(|t| &t.tok) {
        Some(Tok::Dot) => match args.get(2..) {
            Some(
                [Spanned {
                    tok: Tok::Name(n),
                    pos,
                }],
            ) => vec![(n.clone(), *pos)],
            _ => return Err(malformed(args.get(2).map(|t| t.pos).unwrap_or(*mpos))),
        },
        Some(Tok::LParen) => {
            let mut names = Vec::new();
            let mut k = 2;
            loop {
                match args.get(k) {
                    Some(Spanned {
                        tok: Tok::Name(n),
                        pos,
                    }) => names.push((n.clone(), *pos)),
                    Some(t) => return Err(malformed(t.pos)),
                    None => return Err(malformed(*mpos)),
                }
                match args.get(k + 1).map(|t| &t.tok) {
                    Some(Tok::Comma) => k += 2,
                    Some(Tok::RParen) if k + 2 == args.len() => break,
                    _ => return Err(malformed(args.get(k + 1).map(|t| t.pos).unwrap_or(*mpos))),
                }
            }
            names
        }
        _ => return Err(malformed(args.get(1).map(|t| t.pos).unwrap_or(*mpos))),
    };
    if module != "common" {
        let (n, p) = &names[0];
        return Err(EngineError::UnknownImport {
            name: format!("{module}.{n}"),
            pos: *p,
        });
    }
    Ok(names
        .into_iter()
        .map(|(name, pos)| Import { name, pos })
        .collect())
}

/// Parse grammar notation into an AST. Imports are recorded but not resolved.
pub fn parse_notation(text: &str) -> Result<GrammarAst, EngineError> {
    let toks = lex(text)?;
    let stmts = split_statements(toks)?;

    let mut ast = GrammarAst {
        rules: IndexMap::new(),
        terminals: IndexMap::new(),
        ignores: Vec::new(),
        imports: Vec::new(),
    };

    for stmt in stmts {
        match stmt {
            Statement::Definition {
                name,
                pos,
                body,
                colon_pos,
            } => {
                if ast.rules.contains_key(&name) || ast.terminals.contains_key(&name) {
                    return Err(EngineError::syntax(
                        format!("'{name}' is defined more than once"),
                        pos,
                    ));
                }
                let end = body.last().map(|t| t.pos).unwrap_or(colon_pos);
                if is_rule_name(&name) {
                    if body.is_empty() {
                        return Err(EngineError::syntax(
                            format!("rule '{name}' has an empty body"),
                            colon_pos,
                        ));
                    }
                    let mut p = BodyParser {
                        toks: &body,
                        i: 0,
                        end,
                    };
                    let alt = p.alternation(true)?;
                    if p.i < body.len() {
                        return Err(p.err_here("'|', an atom or end of rule"));
                    }
                    ast.rules.insert(name, RuleDef { body: alt, pos });
                } else if is_terminal_name(&name) {
                    let body = parse_terminal_body(&body, colon_pos)?;
                    ast.terminals.insert(name, TerminalDef { body, pos });
                } else {
                    return Err(EngineError::syntax(
                        format!("'{name}' is neither a rule name (lowercase) nor a terminal name (uppercase)"),
                        pos,
                    ));
                }
            }
            Statement::Directive { word, pos, args } => match word.as_str() {
                "import" => ast.imports.extend(parse_import(&args, pos)?),
                "ignore" => match args.as_slice() {
                    [Spanned {
                        tok: Tok::Name(n),
                        pos,
                    }] if is_terminal_name(n) => ast.ignores.push(IgnoreItem::Terminal {
                        name: n.clone(),
                        pos: *pos,
                    }),
                    [Spanned {
                        tok: Tok::Str(s), ..
                    }] => ast.ignores.push(IgnoreItem::Literal(s.clone())),
                    _ => {
                        return Err(EngineError::syntax(
                            "expected '%ignore TERMINAL' or '%ignore \"literal\"'",
                            args.first().map(|t| t.pos).unwrap_or(pos),
                        ))
                    }
                },
                other => {
                    return Err(EngineError::syntax(
                        format!("unsupported directive '%{other}'"),
                        pos,
                    ));
                }
            },
        }
    }
    Ok(ast)
}

//! Parser for annotated clause files.
//!
//! ```text
//! clause   := goal [":-" body] ["#" goal ("," goal)*] "."
//! body     := goal ("," goal)* [","]
//! goal     := symbol ["(" term ("," term)* ")"]
//! term     := Variable | constant | "quoted"
//! ```
//!
//! `%` starts a comment that runs to the end of the line. A body consisting of
//! `true` is empty.

use std::collections::HashMap;

use super::program::{Clause, Program};
use super::term::{Goal, Term, VarId};
use crate::error::{Error, Result};
use crate::symbol::Sym;

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Ident(String),
    Var(String),
    Quoted(String),
    LParen,
    RParen,
    Comma,
    Neck,
    Hash,
    Period,
    Eof,
}

impl Tok {
    fn describe(&self) -> String {
        match self {
            Tok::Ident(s) | Tok::Var(s) => format!("`{s}`"),
            Tok::Quoted(s) => format!("\"{s}\""),
            Tok::LParen => "`(`".into(),
            Tok::RParen => "`)`".into(),
            Tok::Comma => "`,`".into(),
            Tok::Neck => "`:-`".into(),
            Tok::Hash => "`#`".into(),
            Tok::Period => "`.`".into(),
            Tok::Eof => "end of input".into(),
        }
    }
}

#[derive(Clone, Debug)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

fn is_ident_char(c: char) -> bool {
    c.is_alphanumeric() || c == '_' || c == '\''
}

fn lex(text: &str) -> Result<Vec<Spanned>> {
    let mut out = Vec::new();
    let mut chars = text.chars().peekable();
    let (mut line, mut column) = (1usize, 1usize);

    macro_rules! bump {
        () => {{
            let c = chars.next();
            if c == Some('\n') {
                line += 1;
                column = 1;
            } else if c.is_some() {
                column += 1;
            }
            c
        }};
    }

    while let Some(&c) = chars.peek() {
        let (tl, tc) = (line, column);
        let tok = match c {
            c if c.is_whitespace() => {
                bump!();
                continue;
            }
            '%' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    bump!();
                }
                continue;
            }
            '(' => {
                bump!();
                Tok::LParen
            }
            ')' => {
                bump!();
                Tok::RParen
            }
            ',' => {
                bump!();
                Tok::Comma
            }
            '#' => {
                bump!();
                Tok::Hash
            }
            '.' => {
                bump!();
                Tok::Period
            }
            ':' => {
                bump!();
                if chars.peek() == Some(&'-') {
                    bump!();
                    Tok::Neck
                } else {
                    return Err(syntax(tl, tc, "expected `:-`"));
                }
            }
            '"' | '\'' => {
                let quote = c;
                bump!();
                let mut s = String::new();
                loop {
                    match bump!() {
                        None => return Err(syntax(tl, tc, "unterminated quoted constant")),
                        Some(c) if c == quote => break,
                        Some('\\') => match bump!() {
                            Some('n') => s.push('\n'),
                            Some('t') => s.push('\t'),
                            Some(c) => s.push(c),
                            None => return Err(syntax(tl, tc, "unterminated quoted constant")),
                        },
                        Some(c) => s.push(c),
                    }
                }
                Tok::Quoted(s)
            }
            c if c.is_alphanumeric() || c == '_' => {
                let mut s = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_ident_char(c) {
                        break;
                    }
                    s.push(c);
                    bump!();
                }
                if c.is_uppercase() || c == '_' {
                    Tok::Var(s)
                } else {
                    Tok::Ident(s)
                }
            }
            other => return Err(syntax(tl, tc, &format!("unexpected character `{other}`"))),
        };
        out.push(Spanned {
            tok,
            line: tl,
            column: tc,
        });
    }
    out.push(Spanned {
        tok: Tok::Eof,
        line,
        column,
    });
    Ok(out)
}

fn syntax(line: usize, column: usize, message: &str) -> Error {
    Error::Syntax {
        line,
        column,
        message: message.to_owned(),
    }
}

#[derive(Default)]
struct VarScope {
    ids: HashMap<String, VarId>,
    names: Vec<Sym>,
}

impl VarScope {
    fn var(&mut self, name: &str) -> VarId {
        if name == "_" {
            let id = VarId(self.names.len() as u32);
            self.names.push(Sym::intern(&format!("_{}", id.0)));
            return id;
        }
        if let Some(&id) = self.ids.get(name) {
            return id;
        }
        let id = VarId(self.names.len() as u32);
        self.ids.insert(name.to_owned(), id);
        self.names.push(Sym::intern(name));
        id
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
}

impl Parser {
    fn peek(&self) -> &Spanned {
        &self.toks[self.pos]
    }

    fn next(&mut self) -> Spanned {
        let t = self.toks[self.pos].clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error_here(&self, expected: &str) -> Error {
        let t = self.peek();
        syntax(
            t.line,
            t.column,
            &format!("expected {expected}, found {}", t.tok.describe()),
        )
    }

    fn expect(&mut self, tok: Tok, expected: &str) -> Result<()> {
        if self.peek().tok == tok {
            self.next();
            Ok(())
        } else {
            Err(self.error_here(expected))
        }
    }

    fn goal(&mut self, scope: &mut VarScope) -> Result<Goal> {
        let functor = match self.next().tok {
            Tok::Ident(s) | Tok::Quoted(s) => Sym::intern(&s),
            _ => {
                self.pos -= 1;
                return Err(self.error_here("a predicate name"));
            }
        };
        let mut args = smallvec::SmallVec::new();
        if self.peek().tok == Tok::LParen {
            self.next();
            loop {
                let term = match self.next().tok {
                    Tok::Var(name) => Term::Var(scope.var(&name)),
                    Tok::Ident(s) | Tok::Quoted(s) => Term::Const(Sym::intern(&s)),
                    _ => {
                        self.pos -= 1;
                        return Err(self.error_here("a term"));
                    }
                };
                args.push(term);
                match self.next().tok {
                    Tok::Comma => continue,
                    Tok::RParen => break,
                    _ => {
                        self.pos -= 1;
                        return Err(self.error_here("`,` or `)`"));
                    }
                }
            }
        }
        Ok(Goal { functor, args })
    }

    fn at_goal_start(&self) -> bool {
        matches!(self.peek().tok, Tok::Ident(_) | Tok::Quoted(_))
    }

    fn clause(&mut self) -> Result<Clause> {
        let start = self.peek().line;
        let mut scope = VarScope::default();
        let head = self.goal(&mut scope)?;
        let mut body = Vec::new();
        let mut features = Vec::new();
        if self.peek().tok == Tok::Neck {
            self.next();
            // an empty body is allowed before the annotation or the period
            while self.at_goal_start() {
                let g = self.goal(&mut scope)?;
                if !(g.functor.as_str() == "true" && g.args.is_empty()) {
                    body.push(g);
                }
                if self.peek().tok != Tok::Comma {
                    break;
                }
                self.next();
                // a trailing comma may precede the annotation
                if !self.at_goal_start() {
                    break;
                }
            }
        }
        if self.peek().tok == Tok::Hash {
            self.next();
            loop {
                features.push(self.goal(&mut scope)?);
                if self.peek().tok != Tok::Comma {
                    break;
                }
                self.next();
            }
        }
        let expected = if features.is_empty() && body.is_empty() {
            "`:-`, `#` or `.`"
        } else if features.is_empty() {
            "`,`, `#` or `.`"
        } else {
            "`,` or `.`"
        };
        self.expect(Tok::Period, expected)?;

        let head_vars: Vec<VarId> = head.vars().collect();
        for f in &features {
            if let Some(v) = f.vars().find(|v| !head_vars.contains(v)) {
                return Err(Error::UnboundFeatureVariable {
                    line: start,
                    feature: f.display_with(&scope.names).to_string(),
                    variable: scope.names[v.0 as usize].to_string(),
                });
            }
        }
        Ok(Clause {
            head,
            body,
            features,
            var_names: scope.names,
        })
    }
}

/// Parses a rules file into a program, preserving clause order.
pub fn parse_program(text: &str) -> Result<Program> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut clauses = Vec::new();
    while p.peek().tok != Tok::Eof {
        clauses.push(p.clause()?);
    }
    Ok(Program::new(clauses))
}

/// Parses a single goal, e.g. a query. A trailing period is allowed.
pub fn parse_goal(text: &str) -> Result<(Goal, Vec<Sym>)> {
    let mut p = Parser {
        toks: lex(text)?,
        pos: 0,
    };
    let mut scope = VarScope::default();
    let g = p.goal(&mut scope)?;
    if p.peek().tok == Tok::Period {
        p.next();
    }
    if p.peek().tok != Tok::Eof {
        return Err(p.error_here("end of goal"));
    }
    Ok((g, scope.names))
}

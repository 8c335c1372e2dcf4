//! Tokenizer and s-expression reader for PDDL source.
//!
//! Identifiers are folded to lowercase here, and `;` comments are dropped,
//! so everything downstream works on canonical text.

use super::error::{Loc, PddlError, PddlErrorKind};

#[derive(Debug, Clone, PartialEq)]
pub enum SExpr {
    Atom(String, Loc),
    List(Vec<SExpr>, Loc),
}

impl SExpr {
    pub fn loc(&self) -> Loc {
        match self {
            SExpr::Atom(_, loc) | SExpr::List(_, loc) => *loc,
        }
    }

    pub fn as_atom(&self) -> Option<&str> {
        match self {
            SExpr::Atom(s, _) => Some(s),
            SExpr::List(..) => None,
        }
    }

    pub fn as_list(&self) -> Option<&[SExpr]> {
        match self {
            SExpr::List(items, _) => Some(items),
            SExpr::Atom(..) => None,
        }
    }

    /// Head symbol of a list, e.g. `and` in `(and ...)`.
    pub fn head(&self) -> Option<&str> {
        self.as_list()?.first()?.as_atom()
    }
}

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Open,
    Close,
    Symbol(String),
}

fn is_symbol_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || matches!(c, '-' | '_' | '?' | ':' | '=' | '.' | '<' | '>' | '+' | '*' | '/' | '!')
}

fn tokenize(src: &str) -> Result<Vec<(Token, Loc)>, PddlError> {
    let mut out = Vec::new();
    let mut chars = src.chars().peekable();
    let (mut line, mut col) = (1usize, 1usize);

    while let Some(&c) = chars.peek() {
        let loc = Loc { line, col };
        match c {
            '\n' => {
                chars.next();
                line += 1;
                col = 1;
            }
            c if c.is_whitespace() => {
                chars.next();
                col += 1;
            }
            ';' => {
                while let Some(&c) = chars.peek() {
                    if c == '\n' {
                        break;
                    }
                    chars.next();
                }
            }
            '(' => {
                chars.next();
                col += 1;
                out.push((Token::Open, loc));
            }
            ')' => {
                chars.next();
                col += 1;
                out.push((Token::Close, loc));
            }
            c if is_symbol_char(c) => {
                let mut sym = String::new();
                while let Some(&c) = chars.peek() {
                    if !is_symbol_char(c) {
                        break;
                    }
                    sym.push(c.to_ascii_lowercase());
                    chars.next();
                    col += 1;
                }
                out.push((Token::Symbol(sym), loc));
            }
            other => {
                return Err(PddlError::new(PddlErrorKind::Lexical(other), loc));
            }
        }
    }
    Ok(out)
}

/// Reads exactly one top-level s-expression (trailing whitespace/comments allowed).
pub fn read_one(src: &str) -> Result<SExpr, PddlError> {
    let tokens = tokenize(src)?;
    let mut pos = 0;
    let expr = read_expr(&tokens, &mut pos, src)?;
    if let Some((_, loc)) = tokens.get(pos) {
        return Err(PddlError::new(PddlErrorKind::Syntax("trailing input after top-level expression".into()), *loc));
    }
    Ok(expr)
}

fn end_loc(src: &str) -> Loc {
    let line = src.lines().count().max(1);
    let col = src.lines().last().map_or(1, |l| l.chars().count() + 1);
    Loc { line, col }
}

fn read_expr(tokens: &[(Token, Loc)], pos: &mut usize, src: &str) -> Result<SExpr, PddlError> {
    let Some((tok, loc)) = tokens.get(*pos) else {
        return Err(PddlError::new(PddlErrorKind::Syntax("unexpected end of input".into()), end_loc(src)));
    };
    *pos += 1;
    match tok {
        Token::Symbol(s) => Ok(SExpr::Atom(s.clone(), *loc)),
        Token::Close => Err(PddlError::new(PddlErrorKind::Syntax("unexpected ')'".into()), *loc)),
        Token::Open => {
            let mut items = Vec::new();
            loop {
                match tokens.get(*pos) {
                    None => {
                        return Err(PddlError::new(PddlErrorKind::Syntax("unbalanced '(' opened here".into()), *loc))
                    }
                    Some((Token::Close, _)) => {
                        *pos += 1;
                        return Ok(SExpr::List(items, *loc));
                    }
                    Some(_) => items.push(read_expr(tokens, pos, src)?),
                }
            }
        }
    }
}

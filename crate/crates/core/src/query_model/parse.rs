//! Tokenizer and statement parser shared by query, fact and Datalog files.

use std::fmt;
use std::sync::Arc;

use thiserror::Error;

use crate::ac_core::{parse_rat, Name, Op, Rat};

/// Syntax error with a 1-based source position.
#[derive(Debug, Error, Clone, PartialEq, Eq)]
#[error("{line}:{col}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub col: usize,
    pub message: String,
}

/// Term as written, possibly a functional term.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PTerm {
    Var(Name),
    Const(Rat),
    Func(Name, Vec<PTerm>),
}

/// Atom as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct PAtom {
    pub pred: Name,
    pub args: Vec<PTerm>,
}

/// Body element as written.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum PItem {
    Atom(PAtom),
    Cmp(PTerm, Op, PTerm),
}

/// One statement with the line it starts on.
#[derive(Clone, Debug, PartialEq, Eq)]
pub enum Statement {
    Rule { head: PAtom, body: Vec<PItem>, line: usize },
    Fact { atom: PAtom, line: usize },
    Directive { name: String, items: Vec<(Name, Option<usize>)>, line: usize },
}

#[derive(Clone, Debug, PartialEq)]
enum Tok {
    Upper(String),
    Lower(String),
    Num(Rat),
    LParen,
    RParen,
    Comma,
    Dot,
    Slash,
    Implies,
    At,
    Op(Op),
}

impl fmt::Display for Tok {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Tok::Upper(s) | Tok::Lower(s) => write!(f, "`{s}`"),
            Tok::Num(r) => write!(f, "`{r}`"),
            Tok::LParen => f.write_str("`(`"),
            Tok::RParen => f.write_str("`)`"),
            Tok::Comma => f.write_str("`,`"),
            Tok::Dot => f.write_str("`.`"),
            Tok::Slash => f.write_str("`/`"),
            Tok::Implies => f.write_str("`:-`"),
            Tok::At => f.write_str("`@`"),
            Tok::Op(op) => write!(f, "`{op}`"),
        }
    }
}

struct Lexer {
    chars: Vec<char>,
    pos: usize,
    line: usize,
    col: usize,
}

impl Lexer {
    fn new(src: &str) -> Lexer {
        Lexer { chars: src.chars().collect(), pos: 0, line: 1, col: 1 }
    }

    fn peek(&self, k: usize) -> Option<char> {
        self.chars.get(self.pos + k).copied()
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.get(self.pos).copied()?;
        self.pos += 1;
        if c == '\n' {
            self.line += 1;
            self.col = 1;
        } else {
            self.col += 1;
        }
        Some(c)
    }

    fn error(&self, line: usize, col: usize, message: impl Into<String>) -> ParseError {
        ParseError { line, col, message: message.into() }
    }

    fn tokens(mut self) -> Result<Vec<(Tok, usize, usize)>, ParseError> {
        let mut out = Vec::new();
        while let Some(c) = self.peek(0) {
            let (line, col) = (self.line, self.col);
            if c.is_whitespace() {
                self.bump();
                continue;
            }
            if c == '%' || c == '#' || (c == '/' && self.peek(1) == Some('/')) {
                while let Some(c) = self.peek(0) {
                    if c == '\n' {
                        break;
                    }
                    self.bump();
                }
                continue;
            }
            let tok = if c.is_ascii_alphabetic() || c == '_' {
                let mut s = String::new();
                while let Some(c) = self.peek(0) {
                    if c.is_ascii_alphanumeric() || c == '_' || c == '\'' {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                if s.starts_with(|c: char| c.is_ascii_uppercase()) {
                    Tok::Upper(s)
                } else {
                    Tok::Lower(s)
                }
            } else if c.is_ascii_digit() || (c == '-' && self.peek(1).is_some_and(|d| d.is_ascii_digit())) {
                let mut s = String::new();
                s.push(c);
                self.bump();
                while let Some(c) = self.peek(0) {
                    let next_digit = self.peek(1).is_some_and(|d| d.is_ascii_digit());
                    if c.is_ascii_digit() || ((c == '.' || c == '/') && next_digit) {
                        s.push(c);
                        self.bump();
                    } else {
                        break;
                    }
                }
                match parse_rat(&s) {
                    Some(r) => Tok::Num(r),
                    None => return Err(self.error(line, col, format!("bad number `{s}`"))),
                }
            } else {
                self.bump();
                match (c, self.peek(0)) {
                    ('(', _) => Tok::LParen,
                    (')', _) => Tok::RParen,
                    (',', _) => Tok::Comma,
                    ('.', _) => Tok::Dot,
                    ('/', _) => Tok::Slash,
                    ('@', _) => Tok::At,
                    (':', Some('-')) => {
                        self.bump();
                        Tok::Implies
                    }
                    ('<', Some('=')) | ('>', Some('=')) | ('!', Some('=')) | ('=', Some('<')) | ('=', Some('=')) | ('<', Some('>')) => {
                        let d = self.bump().unwrap();
                        Tok::Op(Op::parse(&format!("{c}{d}")).unwrap())
                    }
                    ('<', _) => Tok::Op(Op::Lt),
                    ('>', _) => Tok::Op(Op::Gt),
                    ('=', _) => Tok::Op(Op::Eq),
                    _ => return Err(self.error(line, col, format!("unexpected character `{c}`"))),
                }
            };
            out.push((tok, line, col));
        }
        Ok(out)
    }
}

struct Parser {
    toks: Vec<(Tok, usize, usize)>,
    pos: usize,
    end: (usize, usize),
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|t| &t.0)
    }

    fn peek2(&self) -> Option<&Tok> {
        self.toks.get(self.pos + 1).map(|t| &t.0)
    }

    fn here(&self) -> (usize, usize) {
        self.toks.get(self.pos).map(|t| (t.1, t.2)).unwrap_or(self.end)
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, col) = self.here();
        ParseError { line, col, message: message.into() }
    }

    fn unexpected(&self, wanted: &str) -> ParseError {
        match self.peek() {
            Some(t) => self.error(format!("expected {wanted}, found {t}")),
            None => self.error(format!("expected {wanted}, found end of input")),
        }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|t| t.0.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, wanted: &str) -> Result<(), ParseError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.unexpected(wanted))
        }
    }

    fn statement(&mut self) -> Result<Statement, ParseError> {
        let (line, _) = self.here();
        if self.peek() == Some(&Tok::At) {
            self.pos += 1;
            let name = match self.next() {
                Some(Tok::Lower(s)) => s,
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("directive name"));
                }
            };
            let mut items = Vec::new();
            while self.peek() != Some(&Tok::Dot) {
                if !items.is_empty() {
                    self.expect(Tok::Comma, "`,`")?;
                }
                let pred = match self.next() {
                    Some(Tok::Lower(s)) => Arc::from(s.as_str()),
                    _ => {
                        self.pos -= 1;
                        return Err(self.unexpected("predicate name"));
                    }
                };
                let arity = if self.peek() == Some(&Tok::Slash) {
                    self.pos += 1;
                    match self.next() {
                        Some(Tok::Num(r)) if r.is_integer() && *r.numer() >= 0 => Some(*r.numer() as usize),
                        _ => {
                            self.pos -= 1;
                            return Err(self.unexpected("arity"));
                        }
                    }
                } else {
                    None
                };
                items.push((pred, arity));
            }
            self.expect(Tok::Dot, "`.`")?;
            return Ok(Statement::Directive { name, items, line });
        }
        let head = self.atom()?;
        match self.peek() {
            Some(Tok::Dot) => {
                self.pos += 1;
                Ok(Statement::Fact { atom: head, line })
            }
            Some(Tok::Implies) => {
                self.pos += 1;
                let mut body = Vec::new();
                if self.peek() != Some(&Tok::Dot) {
                    loop {
                        body.push(self.item()?);
                        if self.peek() == Some(&Tok::Comma) {
                            self.pos += 1;
                        } else {
                            break;
                        }
                    }
                }
                self.expect(Tok::Dot, "`,` or `.`")?;
                Ok(Statement::Rule { head, body, line })
            }
            _ => Err(self.unexpected("`:-` or `.`")),
        }
    }

    fn atom(&mut self) -> Result<PAtom, ParseError> {
        let pred = match self.peek() {
            Some(Tok::Lower(s)) => Arc::from(s.as_str()),
            _ => return Err(self.unexpected("predicate name")),
        };
        self.pos += 1;
        let args = if self.peek() == Some(&Tok::LParen) { self.args()? } else { Vec::new() };
        Ok(PAtom { pred, args })
    }

    fn args(&mut self) -> Result<Vec<PTerm>, ParseError> {
        self.expect(Tok::LParen, "`(`")?;
        let mut args = Vec::new();
        if self.peek() == Some(&Tok::RParen) {
            self.pos += 1;
            return Ok(args);
        }
        loop {
            args.push(self.term()?);
            match self.next() {
                Some(Tok::Comma) => continue,
                Some(Tok::RParen) => break,
                _ => {
                    self.pos -= 1;
                    return Err(self.unexpected("`,` or `)`"));
                }
            }
        }
        Ok(args)
    }

    fn term(&mut self) -> Result<PTerm, ParseError> {
        match self.peek().cloned() {
            Some(Tok::Upper(s)) => {
                self.pos += 1;
                Ok(PTerm::Var(Arc::from(s.as_str())))
            }
            Some(Tok::Num(r)) => {
                self.pos += 1;
                Ok(PTerm::Const(r))
            }
            Some(Tok::Lower(s)) if self.peek2() == Some(&Tok::LParen) => {
                self.pos += 1;
                let args = self.args()?;
                Ok(PTerm::Func(Arc::from(s.as_str()), args))
            }
            _ => Err(self.unexpected("term")),
        }
    }

    fn item(&mut self) -> Result<PItem, ParseError> {
        let is_atom = match (self.peek(), self.peek2()) {
            (Some(Tok::Lower(_)), Some(Tok::LParen)) => {
                // `f(X) < 3` is a comparison over a functional term.
                let save = self.pos;
                let atom = self.atom()?;
                let cmp = matches!(self.peek(), Some(Tok::Op(_)));
                self.pos = save;
                !cmp || atom.args.is_empty()
            }
            (Some(Tok::Lower(_)), _) => true,
            _ => false,
        };
        if is_atom {
            return Ok(PItem::Atom(self.atom()?));
        }
        let lhs = self.term()?;
        let op = match self.next() {
            Some(Tok::Op(op)) => op,
            _ => {
                self.pos -= 1;
                return Err(self.unexpected("comparison operator"));
            }
        };
        let rhs = self.term()?;
        Ok(PItem::Cmp(lhs, op, rhs))
    }
}

/// Parses a whole file into statements.
pub fn parse_statements(src: &str) -> Result<Vec<Statement>, ParseError> {
    let toks = Lexer::new(src).tokens()?;
    let end = toks.last().map(|t| (t.1, t.2 + 1)).unwrap_or((1, 1));
    let mut p = Parser { toks, pos: 0, end };
    let mut out = Vec::new();
    while p.peek().is_some() {
        out.push(p.statement()?);
    }
    Ok(out)
}

//! Recursive-descent parser for the infix expression language.
//!
//! ```text
//! expr    := term (('+' | '-') term)*
//! term    := unary (('*' | '/') unary)*
//! unary   := '-' unary | power
//! power   := primary ('^' integer)?
//! primary := number | name | func '(' expr ')' | '(' expr ')'
//! func    := 'sin' | 'cos' | 'exp'
//! ```
//!
//! `^` binds tighter than unary minus, so `-x^2` is `-(x^2)`. Exponents
//! must be non-negative integer literals; chains like `x^2^3` are rejected
//! rather than guessing an associativity.

use super::{Expression, VariableOrder};
use crate::error::{Error, Result};

pub(crate) const FUNCTIONS: [&str; 3] = ["sin", "cos", "exp"];

#[derive(Debug, Clone, PartialEq)]
enum Token {
    Number(String),
    Ident(String),
    Plus,
    Minus,
    Star,
    Slash,
    Caret,
    LParen,
    RParen,
}

#[derive(Debug, Clone)]
struct Spanned {
    token: Token,
    pos: usize,
}

fn syntax(pos: usize, message: impl Into<String>) -> Error {
    Error::Syntax {
        position: pos,
        message: message.into(),
    }
}

fn tokenize(text: &str) -> Result<Vec<Spanned>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        let token = match c {
            ' ' | '\t' | '\n' | '\r' => {
                i += 1;
                continue;
            }
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            '/' => Token::Slash,
            '^' => Token::Caret,
            '(' => Token::LParen,
            ')' => Token::RParen,
            c if c.is_ascii_digit() || c == '.' => {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                // exponent part, only if followed by digits
                if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
                    let mut j = i + 1;
                    if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
                        j += 1;
                    }
                    if j < bytes.len() && bytes[j].is_ascii_digit() {
                        while j < bytes.len() && bytes[j].is_ascii_digit() {
                            j += 1;
                        }
                        i = j;
                    }
                }
                out.push(Spanned {
                    token: Token::Number(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push(Spanned {
                    token: Token::Ident(text[start..i].to_string()),
                    pos: start,
                });
                continue;
            }
            other => return Err(syntax(start, format!("unexpected character `{other}`"))),
        };
        out.push(Spanned { token, pos: start });
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<Spanned>,
    cursor: usize,
    vars: &'a VariableOrder,
    end: usize,
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.cursor).map(|s| &s.token)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.cursor).map_or(self.end, |s| s.pos)
    }

    fn bump(&mut self) -> Option<Spanned> {
        let t = self.tokens.get(self.cursor).cloned();
        self.cursor += 1;
        t
    }

    fn expect(&mut self, want: Token, what: &str) -> Result<()> {
        let pos = self.pos();
        match self.bump() {
            Some(s) if s.token == want => Ok(()),
            _ => Err(syntax(pos, format!("expected {what}"))),
        }
    }

    fn expr(&mut self) -> Result<Expression> {
        let mut lhs = self.term()?;
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.bump();
                    lhs = Expression::Add(Box::new(lhs), Box::new(self.term()?));
                }
                Some(Token::Minus) => {
                    self.bump();
                    lhs = Expression::Sub(Box::new(lhs), Box::new(self.term()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn term(&mut self) -> Result<Expression> {
        let mut lhs = self.unary()?;
        loop {
            match self.peek() {
                Some(Token::Star) => {
                    self.bump();
                    lhs = Expression::Mul(Box::new(lhs), Box::new(self.unary()?));
                }
                Some(Token::Slash) => {
                    self.bump();
                    lhs = Expression::Div(Box::new(lhs), Box::new(self.unary()?));
                }
                _ => return Ok(lhs),
            }
        }
    }

    fn unary(&mut self) -> Result<Expression> {
        if self.peek() == Some(&Token::Minus) {
            self.bump();
            return Ok(Expression::Neg(Box::new(self.unary()?)));
        }
        self.power()
    }

    fn power(&mut self) -> Result<Expression> {
        let base = self.primary()?;
        if self.peek() != Some(&Token::Caret) {
            return Ok(base);
        }
        self.bump();
        let pos = self.pos();
        let exponent = match self.bump().map(|s| s.token) {
            Some(Token::Number(lit)) => integer_exponent(&lit, pos)?,
            Some(Token::LParen) => {
                let pos = self.pos();
                let n = match self.bump().map(|s| s.token) {
                    Some(Token::Number(lit)) => integer_exponent(&lit, pos)?,
                    _ => return Err(syntax(pos, "exponent must be a non-negative integer literal")),
                };
                self.expect(Token::RParen, "`)` after exponent")?;
                n
            }
            _ => return Err(syntax(pos, "exponent must be a non-negative integer literal")),
        };
        if self.peek() == Some(&Token::Caret) {
            return Err(syntax(self.pos(), "chained `^` is ambiguous; add parentheses"));
        }
        Ok(Expression::IntPow(Box::new(base), exponent))
    }

    fn primary(&mut self) -> Result<Expression> {
        let pos = self.pos();
        match self.bump().map(|s| s.token) {
            Some(Token::Number(lit)) => lit
                .parse::<f64>()
                .map(Expression::Constant)
                .map_err(|_| syntax(pos, format!("malformed number `{lit}`"))),
            Some(Token::Ident(name)) => {
                if FUNCTIONS.contains(&name.as_str()) {
                    self.expect(Token::LParen, &format!("`(` after `{name}`"))?;
                    let arg = Box::new(self.expr()?);
                    self.expect(Token::RParen, "`)`")?;
                    return Ok(match name.as_str() {
                        "sin" => Expression::Sin(arg),
                        "cos" => Expression::Cos(arg),
                        _ => Expression::Exp(arg),
                    });
                }
                self.vars
                    .index_of(&name)
                    .map(Expression::Variable)
                    .ok_or(Error::UnknownVariable(name))
            }
            Some(Token::LParen) => {
                let inner = self.expr()?;
                self.expect(Token::RParen, "`)`")?;
                Ok(inner)
            }
            Some(_) => Err(syntax(pos, "expected a number, variable, function or `(`")),
            None => Err(syntax(pos, "unexpected end of input")),
        }
    }
}

fn integer_exponent(lit: &str, pos: usize) -> Result<u32> {
    let value: f64 = lit
        .parse()
        .map_err(|_| syntax(pos, format!("malformed number `{lit}`")))?;
    if value.fract() != 0.0 {
        return Err(Error::NonIntegerExponent(lit.to_string()));
    }
    if value > u32::MAX as f64 {
        return Err(syntax(pos, format!("exponent `{lit}` is too large")));
    }
    Ok(value as u32)
}

/// Parses `text` into an expression over `vars`.
pub fn parse(text: &str, vars: &VariableOrder) -> Result<Expression> {
    if text.trim().is_empty() {
        return Err(syntax(0, "empty expression"));
    }
    let tokens = tokenize(text)?;
    let mut p = Parser {
        tokens,
        cursor: 0,
        vars,
        end: text.len(),
    };
    let e = p.expr()?;
    if p.cursor < p.tokens.len() {
        return Err(syntax(p.pos(), "unexpected trailing input"));
    }
    Ok(e)
}

//! Recursive-descent parser for integer polynomial expressions.
//!
//! ```text
//! expr    := ('+' | '-')? term (('+' | '-') term)*
//! term    := factor ('*' factor)*
//! factor  := '-' factor | primary ('^' integer)?
//! primary := integer | identifier | '(' expr ')'
//! ```

use num_bigint::BigInt;

use super::MultiPoly;
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq)]
enum Token {
    Int(BigInt),
    Ident(String),
    Plus,
    Minus,
    Star,
    Caret,
    LParen,
    RParen,
}

fn tokenize(text: &str) -> Result<Vec<(usize, Token)>> {
    let bytes = text.as_bytes();
    let mut out = Vec::new();
    let mut i = 0;
    while i < bytes.len() {
        let c = bytes[i] as char;
        let start = i;
        if c.is_ascii_whitespace() {
            i += 1;
            continue;
        }
        let tok = match c {
            '+' => Token::Plus,
            '-' => Token::Minus,
            '*' => Token::Star,
            '^' => Token::Caret,
            '(' => Token::LParen,
            ')' => Token::RParen,
            '0'..='9' => {
                while i < bytes.len() && bytes[i].is_ascii_digit() {
                    i += 1;
                }
                out.push((start, Token::Int(text[start..i].parse().expect("digits"))));
                continue;
            }
            c if c.is_ascii_alphabetic() || c == '_' => {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                out.push((start, Token::Ident(text[start..i].to_string())));
                continue;
            }
            other => {
                return Err(Error::Syntax { pos: start, message: format!("unexpected character `{other}`") });
            }
        };
        out.push((start, tok));
        i += 1;
    }
    Ok(out)
}

struct Parser<'a> {
    tokens: Vec<(usize, Token)>,
    at: usize,
    end: usize,
    vars: &'a [String],
}

impl Parser<'_> {
    fn peek(&self) -> Option<&Token> {
        self.tokens.get(self.at).map(|(_, t)| t)
    }

    fn pos(&self) -> usize {
        self.tokens.get(self.at).map_or(self.end, |(p, _)| *p)
    }

    fn error<T>(&self, message: &str) -> Result<T> {
        Err(Error::Syntax { pos: self.pos(), message: message.to_string() })
    }

    fn expr(&mut self) -> Result<MultiPoly> {
        let negate = match self.peek() {
            Some(Token::Minus) => {
                self.at += 1;
                true
            }
            Some(Token::Plus) => {
                self.at += 1;
                false
            }
            _ => false,
        };
        let first = self.term()?;
        let mut acc = if negate { first.neg() } else { first };
        loop {
            match self.peek() {
                Some(Token::Plus) => {
                    self.at += 1;
                    acc = acc.add(&self.term()?);
                }
                Some(Token::Minus) => {
                    self.at += 1;
                    acc = acc.sub(&self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<MultiPoly> {
        let mut acc = self.factor()?;
        while let Some(Token::Star) = self.peek() {
            self.at += 1;
            acc = acc.mul(&self.factor()?);
        }
        Ok(acc)
    }

    fn factor(&mut self) -> Result<MultiPoly> {
        if let Some(Token::Minus) = self.peek() {
            self.at += 1;
            return Ok(self.factor()?.neg());
        }
        let base = self.primary()?;
        if let Some(Token::Caret) = self.peek() {
            self.at += 1;
            let Some(Token::Int(e)) = self.peek().cloned() else {
                return self.error("exponent must be a nonnegative integer literal");
            };
            let Ok(e) = u32::try_from(&e) else {
                return self.error("exponent too large");
            };
            self.at += 1;
            return Ok(base.pow(e));
        }
        Ok(base)
    }

    fn primary(&mut self) -> Result<MultiPoly> {
        let vars = self.vars.to_vec();
        match self.peek().cloned() {
            Some(Token::Int(c)) => {
                self.at += 1;
                Ok(MultiPoly::constant(vars, c))
            }
            Some(Token::Ident(name)) => {
                let pos = self.pos();
                let Some(i) = self.vars.iter().position(|v| *v == name) else {
                    return Err(Error::UnknownVariable { name, pos });
                };
                self.at += 1;
                Ok(MultiPoly::variable(vars, i))
            }
            Some(Token::LParen) => {
                self.at += 1;
                let inner = self.expr()?;
                if self.peek() != Some(&Token::RParen) {
                    return self.error("expected `)`");
                }
                self.at += 1;
                Ok(inner)
            }
            Some(_) => self.error("expected a number, variable or `(`"),
            None => self.error("unexpected end of input"),
        }
    }
}

pub(super) fn parse(text: &str, vars: &[String]) -> Result<MultiPoly> {
    let tokens = tokenize(text)?;
    let mut parser = Parser { tokens, at: 0, end: text.len(), vars };
    let poly = parser.expr()?;
    if parser.at < parser.tokens.len() {
        return parser.error("unexpected token");
    }
    Ok(poly)
}

//! Infix expression grammar shared by definition files and the CLI.
//!
//! ```text
//! expr   := term (('+' | '-') term)*
//! term   := unary (('*' | '/') unary)*
//! unary  := '-' unary | power
//! power  := atom ('^' unary)?          exponent must fold to a rational
//! atom   := number | ident | func '(' expr ')' | '(' expr ')'
//! func   := exp | log | sqrt
//! ```

use num_bigint::BigInt;
use thiserror::Error;

use super::expr::{Rational, ScalarExpr};

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("parse error at line {line}, column {column}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub column: usize,
    pub message: String,
}

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    Num(Rational),
    Ident(String),
    Op(char),
    LParen,
    RParen,
    End,
}

struct Lexer<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
}

fn position(src: &str, offset: usize) -> (usize, usize) {
    let before = &src[..offset.min(src.len())];
    let line = before.matches('\n').count() + 1;
    let column = before.rfind('\n').map_or(before.chars().count(), |nl| {
        before[nl + 1..].chars().count()
    }) + 1;
    (line, column)
}

impl<'a> Lexer<'a> {
    fn error(&self, offset: usize, message: impl Into<String>) -> ParseError {
        let (line, column) = position(self.src, offset);
        ParseError { line, column, message: message.into() }
    }

    fn run(mut self) -> Result<Vec<(Tok, usize)>, ParseError> {
        let bytes = self.src.as_bytes();
        let mut i = 0;
        while i < bytes.len() {
            let c = bytes[i] as char;
            if c.is_whitespace() {
                i += 1;
                continue;
            }
            let start = i;
            if c.is_ascii_digit() || (c == '.' && i + 1 < bytes.len() && bytes[i + 1].is_ascii_digit()) {
                while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
                    i += 1;
                }
                let mut end = i;
                // optional exponent: 1e-3, 2.5E4
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
                        end = j;
                    }
                }
                let text = &self.src[start..end];
                let value = parse_decimal(text)
                    .ok_or_else(|| self.error(start, format!("malformed number `{text}`")))?;
                self.toks.push((Tok::Num(value), start));
                continue;
            }
            if c.is_ascii_alphabetic() || c == '_' {
                while i < bytes.len() && (bytes[i].is_ascii_alphanumeric() || bytes[i] == b'_') {
                    i += 1;
                }
                self.toks.push((Tok::Ident(self.src[start..i].to_string()), start));
                continue;
            }
            let tok = match c {
                '+' | '-' | '*' | '/' | '^' => Tok::Op(c),
                '(' => Tok::LParen,
                ')' => Tok::RParen,
                _ => {
                    let ch = self.src[start..].chars().next().unwrap_or('?');
                    return Err(self.error(start, format!("unexpected character `{ch}`")));
                }
            };
            self.toks.push((tok, start));
            i += 1;
        }
        self.toks.push((Tok::End, self.src.len()));
        Ok(self.toks)
    }
}

/// Exact value of a decimal literal such as `12`, `0.25` or `1e-3`.
pub fn parse_decimal(text: &str) -> Option<Rational> {
    let (mantissa, exp) = match text.find(['e', 'E']) {
        Some(pos) => (&text[..pos], text[pos + 1..].parse::<i32>().ok()?),
        None => (text, 0),
    };
    let (int_part, frac_part) = match mantissa.split_once('.') {
        Some((a, b)) => (a, b),
        None => (mantissa, ""),
    };
    if frac_part.contains('.') || (int_part.is_empty() && frac_part.is_empty()) {
        return None;
    }
    let digits = format!("{int_part}{frac_part}");
    let numer: BigInt = digits.parse().ok()?;
    let scale = exp - frac_part.len() as i32;
    let ten = Rational::from_integer(BigInt::from(10));
    let value = Rational::from_integer(numer) * ten.pow(scale);
    Some(value)
}

struct Parser<'a> {
    src: &'a str,
    toks: Vec<(Tok, usize)>,
    pos: usize,
}

impl<'a> Parser<'a> {
    fn peek(&self) -> &Tok {
        &self.toks[self.pos].0
    }

    fn offset(&self) -> usize {
        self.toks[self.pos].1
    }

    fn bump(&mut self) -> Tok {
        let t = self.toks[self.pos].0.clone();
        if self.pos + 1 < self.toks.len() {
            self.pos += 1;
        }
        t
    }

    fn error(&self, message: impl Into<String>) -> ParseError {
        let (line, column) = position(self.src, self.offset());
        ParseError { line, column, message: message.into() }
    }

    fn expr(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut terms = vec![self.term()?];
        loop {
            match self.peek() {
                Tok::Op('+') => {
                    self.bump();
                    terms.push(self.term()?);
                }
                Tok::Op('-') => {
                    self.bump();
                    terms.push(-self.term()?);
                }
                _ => break,
            }
        }
        Ok(ScalarExpr::sum(terms))
    }

    fn term(&mut self) -> Result<ScalarExpr, ParseError> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Tok::Op('*') => {
                    self.bump();
                    acc = acc * self.unary()?;
                }
                Tok::Op('/') => {
                    self.bump();
                    let off = self.offset();
                    let rhs = self.unary()?;
                    if rhs.is_zero_const() {
                        let (line, column) = position(self.src, off);
                        return Err(ParseError {
                            line,
                            column,
                            message: "division by literal zero".into(),
                        });
                    }
                    acc = acc / rhs;
                }
                _ => break,
            }
        }
        Ok(acc)
    }

    fn unary(&mut self) -> Result<ScalarExpr, ParseError> {
        if let Tok::Op('-') = self.peek() {
            self.bump();
            return Ok(-self.unary()?);
        }
        if let Tok::Op('+') = self.peek() {
            self.bump();
            return self.unary();
        }
        self.power()
    }

    fn power(&mut self) -> Result<ScalarExpr, ParseError> {
        let base = self.atom()?;
        if let Tok::Op('^') = self.peek() {
            self.bump();
            let off = self.offset();
            let exponent = self.unary()?;
            return match exponent.as_constant() {
                Some(e) => Ok(ScalarExpr::pow(&base, e.clone())),
                None => {
                    let (line, column) = position(self.src, off);
                    Err(ParseError {
                        line,
                        column,
                        message: "exponent must be a rational constant".into(),
                    })
                }
            };
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<ScalarExpr, ParseError> {
        match self.peek().clone() {
            Tok::Num(v) => {
                self.bump();
                Ok(ScalarExpr::constant(v))
            }
            Tok::Ident(name) => {
                self.bump();
                if let Tok::LParen = self.peek() {
                    let f: fn(&ScalarExpr) -> ScalarExpr = match name.as_str() {
                        "exp" => ScalarExpr::exp,
                        "log" => ScalarExpr::ln,
                        "sqrt" => ScalarExpr::sqrt,
                        _ => return Err(self.error(format!("unknown function `{name}`"))),
                    };
                    self.bump();
                    let arg = self.expr()?;
                    self.expect_rparen()?;
                    return Ok(f(&arg));
                }
                Ok(ScalarExpr::var(&name))
            }
            Tok::LParen => {
                self.bump();
                let e = self.expr()?;
                self.expect_rparen()?;
                Ok(e)
            }
            Tok::RParen => Err(self.error("unexpected `)`")),
            Tok::Op(c) => Err(self.error(format!("unexpected operator `{c}`"))),
            Tok::End => Err(self.error("unexpected end of input")),
        }
    }

    fn expect_rparen(&mut self) -> Result<(), ParseError> {
        match self.peek() {
            Tok::RParen => {
                self.bump();
                Ok(())
            }
            _ => Err(self.error("expected `)`")),
        }
    }
}

/// Parse an infix expression.
pub fn parse_expr(src: &str) -> Result<ScalarExpr, ParseError> {
    let toks = Lexer { src, toks: Vec::new() }.run()?;
    let mut p = Parser { src, toks, pos: 0 };
    let e = p.expr()?;
    match p.peek() {
        Tok::End => Ok(e),
        _ => Err(p.error("unexpected trailing input")),
    }
}

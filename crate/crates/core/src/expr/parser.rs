//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' integer)?
//! base   := number | ident | func '(' expr ')' | '(' expr ')' | '-' base
//! func   ∈ {sin, cos, exp, ln, sqrt}
//! number := decimal or integer literal
//! ident  := letter (letter|digit|'_')*
//! ```
//!
//! Whitespace is insignificant. Numeric literals (including decimals such
//! as `0.5`) parse to exact rationals. Every identifier must belong to the
//! supplied vocabulary; a function name followed by `(` is a function
//! application, otherwise it is looked up as an ordinary identifier.

use std::collections::BTreeSet;

use num::{BigInt, BigRational, Num};
use thiserror::Error;

use super::{Expr, Func};

const MAX_DEPTH: u32 = 200;

/// Exponents are capped at `i32` range so powers stay evaluatable.
const MAX_EXPONENT: i64 = i32::MAX as i64;

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum ParseError {
    #[error("syntax error at byte {position}: {message}")]
    Syntax { position: usize, message: String },
    #[error("unknown identifier `{name}` at byte {position}")]
    UnknownIdentifier { position: usize, name: String },
}

/// Parses `src` over the given coordinate vocabulary and returns the
/// normalized expression.
pub fn parse_expr(src: &str, vocabulary: &BTreeSet<String>) -> Result<Expr, ParseError> {
    let mut parser = Parser {
        src: src.as_bytes(),
        pos: 0,
        vocabulary,
        depth: 0,
    };
    let raw = parser.parse_sum()?;
    parser.skip_ws();
    if parser.pos != parser.src.len() {
        return Err(parser.syntax("unexpected trailing input"));
    }
    Ok(raw.normalize())
}

struct Parser<'a> {
    src: &'a [u8],
    pos: usize,
    vocabulary: &'a BTreeSet<String>,
    depth: u32,
}

impl<'a> Parser<'a> {
    fn syntax(&self, message: impl Into<String>) -> ParseError {
        ParseError::Syntax {
            position: self.pos,
            message: message.into(),
        }
    }

    fn skip_ws(&mut self) {
        while let Some(&c) = self.src.get(self.pos) {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else {
                break;
            }
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.src.get(self.pos).copied()
    }

    fn eat(&mut self, c: u8) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn enter(&mut self) -> Result<(), ParseError> {
        self.depth += 1;
        if self.depth > MAX_DEPTH {
            Err(self.syntax("expression nested too deeply"))
        } else {
            Ok(())
        }
    }

    fn parse_sum(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let mut ops = vec![self.parse_term()?];
        loop {
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    ops.push(self.parse_term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    ops.push(Expr::Mul(vec![Expr::int(-1), self.parse_term()?]));
                }
                _ => break,
            }
        }
        self.depth -= 1;
        Ok(if ops.len() == 1 {
            ops.pop().unwrap()
        } else {
            Expr::Add(ops)
        })
    }

    fn parse_term(&mut self) -> Result<Expr, ParseError> {
        let mut ops = vec![self.parse_factor()?];
        loop {
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    ops.push(self.parse_factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    ops.push(Expr::Pow(Box::new(self.parse_factor()?), -1));
                }
                _ => break,
            }
        }
        Ok(if ops.len() == 1 {
            ops.pop().unwrap()
        } else {
            Expr::Mul(ops)
        })
    }

    fn parse_factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.parse_base()?;
        if self.eat(b'^') {
            let exponent = self.parse_exponent()?;
            Ok(Expr::Pow(Box::new(base), exponent))
        } else {
            Ok(base)
        }
    }

    fn parse_base(&mut self) -> Result<Expr, ParseError> {
        self.enter()?;
        let result = match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                let inner = self.parse_base()?;
                Ok(Expr::Mul(vec![Expr::int(-1), inner]))
            }
            Some(b'(') => {
                self.pos += 1;
                let inner = self.parse_sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)`"));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() => self.parse_number(),
            Some(c) if c.is_ascii_alphabetic() => self.parse_ident(),
            Some(c) => Err(self.syntax(format!("unexpected character `{}`", c as char))),
            None => Err(self.syntax("unexpected end of input")),
        };
        self.depth -= 1;
        result
    }

    fn parse_number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        let int_digits = &self.src[start..self.pos];
        let mut frac_digits: &[u8] = &[];
        if self.src.get(self.pos) == Some(&b'.') {
            self.pos += 1;
            let frac_start = self.pos;
            while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
            frac_digits = &self.src[frac_start..self.pos];
            if frac_digits.is_empty() {
                return Err(self.syntax("expected digit after decimal point"));
            }
        }
        let digits_to_bigint = |digits: &[u8]| -> BigInt {
            // Digits were validated above, so parsing cannot fail.
            BigInt::from_str_radix(std::str::from_utf8(digits).unwrap(), 10).unwrap()
        };
        let int_part = digits_to_bigint(int_digits);
        if frac_digits.is_empty() {
            Ok(Expr::Rational(BigRational::from_integer(int_part)))
        } else {
            let scale = BigInt::from(10u32).pow(frac_digits.len() as u32);
            let numer = int_part * &scale + digits_to_bigint(frac_digits);
            Ok(Expr::Rational(BigRational::new(numer, scale)))
        }
    }

    fn parse_ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_alphanumeric() || *c == b'_')
        {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.src[start..self.pos])
            .expect("identifier bytes are ASCII")
            .to_string();
        if let Some(func) = Func::from_name(&name) {
            if self.peek() == Some(b'(') {
                self.pos += 1;
                let arg = self.parse_sum()?;
                if !self.eat(b')') {
                    return Err(self.syntax("expected `)` closing function argument"));
                }
                return Ok(Expr::Func(func, Box::new(arg)));
            }
        }
        if self.vocabulary.contains(&name) {
            Ok(Expr::Var(name))
        } else {
            Err(ParseError::UnknownIdentifier {
                position: start,
                name,
            })
        }
    }

    fn parse_exponent(&mut self) -> Result<i64, ParseError> {
        self.skip_ws();
        let negative = match self.src.get(self.pos) {
            Some(b'-') => {
                self.pos += 1;
                true
            }
            Some(b'+') => {
                self.pos += 1;
                false
            }
            _ => false,
        };
        let start = self.pos;
        while matches!(self.src.get(self.pos), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.syntax("expected integer exponent"));
        }
        let digits = std::str::from_utf8(&self.src[start..self.pos]).unwrap();
        let magnitude: i64 = digits
            .parse()
            .map_err(|_| self.syntax("exponent out of range"))?;
        if magnitude > MAX_EXPONENT {
            return Err(self.syntax("exponent out of range"));
        }
        Ok(if negative { -magnitude } else { magnitude })
    }
}

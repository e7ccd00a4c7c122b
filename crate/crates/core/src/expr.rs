//! Arithmetic expressions for noise parameters, e.g. `"p/3"` or `"sqrt(2p)"`.
//!
//! Grammar: sums and products of numbers, named parameters, parenthesised
//! groups and the functions `sqrt`, `sin`, `cos`, `exp`, `ln`. A number directly
//! followed by a name or a group multiplies it (`2p`, `3(p+1)`), and `^` is
//! right-associative exponentiation.

use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A parameter expression, given either as a number or as a string.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Expr {
    Number(f64),
    Text(String),
}

impl Expr {
    pub fn evaluate(&self, params: &BTreeMap<String, f64>) -> Result<f64> {
        match self {
            Expr::Number(v) => Ok(*v),
            Expr::Text(s) => evaluate(s, params),
        }
    }
}

impl From<f64> for Expr {
    fn from(v: f64) -> Self {
        Expr::Number(v)
    }
}

impl From<&str> for Expr {
    fn from(s: &str) -> Self {
        Expr::Text(s.to_string())
    }
}

impl fmt::Display for Expr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Expr::Number(v) => write!(f, "{v}"),
            Expr::Text(s) => f.write_str(s),
        }
    }
}

/// Evaluates `text` with the given parameter values.
pub fn evaluate(text: &str, params: &BTreeMap<String, f64>) -> Result<f64> {
    let mut parser = Parser { chars: text.chars().filter(|c| !c.is_whitespace()).collect(), pos: 0, params, text };
    let value = parser.sum()?;
    if parser.pos != parser.chars.len() {
        return Err(parser.error("unexpected trailing input"));
    }
    if !value.is_finite() {
        return Err(Error::Config(format!("expression \"{text}\" is not finite")));
    }
    Ok(value)
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    params: &'a BTreeMap<String, f64>,
    text: &'a str,
}

impl Parser<'_> {
    fn error(&self, what: &str) -> Error {
        Error::Config(format!("{what} at position {} in expression \"{}\"", self.pos, self.text))
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn sum(&mut self) -> Result<f64> {
        let mut acc = self.product()?;
        while let Some(op @ ('+' | '-')) = self.peek() {
            self.pos += 1;
            let rhs = self.product()?;
            acc = if op == '+' { acc + rhs } else { acc - rhs };
        }
        Ok(acc)
    }

    fn product(&mut self) -> Result<f64> {
        let mut acc = self.unary()?;
        loop {
            match self.peek() {
                Some('*') => {
                    self.pos += 1;
                    acc *= self.unary()?;
                }
                Some('/') => {
                    self.pos += 1;
                    acc /= self.unary()?;
                }
                Some(c) if c.is_alphabetic() || c == '(' => acc *= self.unary()?,
                _ => return Ok(acc),
            }
        }
    }

    fn unary(&mut self) -> Result<f64> {
        if self.peek() == Some('-') {
            self.pos += 1;
            return Ok(-self.unary()?);
        }
        let base = self.atom()?;
        if self.peek() == Some('^') {
            self.pos += 1;
            return Ok(base.powf(self.unary()?));
        }
        Ok(base)
    }

    fn atom(&mut self) -> Result<f64> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                let v = self.sum()?;
                if self.peek() != Some(')') {
                    return Err(self.error("missing ')'"));
                }
                self.pos += 1;
                Ok(v)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_alphabetic() => self.name(),
            _ => Err(self.error("expected a value")),
        }
    }

    fn number(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit() || c == '.') {
            self.pos += 1;
        }
        if matches!(self.peek(), Some('e' | 'E'))
            && matches!(self.chars.get(self.pos + 1), Some(c) if c.is_ascii_digit() || *c == '-' || *c == '+')
        {
            self.pos += 2;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        let s: String = self.chars[start..self.pos].iter().collect();
        s.parse().map_err(|_| self.error("malformed number"))
    }

    fn name(&mut self) -> Result<f64> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        let function: Option<fn(f64) -> f64> = match name.as_str() {
            "sqrt" => Some(f64::sqrt),
            "sin" => Some(f64::sin),
            "cos" => Some(f64::cos),
            "exp" => Some(f64::exp),
            "ln" => Some(f64::ln),
            _ => None,
        };
        if let Some(f) = function {
            if self.peek() != Some('(') {
                return Err(self.error("expected '(' after function name"));
            }
            return Ok(f(self.atom()?));
        }
        match name.as_str() {
            "pi" => Ok(std::f64::consts::PI),
            _ => self.params.get(&name).copied().ok_or_else(|| self.error(&format!("unknown parameter '{name}'"))),
        }
    }
}

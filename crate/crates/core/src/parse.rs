//! Recursive-descent parser for the expression grammar
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := '-' factor | base ('^' INTEGER)?
//! base   := NUMBER | 'pi' | IDENT | FUNC '(' expr ')' | '(' expr ')'
//! FUNC   := 'sin' | 'cos' | 'exp' | 'bump'
//! ```
//!
//! `^` takes a nonnegative integer literal, whitespace is insignificant,
//! and errors carry the character position they were raised at. Unary
//! minus binds a whole factor, so `-a^2` reads as the negated square.

use crate::error::{Error, Result};
use crate::expr::{self, Func, SmoothExpr};

/// Expression source paired with the set of admissible variable names.
#[derive(Debug, Clone)]
pub struct SourceText {
    pub text: String,
    pub variables: Vec<String>,
}

const RESERVED: &[&str] = &["pi", "sin", "cos", "exp", "bump"];

impl SourceText {
    pub fn new(text: &str, variables: &[&str]) -> Result<SourceText> {
        for (i, v) in variables.iter().enumerate() {
            if v.is_empty() || !is_ident(v) {
                return Err(Error::InvalidArgument(format!("'{v}' is not a valid variable name")));
            }
            if RESERVED.contains(v) || v.starts_with("bump_d") {
                return Err(Error::InvalidArgument(format!("variable name '{v}' is reserved")));
            }
            if variables[..i].contains(v) {
                return Err(Error::InvalidArgument(format!("variable name '{v}' appears twice")));
            }
        }
        Ok(SourceText {
            text: text.to_string(),
            variables: variables.iter().map(|s| s.to_string()).collect(),
        })
    }
}

fn is_ident(s: &str) -> bool {
    let mut chars = s.chars();
    match chars.next() {
        Some(c) if c.is_ascii_alphabetic() || c == '_' => {}
        _ => return false,
    }
    chars.all(|c| c.is_ascii_alphanumeric() || c == '_')
}

pub fn parse_expr(src: &SourceText) -> Result<SmoothExpr> {
    let mut p = Parser { chars: src.text.chars().collect(), pos: 0, vars: &src.variables };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.chars.len() {
        return Err(p.err(format!("unexpected '{}'", p.chars[p.pos])));
    }
    Ok(e)
}

/// Canonical text form; `parse_expr` on the result reproduces the tree.
pub fn format_expr(e: &SmoothExpr) -> String {
    e.to_string()
}

struct Parser<'a> {
    chars: Vec<char>,
    pos: usize,
    vars: &'a [String],
}

impl<'a> Parser<'a> {
    fn err(&self, message: String) -> Error {
        Error::Parse { position: self.pos, message }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<char> {
        self.chars.get(self.pos).copied()
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            self.skip_ws();
            true
        } else {
            false
        }
    }

    fn expr(&mut self) -> Result<SmoothExpr> {
        let mut acc = self.term()?;
        loop {
            if self.eat('+') {
                acc = expr::add(acc, self.term()?);
            } else if self.eat('-') {
                acc = expr::sub(acc, self.term()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn term(&mut self) -> Result<SmoothExpr> {
        let mut acc = self.factor()?;
        loop {
            if self.eat('*') {
                acc = expr::mul(acc, self.factor()?);
            } else if self.eat('/') {
                acc = expr::div(acc, self.factor()?);
            } else {
                return Ok(acc);
            }
        }
    }

    fn factor(&mut self) -> Result<SmoothExpr> {
        if self.eat('-') {
            return Ok(expr::neg(self.factor()?));
        }
        let base = self.base()?;
        if self.eat('^') {
            let n = self.integer()?;
            return Ok(expr::pow(base, n));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<SmoothExpr> {
        match self.peek() {
            Some('(') => {
                self.pos += 1;
                self.skip_ws();
                let inner = self.expr()?;
                if !self.eat(')') {
                    return Err(self.err("unbalanced parenthesis: expected ')'".into()));
                }
                Ok(inner)
            }
            Some(c) if c.is_ascii_digit() || c == '.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == '_' => self.ident(),
            Some(c) => Err(self.err(format!("unexpected '{c}'"))),
            None => Err(self.err("unexpected end of input".into())),
        }
    }

    fn integer(&mut self) -> Result<u32> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.pos == start {
            return Err(self.err("integer exponent required after '^'".into()));
        }
        let digits: String = self.chars[start..self.pos].iter().collect();
        // a dot here would make the exponent fractional
        if self.peek() == Some('.') {
            return Err(self.err("integer exponent required after '^'".into()));
        }
        self.skip_ws();
        digits
            .parse::<u32>()
            .map_err(|_| Error::Parse { position: start, message: "exponent too large".into() })
    }

    fn number(&mut self) -> Result<SmoothExpr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
            self.pos += 1;
        }
        if self.peek() == Some('.') {
            self.pos += 1;
            while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                self.pos += 1;
            }
        }
        if self.pos == start || (self.pos == start + 1 && self.chars[start] == '.') {
            return Err(self.err("malformed number".into()));
        }
        // exponent part, only if digits actually follow
        if matches!(self.peek(), Some('e' | 'E')) {
            let mark = self.pos;
            self.pos += 1;
            if matches!(self.peek(), Some('+' | '-')) {
                self.pos += 1;
            }
            if matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                while matches!(self.peek(), Some(c) if c.is_ascii_digit()) {
                    self.pos += 1;
                }
            } else {
                self.pos = mark;
            }
        }
        let text: String = self.chars[start..self.pos].iter().collect();
        self.skip_ws();
        text.parse::<f64>()
            .map(expr::konst)
            .map_err(|_| Error::Parse { position: start, message: format!("malformed number '{text}'") })
    }

    fn ident(&mut self) -> Result<SmoothExpr> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == '_') {
            self.pos += 1;
        }
        let name: String = self.chars[start..self.pos].iter().collect();
        self.skip_ws();
        if self.vars.iter().any(|v| *v == name) {
            return Ok(expr::var(&name));
        }
        if name == "pi" {
            return Ok(expr::konst(std::f64::consts::PI));
        }
        let func = match name.as_str() {
            "sin" => Some(Func::Sin),
            "cos" => Some(Func::Cos),
            "exp" => Some(Func::Exp),
            "bump" => Some(Func::Bump),
            _ => name
                .strip_prefix("bump_d")
                .and_then(|d| d.parse::<u32>().ok())
                .map(Func::BumpDeriv),
        };
        if let Some(f) = func {
            if !self.eat('(') {
                return Err(self.err(format!("expected '(' after function '{name}'")));
            }
            let arg = self.expr()?;
            if !self.eat(')') {
                return Err(self.err("unbalanced parenthesis: expected ')'".into()));
            }
            return Ok(expr::apply(f, arg));
        }
        Err(Error::Parse {
            position: start,
            message: format!("unknown identifier '{name}'"),
        })
    }
}

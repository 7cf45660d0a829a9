//! Recursive-descent parser for the expression grammar:
//!
//! ```text
//! expr   := term (('+'|'-') term)*
//! term   := factor (('*'|'/') factor)*
//! factor := base ('^' base)?
//! base   := number | ident | ident '(' args ')' | '(' expr ')' | '-' base
//! ```
//!
//! Reserved idents: `sin cos exp ln arctan abs sqrt chi bump pi e x y r n`.
//! `chi(a,b)` takes constant endpoints; `bump(t)` is the smooth core node.

use super::{Env, Expr, Var};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("parse error at byte {offset}: expected {expected}, found {found}")]
pub struct ParseError {
    pub offset: usize,
    pub expected: String,
    pub found: String,
}

impl ParseError {
    fn new(offset: usize, expected: &str, found: impl Into<String>) -> ParseError {
        ParseError { offset, expected: expected.to_string(), found: found.into() }
    }
}

pub fn parse(text: &str) -> Result<Expr, ParseError> {
    let mut p = Parser { input: text.as_bytes(), pos: 0 };
    p.skip_ws();
    let e = p.expr()?;
    p.skip_ws();
    if p.pos < p.input.len() {
        return Err(ParseError::new(p.pos, "end of input", p.rest_token()));
    }
    Ok(e)
}

struct Parser<'a> {
    input: &'a [u8],
    pos: usize,
}

impl<'a> Parser<'a> {
    fn skip_ws(&mut self) {
        while self.pos < self.input.len() && self.input[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&self) -> Option<u8> {
        self.input.get(self.pos).copied()
    }

    fn rest_token(&self) -> String {
        if self.pos >= self.input.len() {
            return "end of input".to_string();
        }
        let end = (self.pos + 12).min(self.input.len());
        format!("`{}`", String::from_utf8_lossy(&self.input[self.pos..end]))
    }

    fn eat(&mut self, c: u8) -> bool {
        self.skip_ws();
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn expect(&mut self, c: u8, what: &str) -> Result<(), ParseError> {
        if self.eat(c) {
            Ok(())
        } else {
            Err(ParseError::new(self.pos, what, self.rest_token()))
        }
    }

    fn expr(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.term()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'+') => {
                    self.pos += 1;
                    acc = acc.add(self.term()?);
                }
                Some(b'-') => {
                    self.pos += 1;
                    acc = acc.sub(self.term()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn term(&mut self) -> Result<Expr, ParseError> {
        let mut acc = self.factor()?;
        loop {
            self.skip_ws();
            match self.peek() {
                Some(b'*') => {
                    self.pos += 1;
                    acc = acc.mul(self.factor()?);
                }
                Some(b'/') => {
                    self.pos += 1;
                    acc = acc.div(self.factor()?);
                }
                _ => return Ok(acc),
            }
        }
    }

    fn factor(&mut self) -> Result<Expr, ParseError> {
        let base = self.base()?;
        self.skip_ws();
        if self.peek() == Some(b'^') {
            self.pos += 1;
            let exp = self.base()?;
            return Ok(base.pow(exp));
        }
        Ok(base)
    }

    fn base(&mut self) -> Result<Expr, ParseError> {
        self.skip_ws();
        match self.peek() {
            None => Err(ParseError::new(self.pos, "expression", "end of input")),
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr()?;
                self.expect(b')', "`)`")?;
                Ok(e)
            }
            Some(b'-') => {
                self.pos += 1;
                Ok(self.base()?.neg())
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() => self.ident(),
            Some(_) => Err(ParseError::new(self.pos, "expression", self.rest_token())),
        }
    }

    fn number(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while let Some(c) = self.peek() {
            if c.is_ascii_digit() || c == b'.' {
                self.pos += 1;
            } else if (c == b'e' || c == b'E') && self.pos > start {
                // exponent part: e[+-]?digits
                let save = self.pos;
                self.pos += 1;
                if matches!(self.peek(), Some(b'+') | Some(b'-')) {
                    self.pos += 1;
                }
                if matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                    while matches!(self.peek(), Some(d) if d.is_ascii_digit()) {
                        self.pos += 1;
                    }
                } else {
                    self.pos = save;
                    break;
                }
            } else {
                break;
            }
        }
        let text = std::str::from_utf8(&self.input[start..self.pos]).unwrap();
        text.parse::<f64>()
            .map(Expr::Const)
            .map_err(|_| ParseError::new(start, "number", format!("`{text}`")))
    }

    fn ident(&mut self) -> Result<Expr, ParseError> {
        let start = self.pos;
        while matches!(self.peek(), Some(c) if c.is_ascii_alphanumeric() || c == b'_') {
            self.pos += 1;
        }
        let name = std::str::from_utf8(&self.input[start..self.pos]).unwrap().to_string();
        match name.as_str() {
            "pi" => return Ok(Expr::Const(std::f64::consts::PI)),
            "e" => return Ok(Expr::Const(std::f64::consts::E)),
            "x" => return Ok(Expr::Var(Var::X)),
            "y" => return Ok(Expr::Var(Var::Y)),
            "r" => return Ok(Expr::Var(Var::R)),
            "n" => return Ok(Expr::Var(Var::N)),
            _ => {}
        }
        self.skip_ws();
        if self.peek() != Some(b'(') {
            return Err(ParseError::new(start, "known identifier", format!("`{name}`")));
        }
        self.pos += 1;
        match name.as_str() {
            "sin" | "cos" | "exp" | "ln" | "arctan" | "abs" | "sqrt" | "bump" => {
                let arg = self.expr()?;
                self.expect(b')', "`)`")?;
                Ok(match name.as_str() {
                    "sin" => arg.sin(),
                    "cos" => arg.cos(),
                    "exp" => arg.exp(),
                    "ln" => arg.ln(),
                    "arctan" => Expr::Unary(super::UnaryOp::Arctan, Box::new(arg)),
                    "abs" => arg.abs(),
                    "sqrt" => arg.sqrt(),
                    "bump" => arg.bump(),
                    _ => unreachable!(),
                })
            }
            "chi" => {
                let lo_at = self.pos;
                let lo = self.expr()?;
                self.expect(b',', "`,`")?;
                let hi_at = self.pos;
                let hi = self.expr()?;
                self.expect(b')', "`)`")?;
                let lo = constant_value(&lo, lo_at)?;
                let hi = constant_value(&hi, hi_at)?;
                Ok(Expr::chi(lo, hi))
            }
            _ => Err(ParseError::new(start, "known function name", format!("`{name}`"))),
        }
    }
}

fn constant_value(e: &Expr, offset: usize) -> Result<f64, ParseError> {
    e.eval(&Env::default())
        .map_err(|_| ParseError::new(offset, "constant endpoint for chi", "variable".to_string()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::expr::{BinaryOp, UnaryOp};

    #[test]
    fn parses_sin_recip() {
        let e = parse("sin(1/x)").unwrap();
        match &e {
            Expr::Unary(UnaryOp::Sin, inner) => match inner.as_ref() {
                Expr::Binary(BinaryOp::Div, a, b) => {
                    assert_eq!(**a, Expr::Const(1.0));
                    assert_eq!(**b, Expr::Var(Var::X));
                }
                other => panic!("unexpected inner: {other:?}"),
            },
            other => panic!("unexpected: {other:?}"),
        }
    }

    #[test]
    fn parses_log_spiral_integrand() {
        parse("sin(2*pi*ln(x))").unwrap();
    }

    #[test]
    fn incomplete_expression_reports_offset() {
        let err = parse("x^2+").unwrap_err();
        assert_eq!(err.offset, 4);
    }

    #[test]
    fn offset_within_input_length_plus_one() {
        for bad in ["", "(", "sin(", "1**2", "foo", "chi(x,1)"] {
            match parse(bad) {
                Ok(_) => panic!("expected failure for {bad:?}"),
                Err(e) => assert!(e.offset <= bad.len(), "offset {} for {bad:?}", e.offset),
            }
        }
    }

    #[test]
    fn chi_accepts_negative_constant_endpoints() {
        let e = parse("chi(-1,2.5)").unwrap();
        assert_eq!(e.eval(&Env::x(0.0)).unwrap(), 1.0);
        assert_eq!(e.eval(&Env::x(3.0)).unwrap(), 0.0);
    }

    #[test]
    fn precedence_and_power() {
        let e = parse("2+3*4^2").unwrap();
        assert_eq!(e.eval(&Env::default()).unwrap(), 50.0);
        let e = parse("-x^2").unwrap();
        // '-' applies to the base, so this is (-x)^2
        assert_eq!(e.eval(&Env::x(3.0)).unwrap(), 9.0);
    }
}

//! Symbolic failure rates.
//!
//! Rates are small arithmetic expressions over literals and named
//! parameters, so a scenario can be re-instantiated with different rates or
//! coverages without rebuilding the tree.

use std::collections::BTreeMap;
use std::fmt;

use thiserror::Error;

/// Parameter name → value map used to instantiate [`RateExpr`]s.
pub type Valuation = BTreeMap<String, f64>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum RateError {
    #[error("missing parameter `{0}`")]
    MissingParameter(String),
    #[error(
        "rate expression `{expr}` evaluates to {value}, expected a finite non-negative number"
    )]
    Negative { expr: String, value: f64 },
    #[error("invalid rate expression `{text}` at offset {offset}: {message}")]
    Syntax {
        text: String,
        offset: usize,
        message: String,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BinOp {
    Add,
    Sub,
    Mul,
    Div,
}

impl BinOp {
    fn symbol(self) -> char {
        match self {
            BinOp::Add => '+',
            BinOp::Sub => '-',
            BinOp::Mul => '*',
            BinOp::Div => '/',
        }
    }

    fn precedence(self) -> u8 {
        match self {
            BinOp::Add | BinOp::Sub => 1,
            BinOp::Mul | BinOp::Div => 2,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum RateExpr {
    Const(f64),
    Param(String),
    Neg(Box<RateExpr>),
    Binary(BinOp, Box<RateExpr>, Box<RateExpr>),
}

// `add`/`sub`/`mul` build expression nodes rather than evaluate
#[allow(clippy::should_implement_trait)]
impl RateExpr {
    pub fn constant(value: f64) -> Self {
        RateExpr::Const(value)
    }

    pub fn param(name: impl Into<String>) -> Self {
        RateExpr::Param(name.into())
    }

    pub fn zero() -> Self {
        RateExpr::Const(0.0)
    }

    pub fn mul(self, other: RateExpr) -> Self {
        RateExpr::Binary(BinOp::Mul, Box::new(self), Box::new(other))
    }

    pub fn sub(self, other: RateExpr) -> Self {
        RateExpr::Binary(BinOp::Sub, Box::new(self), Box::new(other))
    }

    pub fn add(self, other: RateExpr) -> Self {
        RateExpr::Binary(BinOp::Add, Box::new(self), Box::new(other))
    }

    /// True for the literal `0`; dummy events must carry exactly this.
    pub fn is_zero_literal(&self) -> bool {
        matches!(self, RateExpr::Const(v) if *v == 0.0)
    }

    /// Value of the expression if it does not mention any parameter.
    pub fn as_constant(&self) -> Option<f64> {
        match self {
            RateExpr::Const(v) => Some(*v),
            RateExpr::Param(_) => None,
            RateExpr::Neg(e) => e.as_constant().map(|v| -v),
            RateExpr::Binary(op, l, r) => Some(apply(*op, l.as_constant()?, r.as_constant()?)),
        }
    }

    pub fn parameters(&self, out: &mut Vec<String>) {
        match self {
            RateExpr::Const(_) => {}
            RateExpr::Param(p) => {
                if !out.contains(p) {
                    out.push(p.clone());
                }
            }
            RateExpr::Neg(e) => e.parameters(out),
            RateExpr::Binary(_, l, r) => {
                l.parameters(out);
                r.parameters(out);
            }
        }
    }

    fn eval_raw(&self, valuation: &Valuation) -> Result<f64, RateError> {
        Ok(match self {
            RateExpr::Const(v) => *v,
            RateExpr::Param(p) => *valuation
                .get(p)
                .ok_or_else(|| RateError::MissingParameter(p.clone()))?,
            RateExpr::Neg(e) => -e.eval_raw(valuation)?,
            RateExpr::Binary(op, l, r) => {
                apply(*op, l.eval_raw(valuation)?, r.eval_raw(valuation)?)
            }
        })
    }

    /// Evaluates under `valuation`; the result must be finite and `>= 0`.
    pub fn eval(&self, valuation: &Valuation) -> Result<f64, RateError> {
        let value = self.eval_raw(valuation)?;
        if !value.is_finite() || value < 0.0 {
            // -0.0 and tiny rounding noise below zero from `(1-c)*r` style terms
            if value > -1e-300 && value.is_finite() {
                return Ok(0.0);
            }
            return Err(RateError::Negative {
                expr: self.to_string(),
                value,
            });
        }
        Ok(value)
    }

    pub fn parse(text: &str) -> Result<Self, RateError> {
        let mut p = ExprParser {
            text,
            bytes: text.as_bytes(),
            pos: 0,
        };
        let e = p.expr(0)?;
        p.skip_ws();
        if p.pos != p.bytes.len() {
            return Err(p.error("unexpected trailing input"));
        }
        Ok(e)
    }
}

fn apply(op: BinOp, l: f64, r: f64) -> f64 {
    match op {
        BinOp::Add => l + r,
        BinOp::Sub => l - r,
        BinOp::Mul => l * r,
        BinOp::Div => l / r,
    }
}

impl fmt::Display for RateExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(e: &RateExpr, parent: u8, right: bool, f: &mut fmt::Formatter<'_>) -> fmt::Result {
            match e {
                RateExpr::Const(v) => write!(f, "{v:?}"),
                RateExpr::Param(p) => write!(f, "{p}"),
                RateExpr::Neg(inner) => {
                    write!(f, "-")?;
                    go(inner, 3, false, f)
                }
                RateExpr::Binary(op, l, r) => {
                    let prec = op.precedence();
                    let paren = prec < parent || (right && prec == parent);
                    if paren {
                        write!(f, "(")?;
                    }
                    go(l, prec, false, f)?;
                    write!(f, "{}", op.symbol())?;
                    go(r, prec, true, f)?;
                    if paren {
                        write!(f, ")")?;
                    }
                    Ok(())
                }
            }
        }
        go(self, 0, false, f)
    }
}

struct ExprParser<'a> {
    text: &'a str,
    bytes: &'a [u8],
    pos: usize,
}

impl ExprParser<'_> {
    fn error(&self, message: &str) -> RateError {
        RateError::Syntax {
            text: self.text.to_string(),
            offset: self.pos,
            message: message.to_string(),
        }
    }

    fn skip_ws(&mut self) {
        while self.pos < self.bytes.len() && self.bytes[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<u8> {
        self.skip_ws();
        self.bytes.get(self.pos).copied()
    }

    // precedence climbing; all operators are left-associative
    fn expr(&mut self, min_prec: u8) -> Result<RateExpr, RateError> {
        let mut lhs = self.unary()?;
        loop {
            let op = match self.peek() {
                Some(b'+') => BinOp::Add,
                Some(b'-') => BinOp::Sub,
                Some(b'*') => BinOp::Mul,
                Some(b'/') => BinOp::Div,
                _ => break,
            };
            if op.precedence() < min_prec {
                break;
            }
            self.pos += 1;
            let rhs = self.expr(op.precedence() + 1)?;
            lhs = RateExpr::Binary(op, Box::new(lhs), Box::new(rhs));
        }
        Ok(lhs)
    }

    fn unary(&mut self) -> Result<RateExpr, RateError> {
        match self.peek() {
            Some(b'-') => {
                self.pos += 1;
                Ok(RateExpr::Neg(Box::new(self.unary()?)))
            }
            Some(b'+') => {
                self.pos += 1;
                self.unary()
            }
            Some(b'(') => {
                self.pos += 1;
                let e = self.expr(0)?;
                if self.peek() != Some(b')') {
                    return Err(self.error("expected `)`"));
                }
                self.pos += 1;
                Ok(e)
            }
            Some(c) if c.is_ascii_digit() || c == b'.' => self.number(),
            Some(c) if c.is_ascii_alphabetic() || c == b'_' => {
                let start = self.pos;
                while self.pos < self.bytes.len()
                    && (self.bytes[self.pos].is_ascii_alphanumeric()
                        || self.bytes[self.pos] == b'_')
                {
                    self.pos += 1;
                }
                Ok(RateExpr::Param(self.text[start..self.pos].to_string()))
            }
            Some(_) => Err(self.error("expected a number, parameter or `(`")),
            None => Err(self.error("unexpected end of expression")),
        }
    }

    fn number(&mut self) -> Result<RateExpr, RateError> {
        let start = self.pos;
        let b = self.bytes;
        while self.pos < b.len() && (b[self.pos].is_ascii_digit() || b[self.pos] == b'.') {
            self.pos += 1;
        }
        if self.pos < b.len() && (b[self.pos] == b'e' || b[self.pos] == b'E') {
            let save = self.pos;
            self.pos += 1;
            if self.pos < b.len() && (b[self.pos] == b'+' || b[self.pos] == b'-') {
                self.pos += 1;
            }
            let digits = self.pos;
            while self.pos < b.len() && b[self.pos].is_ascii_digit() {
                self.pos += 1;
            }
            if digits == self.pos {
                self.pos = save;
            }
        }
        self.text[start..self.pos]
            .parse::<f64>()
            .map(RateExpr::Const)
            .map_err(|_| RateError::Syntax {
                text: self.text.to_string(),
                offset: start,
                message: "malformed number".into(),
            })
    }
}

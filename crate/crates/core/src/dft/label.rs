//! Boolean state predicates over `failed(<element>)` atoms.

use std::fmt;

use super::ElementId;

/// Predicate over element failure statuses. Element references are
/// resolved names; [`LabelExpr::Failed`] holds the dense id.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelExpr {
    Const(bool),
    Failed(ElementId),
    Not(Box<LabelExpr>),
    And(Vec<LabelExpr>),
    Or(Vec<LabelExpr>),
}

impl LabelExpr {
    pub fn eval(&self, failed: &impl Fn(ElementId) -> bool) -> bool {
        match self {
            LabelExpr::Const(b) => *b,
            LabelExpr::Failed(e) => failed(*e),
            LabelExpr::Not(e) => !e.eval(failed),
            LabelExpr::And(es) => es.iter().all(|e| e.eval(failed)),
            LabelExpr::Or(es) => es.iter().any(|e| e.eval(failed)),
        }
    }

    pub fn elements(&self, out: &mut Vec<ElementId>) {
        match self {
            LabelExpr::Const(_) => {}
            LabelExpr::Failed(e) => out.push(*e),
            LabelExpr::Not(e) => e.elements(out),
            LabelExpr::And(es) | LabelExpr::Or(es) => es.iter().for_each(|e| e.elements(out)),
        }
    }

    pub fn map_elements(&self, f: &impl Fn(ElementId) -> ElementId) -> LabelExpr {
        match self {
            LabelExpr::Const(b) => LabelExpr::Const(*b),
            LabelExpr::Failed(e) => LabelExpr::Failed(f(*e)),
            LabelExpr::Not(e) => LabelExpr::Not(Box::new(e.map_elements(f))),
            LabelExpr::And(es) => LabelExpr::And(es.iter().map(|e| e.map_elements(f)).collect()),
            LabelExpr::Or(es) => LabelExpr::Or(es.iter().map(|e| e.map_elements(f)).collect()),
        }
    }

    /// Renders with a name lookup, in the syntax accepted by the text format.
    pub fn display<'a>(&'a self, name: &'a dyn Fn(ElementId) -> String) -> impl fmt::Display + 'a {
        LabelDisplay { expr: self, name }
    }
}

struct LabelDisplay<'a> {
    expr: &'a LabelExpr,
    name: &'a dyn Fn(ElementId) -> String,
}

impl fmt::Display for LabelDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fn go(
            e: &LabelExpr,
            name: &dyn Fn(ElementId) -> String,
            f: &mut fmt::Formatter<'_>,
        ) -> fmt::Result {
            match e {
                LabelExpr::Const(b) => write!(f, "{b}"),
                LabelExpr::Failed(id) => write!(f, "failed({})", super::quote(&name(*id))),
                LabelExpr::Not(inner) => {
                    write!(f, "!")?;
                    go(inner, name, f)
                }
                LabelExpr::And(es) | LabelExpr::Or(es) => {
                    let sep = if matches!(e, LabelExpr::And(_)) {
                        " & "
                    } else {
                        " | "
                    };
                    write!(f, "(")?;
                    for (i, x) in es.iter().enumerate() {
                        if i > 0 {
                            write!(f, "{sep}")?;
                        }
                        go(x, name, f)?;
                    }
                    write!(f, ")")
                }
            }
        }
        go(self.expr, self.name, f)
    }
}

/// Unresolved label predicate as written in a document.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum RawLabelExpr {
    Const(bool),
    Failed(String),
    Not(Box<RawLabelExpr>),
    And(Vec<RawLabelExpr>),
    Or(Vec<RawLabelExpr>),
}

impl RawLabelExpr {
    pub fn resolve<E>(
        &self,
        lookup: &impl Fn(&str) -> Result<ElementId, E>,
    ) -> Result<LabelExpr, E> {
        Ok(match self {
            RawLabelExpr::Const(b) => LabelExpr::Const(*b),
            RawLabelExpr::Failed(n) => LabelExpr::Failed(lookup(n)?),
            RawLabelExpr::Not(e) => LabelExpr::Not(Box::new(e.resolve(lookup)?)),
            RawLabelExpr::And(es) => LabelExpr::And(
                es.iter()
                    .map(|e| e.resolve(lookup))
                    .collect::<Result<_, _>>()?,
            ),
            RawLabelExpr::Or(es) => LabelExpr::Or(
                es.iter()
                    .map(|e| e.resolve(lookup))
                    .collect::<Result<_, _>>()?,
            ),
        })
    }

    /// Parses `failed(x) & !(failed("y") | false)`. Returns the byte offset of
    /// the first error on failure.
    pub fn parse(text: &str) -> Result<Self, (usize, String)> {
        let mut p = BoolParser {
            text,
            chars: text.char_indices().collect(),
            pos: 0,
        };
        let e = p.or()?;
        p.skip_ws();
        if p.pos < p.chars.len() {
            return Err((p.offset(), "unexpected trailing input".into()));
        }
        Ok(e)
    }
}

struct BoolParser<'a> {
    text: &'a str,
    chars: Vec<(usize, char)>,
    pos: usize,
}

impl BoolParser<'_> {
    fn offset(&self) -> usize {
        self.chars.get(self.pos).map_or(self.text.len(), |c| c.0)
    }

    fn skip_ws(&mut self) {
        while self.pos < self.chars.len() && self.chars[self.pos].1.is_whitespace() {
            self.pos += 1;
        }
    }

    fn peek(&mut self) -> Option<char> {
        self.skip_ws();
        self.chars.get(self.pos).map(|c| c.1)
    }

    fn eat(&mut self, c: char) -> bool {
        if self.peek() == Some(c) {
            self.pos += 1;
            true
        } else {
            false
        }
    }

    fn or(&mut self) -> Result<RawLabelExpr, (usize, String)> {
        let mut terms = vec![self.and()?];
        while self.eat('|') {
            terms.push(self.and()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            RawLabelExpr::Or(terms)
        })
    }

    fn and(&mut self) -> Result<RawLabelExpr, (usize, String)> {
        let mut terms = vec![self.unary()?];
        while self.eat('&') {
            terms.push(self.unary()?);
        }
        Ok(if terms.len() == 1 {
            terms.pop().unwrap()
        } else {
            RawLabelExpr::And(terms)
        })
    }

    fn unary(&mut self) -> Result<RawLabelExpr, (usize, String)> {
        if self.eat('!') {
            return Ok(RawLabelExpr::Not(Box::new(self.unary()?)));
        }
        if self.eat('(') {
            let e = self.or()?;
            if !self.eat(')') {
                return Err((self.offset(), "expected `)`".into()));
            }
            return Ok(e);
        }
        let word = self.word();
        match word.as_str() {
            "true" => Ok(RawLabelExpr::Const(true)),
            "false" => Ok(RawLabelExpr::Const(false)),
            "failed" => {
                if !self.eat('(') {
                    return Err((self.offset(), "expected `(` after `failed`".into()));
                }
                let name = self.name()?;
                if !self.eat(')') {
                    return Err((self.offset(), "expected `)`".into()));
                }
                Ok(RawLabelExpr::Failed(name))
            }
            "" => Err((
                self.offset(),
                "expected `failed(..)`, `true`, `false`, `!` or `(`".into(),
            )),
            other => Err((self.offset(), format!("unknown atom `{other}`"))),
        }
    }

    fn word(&mut self) -> String {
        self.skip_ws();
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_alphanumeric() || c == '_' {
                s.push(c);
                self.pos += 1;
            } else {
                break;
            }
        }
        s
    }

    fn name(&mut self) -> Result<String, (usize, String)> {
        self.skip_ws();
        if self.chars.get(self.pos).map(|c| c.1) == Some('"') {
            self.pos += 1;
            let mut s = String::new();
            loop {
                match self.chars.get(self.pos) {
                    Some(&(_, '"')) => {
                        self.pos += 1;
                        return Ok(s);
                    }
                    Some(&(_, '\\')) => {
                        if let Some(&(_, c)) = self.chars.get(self.pos + 1) {
                            s.push(c);
                        }
                        self.pos += 2;
                    }
                    Some(&(_, c)) => {
                        s.push(c);
                        self.pos += 1;
                    }
                    None => return Err((self.offset(), "unterminated string".into())),
                }
            }
        }
        let mut s = String::new();
        while let Some(&(_, c)) = self.chars.get(self.pos) {
            if c.is_whitespace() || c == ')' || c == '(' {
                break;
            }
            s.push(c);
            self.pos += 1;
        }
        if s.is_empty() {
            return Err((self.offset(), "expected an element name".into()));
        }
        Ok(s)
    }
}

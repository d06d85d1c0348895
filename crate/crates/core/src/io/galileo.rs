//! Galileo-style text format.
//!
//! ```text
//! param c = 0.99;
//! toplevel "T";
//! "T" wsp "P" "S";
//! "P" lambda=(1-c)*mu dorm=0.0;
//! "F" fdep "Bus" "P";
//! label "degraded" when failed("P") | failed("S");
//! ```
//!
//! Statements end with `;`, `//` starts a comment, identifiers may be quoted.
//! Rate expressions follow `lambda=` without embedded whitespace.

use std::fmt::Write as _;

use thiserror::Error;

use crate::dft::{
    quote, BasicEvent, BuildError, Dft, DftBuilder, ElementKind, GateKind, RateError, RateExpr,
    RawLabelExpr,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ParseError {
    #[error("{line}:{column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error(transparent)]
    Build(#[from] BuildError),
}

struct Token {
    text: String,
    offset: usize,
    quoted: bool,
}

struct Source<'a> {
    text: &'a str,
}

impl Source<'_> {
    fn error(&self, offset: usize, message: impl Into<String>) -> ParseError {
        let before = &self.text[..offset.min(self.text.len())];
        let line = before.matches('\n').count() + 1;
        let column = before.len() - before.rfind('\n').map_or(0, |p| p + 1) + 1;
        ParseError::Syntax {
            line,
            column,
            message: message.into(),
        }
    }
}

/// Splits into statements (start offset, text), dropping comments.
fn statements(src: &Source) -> Result<Vec<(usize, String)>, ParseError> {
    let mut out = Vec::new();
    let mut current = String::new();
    let mut start = None;
    let mut in_quote = false;
    let mut iter = src.text.char_indices().peekable();
    while let Some((i, c)) = iter.next() {
        if in_quote {
            current.push(c);
            if c == '\\' {
                if let Some((_, e)) = iter.next() {
                    current.push(e);
                }
            } else if c == '"' {
                in_quote = false;
            }
            continue;
        }
        match c {
            '/' if iter.peek().map(|p| p.1) == Some('/') => {
                for (_, c) in iter.by_ref() {
                    if c == '\n' {
                        break;
                    }
                }
                current.push('\n');
            }
            ';' => {
                if let Some(s) = start.take() {
                    out.push((s, std::mem::take(&mut current)));
                }
                current.clear();
            }
            _ => {
                if c == '"' {
                    in_quote = true;
                }
                if start.is_none() && !c.is_whitespace() {
                    start = Some(i);
                    current.clear();
                }
                if start.is_some() {
                    current.push(c);
                }
            }
        }
    }
    if in_quote {
        return Err(src.error(src.text.len(), "unterminated string"));
    }
    if let Some(s) = start {
        if !current.trim().is_empty() {
            return Err(src.error(s, "statement is missing a terminating `;`"));
        }
    }
    Ok(out)
}

fn tokenize(src: &Source, base: usize, stmt: &str) -> Result<Vec<Token>, ParseError> {
    let mut out = Vec::new();
    let mut iter = stmt.char_indices().peekable();
    while let Some(&(i, c)) = iter.peek() {
        if c.is_whitespace() {
            iter.next();
            continue;
        }
        if c == '"' {
            iter.next();
            let mut text = String::new();
            let mut closed = false;
            while let Some((_, c)) = iter.next() {
                match c {
                    '\\' => {
                        if let Some((_, e)) = iter.next() {
                            text.push(e);
                        }
                    }
                    '"' => {
                        closed = true;
                        break;
                    }
                    _ => text.push(c),
                }
            }
            if !closed {
                return Err(src.error(base + i, "unterminated string"));
            }
            out.push(Token {
                text,
                offset: base + i,
                quoted: true,
            });
            continue;
        }
        let mut text = String::new();
        while let Some(&(_, c)) = iter.peek() {
            if c.is_whitespace() {
                break;
            }
            text.push(c);
            iter.next();
        }
        out.push(Token {
            text,
            offset: base + i,
            quoted: false,
        });
    }
    Ok(out)
}

fn rate_error(src: &Source, offset: usize, e: RateError) -> ParseError {
    match e {
        RateError::Syntax {
            offset: o, message, ..
        } => src.error(offset + o, format!("invalid rate expression: {message}")),
        other => src.error(offset, other.to_string()),
    }
}

fn number(src: &Source, tok: &Token, text: &str, what: &str) -> Result<f64, ParseError> {
    text.trim()
        .parse::<f64>()
        .map_err(|_| src.error(tok.offset, format!("invalid {what} `{text}`")))
}

fn gate_kind(word: &str) -> Option<(GateKind, Option<usize>)> {
    let lower = word.to_ascii_lowercase();
    let kind = match lower.as_str() {
        "and" => GateKind::And,
        "or" => GateKind::Or,
        "pand" => GateKind::Pand,
        "seq" => GateKind::Seq,
        "wsp" | "csp" | "hsp" | "spare" => GateKind::Spare,
        _ => {
            if let Some(k) = lower.strip_prefix("vot") {
                return k.parse().ok().map(|k| (GateKind::Vot(k), None));
            }
            let (k, n) = lower.split_once("of")?;
            return Some((GateKind::Vot(k.parse().ok()?), Some(n.parse().ok()?)));
        }
    };
    Some((kind, None))
}

pub fn parse(text: &str) -> Result<Dft, ParseError> {
    parse_builder(text)?.build().map_err(ParseError::from)
}

/// Parses into a builder without resolving references.
pub fn parse_builder(text: &str) -> Result<DftBuilder, ParseError> {
    let src = Source { text };
    let mut b = DftBuilder::new();
    let mut top_seen = false;
    for (start, stmt) in statements(&src)? {
        let toks = tokenize(&src, start, &stmt)?;
        let Some(first) = toks.first() else { continue };
        if !first.quoted {
            match first.text.as_str() {
                "toplevel" => {
                    if toks.len() != 2 {
                        return Err(src.error(first.offset, "expected `toplevel <name>`"));
                    }
                    if top_seen {
                        return Err(src.error(first.offset, "top-level event declared twice"));
                    }
                    top_seen = true;
                    b.top(&toks[1].text);
                    continue;
                }
                "param" => {
                    // `param name=value`, tolerating spaces around `=`
                    let rest: String = toks[1..].iter().map(|t| t.text.as_str()).collect();
                    let Some((name, value)) = rest.split_once('=') else {
                        return Err(src.error(first.offset, "expected `param <name>=<value>`"));
                    };
                    let value = number(&src, first, value, "parameter value")?;
                    if name.is_empty() {
                        return Err(src.error(first.offset, "missing parameter name"));
                    }
                    b.param(name, value);
                    continue;
                }
                "label" => {
                    let when = stmt.find(" when ").or_else(|| stmt.find("\nwhen "));
                    let (Some(name), Some(w)) = (toks.get(1), when) else {
                        return Err(src.error(first.offset, "expected `label <name> when <expr>`"));
                    };
                    let expr_text = &stmt[w + 6..];
                    let expr = RawLabelExpr::parse(expr_text).map_err(|(o, m)| {
                        src.error(start + w + 6 + o, format!("invalid label expression: {m}"))
                    })?;
                    b.label(&name.text, expr);
                    continue;
                }
                _ => {}
            }
        }
        let name = &first.text;
        if b.contains(name) {
            return Err(src.error(first.offset, format!("element `{name}` is declared twice")));
        }
        let Some(kw) = toks.get(1) else {
            return Err(src.error(first.offset, "expected a gate type or attributes"));
        };
        if kw.quoted {
            return Err(src.error(kw.offset, "expected a gate type or attributes"));
        }
        let args: Vec<&str> = toks[2..].iter().map(|t| t.text.as_str()).collect();
        match kw.text.to_ascii_lowercase().as_str() {
            "fdep" | "adep" => {
                if args.len() < 2 {
                    return Err(src.error(kw.offset, "dependency needs a trigger and dependents"));
                }
                if kw.text.eq_ignore_ascii_case("fdep") {
                    b.fdep(name, args[0], &args[1..]);
                } else {
                    b.adep(name, args[0], &args[1..]);
                }
            }
            w => {
                if let Some((kind, n)) = gate_kind(w) {
                    if let Some(n) = n {
                        if n != args.len() {
                            return Err(src.error(
                                kw.offset,
                                format!(
                                    "`{}` announces {n} children, found {}",
                                    kw.text,
                                    args.len()
                                ),
                            ));
                        }
                    }
                    b.gate(name, kind, &args);
                } else {
                    let be = basic_event(&src, &toks[1..])?;
                    b.basic(name, be);
                }
            }
        }
    }
    if !top_seen {
        return Err(src.error(text.len(), "no `toplevel` statement"));
    }
    Ok(b)
}

fn basic_event(src: &Source, attrs: &[Token]) -> Result<BasicEvent, ParseError> {
    let mut rate = None;
    let mut be = BasicEvent::with_rate(0.0);
    for t in attrs {
        let (key, value) = match t.text.split_once('=') {
            Some((k, v)) => (k, Some(v)),
            None => (t.text.as_str(), None),
        };
        match (key.to_ascii_lowercase().as_str(), value) {
            ("lambda" | "rate", Some(v)) => {
                let expr =
                    RateExpr::parse(v).map_err(|e| rate_error(src, t.offset + key.len() + 1, e))?;
                rate = Some(expr);
            }
            ("dorm" | "dormancy", Some(v)) => be.dormancy = number(src, t, v, "dormancy")?,
            ("transient", None) => be.transient = true,
            ("dummy", None) => be.dummy = true,
            _ => {
                return Err(src.error(
                    t.offset,
                    format!("unknown gate type or attribute `{}`", t.text),
                ))
            }
        }
    }
    match rate {
        Some(r) => be.rate = r,
        None if be.dummy => be.rate = RateExpr::zero(),
        None => {
            let at = attrs.first().map_or(0, |t| t.offset);
            return Err(src.error(at, "basic event needs `lambda=<rate>`"));
        }
    }
    Ok(be)
}

pub fn serialize(dft: &Dft) -> String {
    let mut s = String::new();
    for (k, v) in dft.parameters() {
        let _ = writeln!(s, "param {k}={v:?};");
    }
    let _ = writeln!(s, "toplevel {};", quote(dft.name(dft.top())));
    let names = |ids: &[crate::dft::ElementId]| {
        ids.iter()
            .map(|&c| quote(dft.name(c)))
            .collect::<Vec<_>>()
            .join(" ")
    };
    for e in dft.elements() {
        let _ = write!(s, "{}", quote(&e.name));
        match &e.kind {
            ElementKind::Gate(g) => {
                let kw = match g.kind {
                    GateKind::And => "and".to_string(),
                    GateKind::Or => "or".to_string(),
                    GateKind::Vot(k) => format!("{k}of{}", g.children.len()),
                    GateKind::Pand => "pand".to_string(),
                    GateKind::Seq => "seq".to_string(),
                    GateKind::Spare => "wsp".to_string(),
                };
                let _ = write!(s, " {kw} {}", names(&g.children));
            }
            ElementKind::Dependency(d) => {
                let kw = match d.kind {
                    crate::dft::DependencyKind::Functional => "fdep",
                    crate::dft::DependencyKind::Activation => "adep",
                };
                let _ = write!(
                    s,
                    " {kw} {} {}",
                    quote(dft.name(d.trigger)),
                    names(&d.targets)
                );
            }
            ElementKind::Basic(be) => {
                let _ = write!(s, " lambda={}", be.rate);
                if be.dormancy != 1.0 {
                    let _ = write!(s, " dorm={:?}", be.dormancy);
                }
                if be.transient {
                    s.push_str(" transient");
                }
                if be.dummy {
                    s.push_str(" dummy");
                }
            }
        }
        s.push_str(";\n");
    }
    for l in dft.labels() {
        let name = |id| dft.name(id).to_string();
        let _ = writeln!(
            s,
            "label {} when {};",
            quote(&l.name),
            l.expr.display(&name)
        );
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::fixtures;

    #[test]
    fn round_trip_fixtures() {
        for d in [
            fixtures::f_and(),
            fixtures::f_vot(),
            fixtures::d_wsp(),
            fixtures::f_trans(),
        ] {
            let text = serialize(&d);
            assert_eq!(parse(&text).unwrap(), d, "{text}");
        }
    }

    #[test]
    fn full_syntax() {
        let text = r#"
            // a comment; with a semicolon
            param c = 0.9;
            param mu=2;
            toplevel "T";
            "T" 2of3 A B "C c";
            A lambda=(1-c)*mu dorm=0.5;
            B lambda=1e-3 transient;
            "C c" csp D E;
            D lambda=1;
            E dummy;
            F fdep A E;
            label deg when failed(A) & !failed("C c");
        "#;
        let d = parse(text).unwrap();
        assert_eq!(d.len(), 7);
        assert_eq!(d.parameters()["c"], 0.9);
        let a = d.element(d.id("A").unwrap()).as_basic().unwrap();
        assert_eq!(a.dormancy, 0.5);
        assert_eq!(a.rate.to_string(), "(1.0-c)*mu");
        assert!(d.label("deg").is_some());
        assert_eq!(parse(&serialize(&d)).unwrap(), d);
    }

    #[test]
    fn errors_have_positions() {
        let err = parse("toplevel T;\nT and A;\nA lambda=1+*2;").unwrap_err();
        assert_eq!(
            err,
            ParseError::Syntax {
                line: 3,
                column: 12,
                message: "invalid rate expression: expected a number, parameter or `(`".into()
            }
        );
        let err = parse("toplevel T;\nT and A;\nA frobnicate;").unwrap_err();
        assert!(
            matches!(
                err,
                ParseError::Syntax {
                    line: 3,
                    column: 3,
                    ..
                }
            ),
            "{err}"
        );
        assert!(matches!(
            parse("toplevel T;\nT and A;"),
            Err(ParseError::Build(BuildError::UnknownReference { .. }))
        ));
        assert!(matches!(
            parse("toplevel T;\nT and A"),
            Err(ParseError::Syntax {
                line: 2,
                column: 1,
                ..
            })
        ));
    }
}

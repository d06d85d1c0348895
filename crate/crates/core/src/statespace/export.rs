use std::fmt::Write as _;

use super::Ctmc;

/// One `source,target,rate` line per transition, after a header line.
pub fn to_transition_list(c: &Ctmc) -> String {
    let mut s = String::from("source,target,rate\n");
    for src in 0..c.len() {
        for (t, r) in c.chain.row(src) {
            let _ = writeln!(s, "{src},{t},{r:?}");
        }
    }
    s
}

fn state_labels(c: &Ctmc, s: usize) -> Vec<&str> {
    let mut out = Vec::new();
    if s == c.initial {
        out.push("init");
    }
    if c.failed.contains(s) {
        out.push("failed");
    }
    if c.has_degraded_label && c.degraded.contains(s) {
        out.push("degraded");
    }
    for (name, bits) in &c.labels {
        if bits.contains(s) {
            out.push(name);
        }
    }
    out
}

pub fn to_dot(c: &Ctmc) -> String {
    let mut s = String::from("digraph ctmc {\n");
    for v in 0..c.len() {
        let labels = state_labels(c, v).join(",");
        let desc = c.describe(v).replace('"', "\\\"");
        let shape = if c.failed.contains(v) {
            "doublecircle"
        } else {
            "circle"
        };
        let _ = writeln!(
            s,
            "  {v} [shape={shape}, label=\"{v}\\n{desc}\\n{{{labels}}}\"];"
        );
    }
    for v in 0..c.len() {
        for (t, r) in c.chain.row(v) {
            let _ = writeln!(s, "  {v} -> {t} [label=\"{r:?}\"];");
        }
    }
    s.push_str("}\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::{fixtures, Valuation};
    use crate::statespace::{build_ctmc, BuildOptions};

    #[test]
    fn cold_spare_exports() {
        let c = build_ctmc(
            &fixtures::f_csp(),
            &Valuation::new(),
            &BuildOptions::default(),
        )
        .unwrap();
        let dot = to_dot(&c);
        assert_eq!(dot.matches("shape=").count(), 3);
        assert_eq!(dot.matches("->").count(), 2);
        assert_eq!(
            to_transition_list(&c),
            "source,target,rate\n0,1,1.0\n1,2,1.0\n"
        );
    }
}

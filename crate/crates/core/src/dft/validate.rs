//! Well-formedness rules beyond name resolution.

use std::fmt;

use super::{DependencyKind, Dft, ElementId, ElementKind, GateKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Rule {
    VotThreshold,
    Cycle,
    EmptyGate,
    DuplicateChild,
    SeqChildren,
    SeqPosition,
    DependencyPosition,
    DependencyTargets,
    SpareModules,
    DummyRate,
    Dormancy,
    TransientDummy,
    UndeclaredParameter,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Diagnostic {
    pub rule: Rule,
    pub element: Option<String>,
    pub message: String,
}

impl fmt::Display for Diagnostic {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.element {
            Some(e) => write!(f, "{e}: {}", self.message),
            None => write!(f, "{}", self.message),
        }
    }
}

/// Returns all rule violations; an empty result means the tree is well-formed.
pub fn validate(dft: &Dft) -> Vec<Diagnostic> {
    let mut out = Vec::new();
    let mut diag = |rule, id: Option<ElementId>, message: String| {
        out.push(Diagnostic {
            rule,
            element: id.map(|i| dft.name(i).to_string()),
            message,
        });
    };

    let n = dft.len();
    let mut spare_parent_count = vec![0usize; n];

    for id in dft.ids() {
        match &dft.element(id).kind {
            ElementKind::Basic(be) => {
                if be.dummy && !be.rate.is_zero_literal() {
                    diag(
                        Rule::DummyRate,
                        Some(id),
                        "dummy event must have rate 0".into(),
                    );
                }
                if !(0.0..=1.0).contains(&be.dormancy) {
                    diag(
                        Rule::Dormancy,
                        Some(id),
                        format!("dormancy {} outside [0, 1]", be.dormancy),
                    );
                }
                if be.transient && be.dummy {
                    diag(
                        Rule::TransientDummy,
                        Some(id),
                        "dummy event cannot be transient".into(),
                    );
                }
                let mut params = Vec::new();
                be.rate.parameters(&mut params);
                for p in params {
                    if !dft.parameters().contains_key(&p) {
                        diag(
                            Rule::UndeclaredParameter,
                            Some(id),
                            format!("rate uses undeclared parameter `{p}`"),
                        );
                    }
                }
            }
            ElementKind::Gate(g) => {
                if g.children.is_empty() {
                    diag(Rule::EmptyGate, Some(id), "gate has no children".into());
                }
                if let GateKind::Vot(k) = g.kind {
                    if k == 0 || k as usize > g.children.len() {
                        diag(
                            Rule::VotThreshold,
                            Some(id),
                            format!("threshold {k} not in 1..={}", g.children.len()),
                        );
                    }
                }
                for (i, c) in g.children.iter().enumerate() {
                    if g.children[..i].contains(c) {
                        diag(
                            Rule::DuplicateChild,
                            Some(id),
                            format!("child `{}` listed twice", dft.name(*c)),
                        );
                    }
                    if g.kind == GateKind::Spare {
                        spare_parent_count[c.index()] += 1;
                    }
                    match &dft.element(*c).kind {
                        ElementKind::Dependency(_) => diag(
                            Rule::DependencyPosition,
                            Some(id),
                            format!("dependency `{}` cannot be a gate child", dft.name(*c)),
                        ),
                        ElementKind::Gate(cg) if cg.kind == GateKind::Seq => diag(
                            Rule::SeqPosition,
                            Some(id),
                            format!(
                                "sequence enforcer `{}` cannot be a gate child",
                                dft.name(*c)
                            ),
                        ),
                        ElementKind::Basic(_) | ElementKind::Gate(_) => {}
                    }
                    if g.kind == GateKind::Seq && !dft.element(*c).is_basic() {
                        diag(
                            Rule::SeqChildren,
                            Some(id),
                            format!(
                                "sequence enforcer child `{}` is not a basic event",
                                dft.name(*c)
                            ),
                        );
                    }
                }
            }
            ElementKind::Dependency(d) => {
                if matches!(dft.element(d.trigger).kind, ElementKind::Dependency(_)) {
                    diag(
                        Rule::DependencyPosition,
                        Some(id),
                        "trigger cannot be a dependency".into(),
                    );
                }
                if d.targets.is_empty() {
                    diag(
                        Rule::EmptyGate,
                        Some(id),
                        "dependency has no dependents".into(),
                    );
                }
                for t in &d.targets {
                    let ok = match d.kind {
                        DependencyKind::Functional => dft.element(*t).is_basic(),
                        DependencyKind::Activation => {
                            !matches!(dft.element(*t).kind, ElementKind::Dependency(_))
                        }
                    };
                    if !ok {
                        let what = match d.kind {
                            DependencyKind::Functional => "a basic event",
                            DependencyKind::Activation => "a gate or basic event",
                        };
                        diag(
                            Rule::DependencyTargets,
                            Some(id),
                            format!("dependent `{}` is not {what}", dft.name(*t)),
                        );
                    }
                }
            }
        }
    }

    match &dft.element(dft.top()).kind {
        ElementKind::Dependency(_) => diag(
            Rule::DependencyPosition,
            Some(dft.top()),
            "top-level event cannot be a dependency".into(),
        ),
        ElementKind::Gate(g) if g.kind == GateKind::Seq => diag(
            Rule::SeqPosition,
            Some(dft.top()),
            "top-level event cannot be a sequence enforcer".into(),
        ),
        _ => {}
    }

    let cycle = find_cycle(dft);
    if let Some(c) = cycle {
        diag(
            Rule::Cycle,
            Some(c),
            "cycle detected through this element".into(),
        );
    }

    // Spare children are used exclusively by one spare gate, and the modules
    // below distinct children of a spare do not overlap.
    for id in dft.ids() {
        if spare_parent_count[id.index()] > 1 {
            diag(
                Rule::SpareModules,
                Some(id),
                "element is a child of several spare gates".into(),
            );
        }
    }
    if cycle.is_none() {
        for id in dft.ids() {
            let Some(g) = dft.element(id).as_gate() else {
                continue;
            };
            if g.kind != GateKind::Spare {
                continue;
            }
            let mut owner: Vec<Option<ElementId>> = vec![None; n];
            for &c in &g.children {
                for m in module(dft, c) {
                    match owner[m.index()] {
                        Some(o) if o != c => diag(
                            Rule::SpareModules,
                            Some(id),
                            format!(
                                "`{}` is shared by the modules of `{}` and `{}`",
                                dft.name(m),
                                dft.name(o),
                                dft.name(c)
                            ),
                        ),
                        _ => owner[m.index()] = Some(c),
                    }
                }
            }
        }
    }
    out
}

/// Elements reachable from `root` through gate children.
pub(crate) fn module(dft: &Dft, root: ElementId) -> Vec<ElementId> {
    let mut seen = vec![false; dft.len()];
    let mut stack = vec![root];
    let mut out = Vec::new();
    while let Some(x) = stack.pop() {
        if std::mem::replace(&mut seen[x.index()], true) {
            continue;
        }
        out.push(x);
        if let Some(g) = dft.element(x).as_gate() {
            stack.extend(g.children.iter().copied());
        }
    }
    out
}

fn find_cycle(dft: &Dft) -> Option<ElementId> {
    // 0 = new, 1 = on stack, 2 = done
    let mut color = vec![0u8; dft.len()];
    for root in dft.ids() {
        if color[root.index()] != 0 {
            continue;
        }
        let mut stack: Vec<(ElementId, usize)> = vec![(root, 0)];
        color[root.index()] = 1;
        while let Some(&mut (x, ref mut i)) = stack.last_mut() {
            let children: &[ElementId] = dft.element(x).as_gate().map_or(&[], |g| &g.children);
            if *i < children.len() {
                let c = children[*i];
                *i += 1;
                match color[c.index()] {
                    0 => {
                        color[c.index()] = 1;
                        stack.push((c, 0));
                    }
                    1 => return Some(c),
                    _ => {}
                }
            } else {
                color[x.index()] = 2;
                stack.pop();
            }
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::super::{fixtures, BasicEvent, DftBuilder};
    use super::*;

    fn rules(b: &mut DftBuilder) -> Vec<Rule> {
        validate(&b.build().unwrap())
            .into_iter()
            .map(|d| d.rule)
            .collect()
    }

    #[test]
    fn fixtures_are_clean() {
        for d in [
            fixtures::f_and(),
            fixtures::f_pand(),
            fixtures::f_wsp(),
            fixtures::d_and(),
        ] {
            assert!(validate(&d).is_empty());
        }
    }

    #[test]
    fn vot_threshold() {
        let r = rules(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Vot(3), &["A", "B"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(1.0)),
        );
        assert_eq!(r, vec![Rule::VotThreshold]);
    }

    #[test]
    fn cycle() {
        let r = rules(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::And, &["G", "A"])
                .gate("G", GateKind::Or, &["T"])
                .basic("A", BasicEvent::with_rate(1.0)),
        );
        assert!(r.contains(&Rule::Cycle));
    }

    #[test]
    fn seq_and_fdep_shapes() {
        let r = rules(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Or, &["A", "G"])
                .gate("G", GateKind::And, &["B"])
                .gate("S", GateKind::Seq, &["A", "G"])
                .fdep("F", "A", &["G"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(1.0)),
        );
        assert!(r.contains(&Rule::SeqChildren));
        assert!(r.contains(&Rule::DependencyTargets));
    }

    #[test]
    fn shared_spare() {
        let r = rules(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::And, &["S1", "S2"])
                .gate("S1", GateKind::Spare, &["A", "C"])
                .gate("S2", GateKind::Spare, &["B", "C"])
                .basic("A", BasicEvent::with_rate(1.0))
                .basic("B", BasicEvent::with_rate(1.0))
                .basic("C", BasicEvent::with_rate(1.0)),
        );
        assert_eq!(r, vec![Rule::SpareModules]);
    }

    #[test]
    fn basic_event_attributes() {
        let mut dummy = BasicEvent::dummy();
        dummy.rate = super::super::RateExpr::Const(1.0);
        let r = rules(
            DftBuilder::new()
                .top("T")
                .gate("T", GateKind::Or, &["A", "B", "C"])
                .basic("A", dummy)
                .basic("B", BasicEvent::with_rate(1.0).dormancy(1.5))
                .basic("C", BasicEvent::new(super::super::RateExpr::param("p"))),
        );
        assert_eq!(
            r,
            vec![Rule::DummyRate, Rule::Dormancy, Rule::UndeclaredParameter]
        );
    }
}

//! Measure-preserving simplification of DFTs.
//!
//! Rules, applied to a fixpoint:
//! - flatten: OR below OR and AND below AND are merged into the parent;
//! - single-child AND/OR/VOT gates are replaced by their child;
//! - VOT(1) becomes OR, VOT(n of n) becomes AND;
//! - FDEPs whose trigger failing already fails the top-level event through a
//!   chain of ORs are dropped, and so are never-failing dummy inputs of ORs;
//! - elements that influence nothing are removed.
//!
//! Elements referenced by labels are never removed. Elements touched by
//! activation dependencies keep their position, since activation travels
//! through them.

use std::collections::BTreeSet;

use crate::dft::{
    BasicEvent, Dft, DftBuilder, Element, ElementId, ElementKind, GateKind,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum RewriteRule {
    Flatten,
    SingleChild,
    NormalizeVot,
    RedundantFdep,
    NeverFailingInput,
    Unused,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RewriteReport {
    /// Applied rules with the element each one was applied to.
    pub steps: Vec<(RewriteRule, String)>,
    /// Elements that would have been removed but are referenced by a label.
    pub protected: Vec<String>,
}

struct Work {
    elems: Vec<Option<Element>>,
    top: ElementId,
    in_label: Vec<bool>,
    steps: Vec<(RewriteRule, String)>,
    protected: BTreeSet<String>,
}

impl Work {
    fn live(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.elems.len()).filter(|&i| self.elems[i].is_some())
    }

    fn kind(&self, i: usize) -> &ElementKind {
        &self.elems[i].as_ref().unwrap().kind
    }

    fn name(&self, i: usize) -> String {
        self.elems[i].as_ref().unwrap().name.clone()
    }

    fn children_mut(&mut self, i: usize) -> &mut Vec<ElementId> {
        match &mut self.elems[i].as_mut().unwrap().kind {
            ElementKind::Gate(g) => &mut g.children,
            _ => unreachable!(),
        }
    }

    fn gate_kind(&self, i: usize) -> Option<GateKind> {
        match self.kind(i) {
            ElementKind::Gate(g) => Some(g.kind),
            _ => None,
        }
    }

    /// Gate parents of every element (SEQ counts as a parent).
    fn parents(&self) -> Vec<Vec<usize>> {
        let mut p = vec![Vec::new(); self.elems.len()];
        for i in self.live() {
            if let ElementKind::Gate(g) = self.kind(i) {
                for c in &g.children {
                    p[c.index()].push(i);
                }
            }
        }
        p
    }

    /// (referenced by any dependency, touched by an activation dependency)
    fn dependency_refs(&self) -> (Vec<bool>, Vec<bool>) {
        let mut any = vec![false; self.elems.len()];
        let mut adep = vec![false; self.elems.len()];
        for i in self.live() {
            if let ElementKind::Dependency(d) = self.kind(i) {
                let activation = d.kind == crate::dft::DependencyKind::Activation;
                for x in std::iter::once(d.trigger).chain(d.targets.iter().copied()) {
                    any[x.index()] = true;
                    if activation {
                        adep[x.index()] = true;
                    }
                }
            }
        }
        (any, adep)
    }

    fn step(&mut self, rule: RewriteRule, i: usize) {
        let name = self.name(i);
        self.steps.push((rule, name));
    }

    fn normalize_vot(&mut self) -> bool {
        let mut changed = false;
        for i in self.live().collect::<Vec<_>>() {
            if let ElementKind::Gate(g) = &mut self.elems[i].as_mut().unwrap().kind {
                if let GateKind::Vot(k) = g.kind {
                    let n = g.children.len() as u32;
                    if k == 1 {
                        g.kind = GateKind::Or;
                    } else if k == n {
                        g.kind = GateKind::And;
                    } else {
                        continue;
                    }
                    changed = true;
                    self.step(RewriteRule::NormalizeVot, i);
                }
            }
        }
        changed
    }

    fn flatten(&mut self) -> bool {
        let (_, adep) = self.dependency_refs();
        let mut changed = false;
        for p in self.live().collect::<Vec<_>>() {
            let Some(pk) = self.gate_kind(p) else { continue };
            if !matches!(pk, GateKind::And | GateKind::Or) {
                continue;
            }
            let children = match self.kind(p) {
                ElementKind::Gate(g) => g.children.clone(),
                _ => unreachable!(),
            };
            let mut merged: Vec<ElementId> = Vec::new();
            let mut any = false;
            for c in children {
                let ci = c.index();
                if self.gate_kind(ci) == Some(pk) && !adep[ci] && ci != p {
                    let inner = match self.kind(ci) {
                        ElementKind::Gate(g) => g.children.clone(),
                        _ => unreachable!(),
                    };
                    merged.extend(inner);
                    any = true;
                    self.step(RewriteRule::Flatten, ci);
                } else {
                    merged.push(c);
                }
            }
            if any {
                let mut seen = BTreeSet::new();
                merged.retain(|c| seen.insert(*c));
                *self.children_mut(p) = merged;
                changed = true;
            }
        }
        changed
    }

    fn single_child(&mut self) -> bool {
        let (_, adep) = self.dependency_refs();
        let parents = self.parents();
        for g in self.live().collect::<Vec<_>>() {
            let child = match self.kind(g) {
                ElementKind::Gate(gate)
                    if gate.children.len() == 1
                        && matches!(gate.kind, GateKind::And | GateKind::Or | GateKind::Vot(1)) =>
                {
                    gate.children[0]
                }
                _ => continue,
            };
            if adep[g] || adep[child.index()] && g == self.top.index() {
                continue;
            }
            // replacing must not create duplicate children
            let clash = parents[g].iter().any(|&p| match self.kind(p) {
                ElementKind::Gate(pg) => pg.children.contains(&child),
                _ => false,
            });
            if clash || (parents[g].is_empty() && g != self.top.index()) {
                continue;
            }
            for &p in &parents[g] {
                for c in self.children_mut(p).iter_mut() {
                    if c.index() == g {
                        *c = child;
                    }
                }
            }
            if g == self.top.index() {
                self.top = child;
            }
            self.step(RewriteRule::SingleChild, g);
            return true;
        }
        false
    }

    /// Elements whose failure immediately fails the top-level event.
    fn fatal(&self) -> Vec<bool> {
        let mut fatal = vec![false; self.elems.len()];
        let mut stack = vec![self.top.index()];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut fatal[x], true) {
                continue;
            }
            if let ElementKind::Gate(g) = self.kind(x) {
                if matches!(g.kind, GateKind::Or | GateKind::Vot(1)) {
                    stack.extend(g.children.iter().map(|c| c.index()));
                }
            }
        }
        fatal
    }

    fn redundant_fdeps(&mut self) -> bool {
        let fatal = self.fatal();
        let mut changed = false;
        for i in self.live().collect::<Vec<_>>() {
            if let ElementKind::Dependency(d) = self.kind(i) {
                if d.kind == crate::dft::DependencyKind::Functional
                    && fatal[d.trigger.index()]
                    && !self.in_label[i]
                {
                    self.step(RewriteRule::RedundantFdep, i);
                    self.elems[i] = None;
                    changed = true;
                }
            }
        }
        changed
    }

    fn never_failing_inputs(&mut self) -> bool {
        let (deps, _) = self.dependency_refs();
        let never = |w: &Work, c: ElementId| {
            matches!(w.kind(c.index()), ElementKind::Basic(BasicEvent { dummy: true, .. }))
                && !deps[c.index()]
        };
        let mut changed = false;
        for p in self.live().collect::<Vec<_>>() {
            if self.gate_kind(p) != Some(GateKind::Or) {
                continue;
            }
            let children = match self.kind(p) {
                ElementKind::Gate(g) => g.children.clone(),
                _ => unreachable!(),
            };
            let keep: Vec<ElementId> = children.iter().copied().filter(|&c| !never(self, c)).collect();
            if keep.len() < children.len() && !keep.is_empty() {
                let dropped: Vec<ElementId> =
                    children.iter().copied().filter(|&c| never(self, c)).collect();
                for c in dropped {
                    self.step(RewriteRule::NeverFailingInput, c.index());
                }
                *self.children_mut(p) = keep;
                changed = true;
            }
        }
        changed
    }

    fn unused(&mut self) -> bool {
        let n = self.elems.len();
        // undirected connectivity over gate and dependency edges
        let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
        for i in self.live() {
            match self.kind(i) {
                ElementKind::Gate(g) => {
                    for c in &g.children {
                        adj[i].push(c.index());
                        adj[c.index()].push(i);
                    }
                }
                ElementKind::Dependency(d) => {
                    for x in std::iter::once(d.trigger).chain(d.targets.iter().copied()) {
                        adj[i].push(x.index());
                        adj[x.index()].push(i);
                    }
                }
                ElementKind::Basic(_) => {}
            }
        }
        let mut connected = vec![false; n];
        let mut stack = vec![self.top.index()];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut connected[x], true) {
                continue;
            }
            stack.extend(adj[x].iter().copied());
        }
        let parents = self.parents();
        let (deps, _) = self.dependency_refs();
        let mut changed = false;
        for i in self.live().collect::<Vec<_>>() {
            let orphan = i != self.top.index()
                && parents[i].is_empty()
                && !deps[i]
                && !matches!(self.kind(i), ElementKind::Dependency(_))
                && self.gate_kind(i) != Some(GateKind::Seq);
            if !connected[i] || orphan {
                if self.in_label[i] {
                    let name = self.name(i);
                    self.protected.insert(name);
                    continue;
                }
                self.step(RewriteRule::Unused, i);
                self.elems[i] = None;
                changed = true;
            }
        }
        changed
    }
}

/// Rewrites `dft`; the result has the same measures as the input.
pub fn rewrite(dft: &Dft) -> Dft {
    rewrite_with_report(dft).0
}

pub fn rewrite_with_report(dft: &Dft) -> (Dft, RewriteReport) {
    let mut in_label = vec![false; dft.len()];
    for l in dft.labels() {
        let mut ids = Vec::new();
        l.expr.elements(&mut ids);
        for id in ids {
            in_label[id.index()] = true;
        }
    }
    let mut w = Work {
        elems: dft.elements().iter().cloned().map(Some).collect(),
        top: dft.top(),
        in_label,
        steps: Vec::new(),
        protected: BTreeSet::new(),
    };
    loop {
        let mut changed = w.normalize_vot();
        changed |= w.flatten();
        changed |= w.single_child();
        changed |= w.redundant_fdeps();
        changed |= w.never_failing_inputs();
        changed |= w.unused();
        if !changed {
            break;
        }
    }

    let name = |id: ElementId| dft.name(id).to_string();
    let mut b = DftBuilder::new();
    for (k, v) in dft.parameters() {
        b.param(k, *v);
    }
    b.top(&name(w.top));
    for e in w.elems.iter().flatten() {
        match &e.kind {
            ElementKind::Basic(be) => {
                b.basic(&e.name, be.clone());
            }
            ElementKind::Gate(g) => {
                let c: Vec<String> = g.children.iter().map(|&c| name(c)).collect();
                b.gate(&e.name, g.kind, &c);
            }
            ElementKind::Dependency(d) => {
                let t: Vec<String> = d.targets.iter().map(|&c| name(c)).collect();
                match d.kind {
                    crate::dft::DependencyKind::Functional => b.fdep(&e.name, &name(d.trigger), &t),
                    crate::dft::DependencyKind::Activation => b.adep(&e.name, &name(d.trigger), &t),
                };
            }
        }
    }
    for l in dft.labels() {
        b.label(&l.name, crate::dft::unresolve(&l.expr, dft));
    }
    let out = b.build().expect("rewriting keeps references intact");
    (
        out,
        RewriteReport {
            steps: w.steps,
            protected: w.protected.into_iter().collect(),
        },
    )
}

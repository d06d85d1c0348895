//! Brute-force reference analysis.
//!
//! States are full failure histories (the wave in which every basic event
//! failed), never merged, so the explored space is a tree. Gate status is
//! recomputed from the history on every step and activation is recomputed
//! from the top after every wave. Deliberately simple and slow.

use dftmc::dft::{Dft, DependencyKind, ElementKind, GateKind, Valuation};

struct Model {
    kinds: Vec<ElementKind>,
    rates: Vec<f64>,
    top: usize,
    /// (trigger, targets) for functional dependencies, in element order.
    fdeps: Vec<(usize, Vec<usize>)>,
    adeps: Vec<(usize, Vec<usize>)>,
    /// For each element: SEQ siblings that must fail before it.
    before: Vec<Vec<usize>>,
    after: Vec<Vec<usize>>,
}

#[derive(Clone)]
struct History {
    wave: Vec<Option<u32>>,
    waves: u32,
    active: Vec<bool>,
}

/// Explicit history tree: `failed` per node and outgoing `(child, rate)`.
pub struct Tree {
    pub failed: Vec<bool>,
    pub edges: Vec<Vec<(usize, f64)>>,
}

impl Model {
    fn new(dft: &Dft) -> Self {
        let val = dft.valuation(&Valuation::new());
        let n = dft.len();
        let mut m = Model {
            kinds: dft.elements().iter().map(|e| e.kind.clone()).collect(),
            rates: vec![0.0; n],
            top: dft.top().index(),
            fdeps: vec![],
            adeps: vec![],
            before: vec![vec![]; n],
            after: vec![vec![]; n],
        };
        for (i, e) in dft.elements().iter().enumerate() {
            match &e.kind {
                ElementKind::Basic(b) => m.rates[i] = b.rate.eval(&val).unwrap(),
                ElementKind::Gate(g) if g.kind == GateKind::Seq => {
                    let c: Vec<usize> = g.children.iter().map(|c| c.index()).collect();
                    for (j, &x) in c.iter().enumerate() {
                        m.before[x].extend(&c[..j]);
                        m.after[x].extend(&c[j + 1..]);
                    }
                }
                ElementKind::Gate(_) => {}
                ElementKind::Dependency(d) => {
                    let t = (d.trigger.index(), d.targets.iter().map(|x| x.index()).collect());
                    match d.kind {
                        DependencyKind::Functional => m.fdeps.push(t),
                        DependencyKind::Activation => m.adeps.push(t),
                    }
                }
            }
        }
        m
    }

    /// Wave in which each element failed, if it did.
    fn times(&self, h: &History) -> Vec<Option<u32>> {
        let mut memo: Vec<Option<Option<u32>>> = vec![None; self.kinds.len()];
        (0..self.kinds.len()).map(|e| self.time(e, h, &mut memo)).collect()
    }

    fn time(&self, e: usize, h: &History, memo: &mut Vec<Option<Option<u32>>>) -> Option<u32> {
        if let Some(t) = memo[e] {
            return t;
        }
        let t = match &self.kinds[e] {
            ElementKind::Basic(_) => h.wave[e],
            ElementKind::Dependency(_) => None,
            ElementKind::Gate(g) => {
                let ts: Vec<Option<u32>> =
                    g.children.iter().map(|c| self.time(c.index(), h, memo)).collect();
                let all = ts.iter().all(|t| t.is_some());
                let mut done: Vec<u32> = ts.iter().flatten().copied().collect();
                match g.kind {
                    GateKind::And | GateKind::Spare => {
                        if all { done.iter().max().copied() } else { None }
                    }
                    GateKind::Or => done.iter().min().copied(),
                    GateKind::Vot(k) => {
                        done.sort();
                        done.get(k as usize - 1).copied()
                    }
                    GateKind::Pand => {
                        if all && done.windows(2).all(|w| w[0] <= w[1]) {
                            done.last().copied()
                        } else {
                            None
                        }
                    }
                    GateKind::Seq => None,
                }
            }
        };
        memo[e] = Some(t);
        t
    }

    fn blocked(&self, h: &History, e: usize) -> bool {
        self.before[e].iter().any(|&l| h.wave[l].is_none())
    }

    fn activate(&self, h: &mut History, times: &[Option<u32>]) {
        let mut seen = vec![false; self.kinds.len()];
        let mut stack = vec![self.top];
        while let Some(x) = stack.pop() {
            if std::mem::replace(&mut seen[x], true) {
                continue;
            }
            h.active[x] = true;
            if let ElementKind::Gate(g) = &self.kinds[x] {
                match g.kind {
                    GateKind::Seq => {}
                    GateKind::Spare => {
                        if let Some(c) = g.children.iter().find(|c| times[c.index()].is_none()) {
                            stack.push(c.index());
                        }
                    }
                    _ => stack.extend(g.children.iter().map(|c| c.index())),
                }
            }
            for (src, targets) in &self.adeps {
                if *src == x {
                    stack.extend(targets);
                }
            }
        }
    }

    fn initial(&self) -> History {
        let mut h = History {
            wave: vec![None; self.kinds.len()],
            waves: 0,
            active: vec![false; self.kinds.len()],
        };
        let t = self.times(&h);
        self.activate(&mut h, &t);
        h
    }

    fn fail(&self, mut h: History, be: usize) -> History {
        let mut queue = std::collections::VecDeque::from([be]);
        while let Some(x) = queue.pop_front() {
            if h.wave[x].is_some() {
                continue;
            }
            let w = h.waves;
            h.wave[x] = Some(w);
            h.waves += 1;
            let times = self.times(&h);
            let newly: Vec<usize> = (0..times.len()).filter(|&e| times[e] == Some(w)).collect();
            for (trigger, targets) in &self.fdeps {
                if !newly.contains(trigger) {
                    continue;
                }
                for &t in targets {
                    if h.wave[t].is_none() && !queue.contains(&t) && !self.blocked(&h, t) {
                        queue.push_back(t);
                    }
                }
            }
            for &e in &newly {
                for &r in &self.after[e] {
                    let triggered = self
                        .fdeps
                        .iter()
                        .any(|(tr, ts)| ts.contains(&r) && times[*tr].is_some());
                    if h.wave[r].is_none() && !queue.contains(&r) && !self.blocked(&h, r) && triggered
                    {
                        queue.push_back(r);
                    }
                }
            }
            self.activate(&mut h, &times);
        }
        h
    }

    fn top_failed(&self, h: &History) -> bool {
        self.times(h)[self.top].is_some()
    }

    fn explore(&self, h: History, tree: &mut Tree) -> usize {
        let id = tree.failed.len();
        let failed = self.top_failed(&h);
        tree.failed.push(failed);
        tree.edges.push(vec![]);
        if failed {
            return id;
        }
        let mut edges = vec![];
        for (b, k) in self.kinds.iter().enumerate() {
            let ElementKind::Basic(be) = k else { continue };
            if h.wave[b].is_some() || be.dummy || self.blocked(&h, b) {
                continue;
            }
            let rate = if h.active[b] { self.rates[b] } else { self.rates[b] * be.dormancy };
            if rate <= 0.0 {
                continue;
            }
            let next = self.fail(h.clone(), b);
            if be.transient && !self.top_failed(&next) {
                continue;
            }
            edges.push((self.explore(next, tree), rate));
        }
        tree.edges[id] = edges;
        id
    }
}

pub fn history_tree(dft: &Dft) -> Tree {
    let m = Model::new(dft);
    let mut tree = Tree { failed: vec![], edges: vec![] };
    let h = m.initial();
    m.explore(h, &mut tree);
    tree
}

impl Tree {
    /// P(top failed by t) from the root, by fourth-order Runge–Kutta on the
    /// forward equations.
    pub fn unreliability(&self, t: f64) -> f64 {
        let n = self.failed.len();
        let max_exit = self
            .edges
            .iter()
            .map(|e| e.iter().map(|x| x.1).sum::<f64>())
            .fold(0.0, f64::max);
        if max_exit == 0.0 || t == 0.0 {
            return if self.failed[0] { 1.0 } else { 0.0 };
        }
        let steps = ((t * max_exit / 0.02).ceil() as usize).max(1);
        let h = t / steps as f64;
        let deriv = |p: &[f64]| {
            let mut d = vec![0.0; n];
            for (s, es) in self.edges.iter().enumerate() {
                for &(c, r) in es {
                    d[s] -= r * p[s];
                    d[c] += r * p[s];
                }
            }
            d
        };
        let axpy = |p: &[f64], k: &[f64], a: f64| -> Vec<f64> {
            p.iter().zip(k).map(|(x, y)| x + a * y).collect()
        };
        let mut p = vec![0.0; n];
        p[0] = 1.0;
        for _ in 0..steps {
            let k1 = deriv(&p);
            let k2 = deriv(&axpy(&p, &k1, h / 2.0));
            let k3 = deriv(&axpy(&p, &k2, h / 2.0));
            let k4 = deriv(&axpy(&p, &k3, h));
            for i in 0..n {
                p[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
        }
        (0..n).filter(|&s| self.failed[s]).map(|s| p[s]).sum()
    }

    /// Mean time to failure; infinite when an operational dead end is
    /// reachable.
    pub fn mttf(&self) -> f64 {
        let n = self.failed.len();
        let mut m = vec![0.0; n];
        // children are always created after their parent
        for s in (0..n).rev() {
            if self.failed[s] {
                continue;
            }
            let exit: f64 = self.edges[s].iter().map(|e| e.1).sum();
            if exit == 0.0 {
                m[s] = f64::INFINITY;
                continue;
            }
            let next: f64 = self.edges[s].iter().map(|&(c, r)| r * m[c]).sum();
            m[s] = (1.0 + next) / exit;
        }
        m[0]
    }
}

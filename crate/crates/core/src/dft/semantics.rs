//! Operational semantics: markings, activation and failure propagation.
//!
//! A [`Marking`] records, for every element, whether it has failed, whether
//! it is fail-safe (priority-AND gates only), and whether it is active. A
//! failure step fails one basic event and then runs propagation waves: gate
//! statuses are recomputed bottom-up, spares switch to their next operational
//! child, and functional dependents cascade one at a time in FIFO order.
//!
//! Only the bits that are not derivable from others enter the canonical
//! [`StateKey`]: failed basic events, failed / fail-safe priority-AND gates,
//! and activation of the elements whose activation changes a rate.

use std::cmp::Reverse;
use std::collections::{BTreeMap, BinaryHeap, HashSet, VecDeque};

use fixedbitset::FixedBitSet;
use thiserror::Error;

use super::{DependencyKind, Dft, ElementId, ElementKind, GateKind, RateError, Valuation};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum SemanticsError {
    #[error("unknown element `{0}`")]
    UnknownElement(String),
    #[error("`{0}` is not a basic event")]
    NotABasicEvent(String),
    #[error("`{0}` is listed as failed more than once")]
    AlreadyFailed(String),
    #[error("`{0}` is transient and cannot be part of evidence")]
    TransientEvidence(String),
    #[error("no failure order of the evidence respects the sequence enforcers")]
    SeqViolation,
    #[error(transparent)]
    Rate(#[from] RateError),
}

/// Hashable canonical state identity.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct StateKey(pub Box<[u64]>);

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Marking {
    pub failed: FixedBitSet,
    /// Indexed by element; only priority-AND gates can be fail-safe.
    pub failsafe: FixedBitSet,
    /// Indexed by element; only meaningful for relevant elements.
    pub active: FixedBitSet,
}

impl Marking {
    pub fn is_failed(&self, id: ElementId) -> bool {
        self.failed.contains(id.index())
    }

    pub fn is_active(&self, id: ElementId) -> bool {
        self.active.contains(id.index())
    }
}

#[derive(Debug, Clone)]
enum Node {
    Basic,
    Gate(GateKind, Vec<u32>),
    Dependency,
}

/// Precomputed lookup tables over a [`Dft`] instantiated with concrete rates.
///
/// The tree is expected to pass [`super::validate`].
#[derive(Debug, Clone)]
pub struct Structure {
    n: usize,
    top: u32,
    nodes: Vec<Node>,
    parents: Vec<Vec<u32>>,
    rank: Vec<u32>,
    rate: Vec<f64>,
    dormancy: Vec<f64>,
    transient: FixedBitSet,
    dummy: FixedBitSet,
    basic: Vec<u32>,
    pands: Vec<u32>,
    relevant: Vec<u32>,
    is_relevant: FixedBitSet,
    fdeps: Vec<(u32, Vec<u32>)>,
    fdeps_by_trigger: Vec<Vec<u32>>,
    fdeps_by_dependent: Vec<Vec<u32>>,
    seq_left: Vec<Vec<u32>>,
    seq_right: Vec<Vec<u32>>,
    adeps_by_source: Vec<Vec<u32>>,
    key_words: usize,
}

/// Scratch buffers reused across failure steps.
#[derive(Debug, Default)]
pub struct Scratch {
    heap: BinaryHeap<Reverse<(u32, u32)>>,
    queued: Vec<bool>,
    newly: Vec<u32>,
    visit: Vec<u32>,
    stamp: u32,
    stack: Vec<u32>,
}

impl Scratch {
    fn fresh_stamp(&mut self, n: usize) -> u32 {
        if self.visit.len() != n {
            self.visit = vec![0; n];
            self.stamp = 0;
        }
        self.stamp = self.stamp.wrapping_add(1);
        if self.stamp == 0 {
            self.visit.iter_mut().for_each(|v| *v = 0);
            self.stamp = 1;
        }
        self.stamp
    }
}

impl Structure {
    pub fn new(dft: &Dft, overrides: &Valuation) -> Result<Self, RateError> {
        let n = dft.len();
        let valuation = dft.valuation(overrides);
        let mut nodes = Vec::with_capacity(n);
        let mut parents = vec![Vec::new(); n];
        let mut rate = vec![0.0; n];
        let mut dormancy = vec![1.0; n];
        let mut transient = FixedBitSet::with_capacity(n);
        let mut dummy = FixedBitSet::with_capacity(n);
        let mut basic = Vec::new();
        let mut pands = Vec::new();
        let mut relevant = Vec::new();
        let mut fdeps = Vec::new();
        let mut fdeps_by_trigger = vec![Vec::new(); n];
        let mut fdeps_by_dependent = vec![Vec::new(); n];
        let mut seq_left = vec![Vec::new(); n];
        let mut seq_right = vec![Vec::new(); n];
        let mut adeps_by_source = vec![Vec::new(); n];

        for id in dft.ids() {
            let i = id.index();
            let node = match &dft.element(id).kind {
                ElementKind::Basic(be) => {
                    basic.push(i as u32);
                    rate[i] = if be.dummy {
                        0.0
                    } else {
                        be.rate.eval(&valuation)?
                    };
                    dormancy[i] = be.dormancy;
                    transient.set(i, be.transient);
                    dummy.set(i, be.dummy);
                    if !be.dummy && be.dormancy != 1.0 {
                        relevant.push(i as u32);
                    }
                    Node::Basic
                }
                ElementKind::Gate(g) => {
                    let children: Vec<u32> = g.children.iter().map(|c| c.0).collect();
                    match g.kind {
                        GateKind::Seq => {
                            for w in children.windows(2) {
                                seq_left[w[1] as usize].push(w[0]);
                                seq_right[w[0] as usize].push(w[1]);
                            }
                        }
                        _ => {
                            for &c in &children {
                                parents[c as usize].push(i as u32);
                            }
                        }
                    }
                    if g.kind == GateKind::Pand {
                        pands.push(i as u32);
                    }
                    if g.kind == GateKind::Spare {
                        relevant.push(i as u32);
                    }
                    Node::Gate(g.kind, children)
                }
                ElementKind::Dependency(d) => {
                    let targets: Vec<u32> = d.targets.iter().map(|c| c.0).collect();
                    match d.kind {
                        DependencyKind::Functional => {
                            let f = fdeps.len() as u32;
                            fdeps_by_trigger[d.trigger.index()].push(f);
                            for &t in &targets {
                                fdeps_by_dependent[t as usize].push(f);
                            }
                            fdeps.push((d.trigger.0, targets));
                        }
                        DependencyKind::Activation => {
                            adeps_by_source[d.trigger.index()].extend(targets);
                        }
                    }
                    Node::Dependency
                }
            };
            nodes.push(node);
        }

        // rank = height above the leaves, so children always come first
        let mut rank = vec![u32::MAX; n];
        fn height(x: usize, nodes: &[Node], rank: &mut [u32]) -> u32 {
            if rank[x] != u32::MAX {
                return rank[x];
            }
            let mut stack = vec![(x, 0usize)];
            while let Some(&mut (y, ref mut i)) = stack.last_mut() {
                let children: &[u32] = match &nodes[y] {
                    Node::Gate(_, c) => c,
                    _ => &[],
                };
                if *i < children.len() {
                    let c = children[*i] as usize;
                    *i += 1;
                    if rank[c] == u32::MAX {
                        stack.push((c, 0));
                    }
                } else {
                    rank[y] = children
                        .iter()
                        .map(|&c| rank[c as usize] + 1)
                        .max()
                        .unwrap_or(0);
                    stack.pop();
                }
            }
            rank[x]
        }
        for x in 0..n {
            height(x, &nodes, &mut rank);
        }

        let mut is_relevant = FixedBitSet::with_capacity(n);
        for &r in &relevant {
            is_relevant.insert(r as usize);
        }
        let key_bits = basic.len() + 2 * pands.len() + relevant.len();
        Ok(Structure {
            n,
            top: dft.top().0,
            nodes,
            parents,
            rank,
            rate,
            dormancy,
            transient,
            dummy,
            basic,
            pands,
            relevant,
            is_relevant,
            fdeps,
            fdeps_by_trigger,
            fdeps_by_dependent,
            seq_left,
            seq_right,
            adeps_by_source,
            key_words: key_bits.div_ceil(64).max(1),
        })
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn top(&self) -> ElementId {
        ElementId(self.top)
    }

    pub fn basic_events(&self) -> impl Iterator<Item = ElementId> + '_ {
        self.basic.iter().map(|&b| ElementId(b))
    }

    pub fn rate(&self, be: ElementId) -> f64 {
        self.rate[be.index()]
    }

    pub fn is_transient(&self, be: ElementId) -> bool {
        self.transient.contains(be.index())
    }

    pub fn is_dummy(&self, be: ElementId) -> bool {
        self.dummy.contains(be.index())
    }

    /// Whether the failure of the top-level event depends on failure order.
    pub fn has_pand(&self) -> bool {
        !self.pands.is_empty()
    }

    pub fn top_failed(&self, m: &Marking) -> bool {
        m.failed.contains(self.top as usize)
    }

    /// Whether a sequence enforcer currently forbids `be` from failing.
    pub fn seq_blocked(&self, m: &Marking, be: ElementId) -> bool {
        self.seq_left[be.index()]
            .iter()
            .any(|&l| !m.failed.contains(l as usize))
    }

    /// Effective rate of `be` in `m`, accounting for dormancy.
    pub fn effective_rate(&self, m: &Marking, be: ElementId) -> f64 {
        let i = be.index();
        if self.is_relevant.contains(i) && !m.active.contains(i) {
            self.rate[i] * self.dormancy[i]
        } else {
            self.rate[i]
        }
    }

    pub fn initial(&self) -> Marking {
        let mut m = Marking {
            failed: FixedBitSet::with_capacity(self.n),
            failsafe: FixedBitSet::with_capacity(self.n),
            active: FixedBitSet::with_capacity(self.n),
        };
        let mut scratch = Scratch::default();
        self.activate(&mut m, self.top, &mut scratch);
        m
    }

    fn activate(&self, m: &mut Marking, root: u32, scratch: &mut Scratch) {
        let stamp = scratch.fresh_stamp(self.n);
        scratch.stack.clear();
        scratch.stack.push(root);
        while let Some(x) = scratch.stack.pop() {
            let xi = x as usize;
            if scratch.visit[xi] == stamp {
                continue;
            }
            scratch.visit[xi] = stamp;
            if self.is_relevant.contains(xi) {
                if m.active.contains(xi) {
                    continue;
                }
                m.active.insert(xi);
            }
            if let Node::Gate(kind, children) = &self.nodes[xi] {
                match kind {
                    GateKind::Seq => {}
                    GateKind::Spare => {
                        if let Some(&c) = children.iter().find(|&&c| !m.failed.contains(c as usize))
                        {
                            scratch.stack.push(c);
                        }
                    }
                    _ => scratch.stack.extend(children.iter().rev()),
                }
            }
            scratch.stack.extend(self.adeps_by_source[xi].iter().rev());
        }
    }

    /// Failure transitions leaving `m`: basic event → effective rate.
    ///
    /// Transient events are included; callers decide what their firing means.
    /// Returns nothing once the top-level event has failed.
    pub fn enabled_failures(&self, m: &Marking) -> Vec<(ElementId, f64)> {
        if self.top_failed(m) {
            return Vec::new();
        }
        let mut out = Vec::new();
        for &b in &self.basic {
            let be = ElementId(b);
            if m.failed.contains(b as usize) || self.dummy.contains(b as usize) {
                continue;
            }
            if self.seq_blocked(m, be) {
                continue;
            }
            let r = self.effective_rate(m, be);
            if r > 0.0 {
                out.push((be, r));
            }
        }
        out
    }

    /// Marking after `be` fails, including all cascades.
    pub fn fail(&self, m: &Marking, be: ElementId, scratch: &mut Scratch) -> Marking {
        let mut next = m.clone();
        self.fail_in_place(&mut next, be, scratch);
        next
    }

    pub fn fail_in_place(&self, m: &mut Marking, be: ElementId, scratch: &mut Scratch) {
        if scratch.queued.len() != self.n {
            scratch.queued = vec![false; self.n];
        }
        let mut fifo: VecDeque<u32> = VecDeque::new();
        fifo.push_back(be.0);
        scratch.queued[be.index()] = true;
        while let Some(b) = fifo.pop_front() {
            scratch.queued[b as usize] = false;
            if m.failed.contains(b as usize) {
                continue;
            }
            self.wave(m, b, scratch);
            // dependents fired by elements that failed in this wave
            let mut fired: Vec<u32> = scratch
                .newly
                .iter()
                .flat_map(|&e| self.fdeps_by_trigger[e as usize].iter().copied())
                .collect();
            fired.sort_unstable();
            fired.dedup();
            for f in fired {
                for &t in &self.fdeps[f as usize].1 {
                    let ti = t as usize;
                    if !m.failed.contains(ti)
                        && !scratch.queued[ti]
                        && !self.seq_blocked(m, ElementId(t))
                    {
                        scratch.queued[ti] = true;
                        fifo.push_back(t);
                    }
                }
            }
            // dependents released by a sequence enforcer
            let newly = std::mem::take(&mut scratch.newly);
            for &e in &newly {
                for &r in &self.seq_right[e as usize] {
                    let ri = r as usize;
                    if m.failed.contains(ri)
                        || scratch.queued[ri]
                        || self.seq_blocked(m, ElementId(r))
                    {
                        continue;
                    }
                    let triggered = self.fdeps_by_dependent[ri]
                        .iter()
                        .any(|&f| m.failed.contains(self.fdeps[f as usize].0 as usize));
                    if triggered {
                        scratch.queued[ri] = true;
                        fifo.push_back(r);
                    }
                }
            }
            scratch.newly = newly;
        }
        scratch.newly.clear();
    }

    /// Fails one basic event and propagates through gates; collects the
    /// newly failed elements in `scratch.newly`.
    fn wave(&self, m: &mut Marking, b: u32, scratch: &mut Scratch) {
        scratch.newly.clear();
        m.failed.insert(b as usize);
        scratch.newly.push(b);
        let mut spares_touched: Vec<u32> = Vec::new();
        let heap = &mut scratch.heap;
        heap.clear();
        for &p in &self.parents[b as usize] {
            heap.push(Reverse((self.rank[p as usize], p)));
        }
        let mut last = u32::MAX;
        while let Some(Reverse((_, g))) = heap.pop() {
            if g == last {
                continue;
            }
            last = g;
            let gi = g as usize;
            if m.failed.contains(gi) || m.failsafe.contains(gi) {
                continue;
            }
            let Node::Gate(kind, children) = &self.nodes[gi] else {
                continue;
            };
            let failed = |c: &u32| m.failed.contains(*c as usize);
            let now_failed = match kind {
                GateKind::And => children.iter().all(failed),
                GateKind::Or => children.iter().any(failed),
                GateKind::Vot(k) => children.iter().filter(|c| failed(c)).count() >= *k as usize,
                GateKind::Spare => {
                    spares_touched.push(g);
                    children.iter().all(failed)
                }
                GateKind::Pand => {
                    let mut seen_operational = false;
                    let mut failsafe = false;
                    for c in children {
                        if failed(c) {
                            if seen_operational {
                                failsafe = true;
                                break;
                            }
                        } else {
                            seen_operational = true;
                        }
                    }
                    if failsafe {
                        m.failsafe.insert(gi);
                        false
                    } else {
                        !seen_operational
                    }
                }
                GateKind::Seq => false,
            };
            if now_failed {
                m.failed.insert(gi);
                scratch.newly.push(g);
                for &p in &self.parents[gi] {
                    heap.push(Reverse((self.rank[p as usize], p)));
                }
            }
        }
        for s in spares_touched {
            let si = s as usize;
            if m.active.contains(si) && !m.failed.contains(si) {
                if let Node::Gate(_, children) = &self.nodes[si] {
                    if let Some(&c) = children.iter().find(|&&c| !m.failed.contains(c as usize)) {
                        self.activate(m, c, scratch);
                    }
                }
            }
        }
    }

    pub fn key(&self, m: &Marking) -> StateKey {
        let mut words = vec![0u64; self.key_words];
        let mut bit = 0usize;
        let mut push = |on: bool| {
            if on {
                words[bit / 64] |= 1 << (bit % 64);
            }
            bit += 1;
        };
        for &b in &self.basic {
            push(m.failed.contains(b as usize));
        }
        for &p in &self.pands {
            push(m.failed.contains(p as usize));
            push(m.failsafe.contains(p as usize));
        }
        for &r in &self.relevant {
            push(m.active.contains(r as usize));
        }
        StateKey(words.into_boxed_slice())
    }

    /// Reconstructs the full marking from its canonical key.
    pub fn decode(&self, key: &StateKey) -> Marking {
        let mut m = Marking {
            failed: FixedBitSet::with_capacity(self.n),
            failsafe: FixedBitSet::with_capacity(self.n),
            active: FixedBitSet::with_capacity(self.n),
        };
        let mut bit = 0usize;
        let mut next = || {
            let on = key.0[bit / 64] >> (bit % 64) & 1 == 1;
            bit += 1;
            on
        };
        for &b in &self.basic {
            m.failed.set(b as usize, next());
        }
        for &p in &self.pands {
            m.failed.set(p as usize, next());
            m.failsafe.set(p as usize, next());
        }
        for &r in &self.relevant {
            m.active.set(r as usize, next());
        }
        let mut order: Vec<u32> = (0..self.n as u32)
            .filter(|&i| matches!(self.nodes[i as usize], Node::Gate(..)))
            .collect();
        order.sort_by_key(|&g| self.rank[g as usize]);
        for g in order {
            let gi = g as usize;
            let Node::Gate(kind, children) = &self.nodes[gi] else {
                unreachable!()
            };
            let failed = |c: &u32| m.failed.contains(*c as usize);
            let f = match kind {
                GateKind::And | GateKind::Spare => children.iter().all(failed),
                GateKind::Or => children.iter().any(failed),
                GateKind::Vot(k) => children.iter().filter(|c| failed(c)).count() >= *k as usize,
                GateKind::Pand => continue,
                GateKind::Seq => false,
            };
            m.failed.set(gi, f);
        }
        m
    }
}

/// Convenience wrapper: failure transitions of `m` by element.
pub fn enabled_failures(structure: &Structure, m: &Marking) -> BTreeMap<ElementId, f64> {
    structure.enabled_failures(m).into_iter().collect()
}

/// Markings reached from the initial marking by failing exactly the named
/// basic events, over every order the sequence enforcers allow.
///
/// Events failed by a cascade before their turn are simply skipped. The
/// result is deduplicated and sorted by key.
pub fn evaluate_marking(
    dft: &Dft,
    structure: &Structure,
    failed: &[&str],
) -> Result<Vec<Marking>, SemanticsError> {
    let mut ids: Vec<ElementId> = Vec::new();
    for name in failed {
        let id = dft
            .id(name)
            .ok_or_else(|| SemanticsError::UnknownElement(name.to_string()))?;
        let be = dft
            .element(id)
            .as_basic()
            .ok_or_else(|| SemanticsError::NotABasicEvent(name.to_string()))?;
        if be.transient {
            return Err(SemanticsError::TransientEvidence(name.to_string()));
        }
        if ids.contains(&id) {
            return Err(SemanticsError::AlreadyFailed(name.to_string()));
        }
        ids.push(id);
    }
    let mut scratch = Scratch::default();
    let mut results: BTreeMap<StateKey, Marking> = BTreeMap::new();
    let mut seen: HashSet<(StateKey, Vec<ElementId>)> = HashSet::new();
    let mut stack = vec![(structure.initial(), ids)];
    while let Some((m, mut rest)) = stack.pop() {
        rest.retain(|&b| !m.is_failed(b));
        if !seen.insert((structure.key(&m), rest.clone())) {
            continue;
        }
        if rest.is_empty() || structure.top_failed(&m) {
            // a failed top absorbs the remaining evidence
            results.insert(structure.key(&m), m);
            continue;
        }
        for (i, &b) in rest.iter().enumerate() {
            if structure.seq_blocked(&m, b) {
                continue;
            }
            let next = structure.fail(&m, b, &mut scratch);
            let mut r = rest.clone();
            r.remove(i);
            stack.push((next, r));
        }
    }
    if results.is_empty() {
        return Err(SemanticsError::SeqViolation);
    }
    Ok(results.into_values().collect())
}

#[cfg(test)]
mod tests {
    use super::super::{fixtures, BasicEvent, DftBuilder};
    use super::*;

    fn structure(d: &Dft) -> Structure {
        Structure::new(d, &Valuation::new()).unwrap()
    }

    fn fail_seq(s: &Structure, d: &Dft, names: &[&str]) -> Marking {
        let mut scratch = Scratch::default();
        let mut m = s.initial();
        for n in names {
            m = s.fail(&m, d.id(n).unwrap(), &mut scratch);
        }
        m
    }

    #[test]
    fn pand_inclusive_and_failsafe() {
        let d = fixtures::f_pand();
        let s = structure(&d);
        let t = d.top();
        assert!(s.top_failed(&fail_seq(&s, &d, &["A", "B"])));
        let m = fail_seq(&s, &d, &["B"]);
        assert!(m.failsafe.contains(t.index()));
        assert!(!s.top_failed(&fail_seq(&s, &d, &["B", "A"])));

        // simultaneous failure through a dependency counts as in order
        let d = DftBuilder::new()
            .top("T")
            .gate("T", GateKind::Or, &["P", "X"])
            .gate("P", GateKind::Pand, &["A", "B"])
            .fdep("F", "C", &["A", "B"])
            .basic("A", BasicEvent::with_rate(1.0))
            .basic("B", BasicEvent::with_rate(1.0))
            .basic("C", BasicEvent::with_rate(1.0))
            .basic("X", BasicEvent::with_rate(1.0))
            .build()
            .unwrap();
        let s = structure(&d);
        assert!(s.top_failed(&fail_seq(&s, &d, &["C"])));
    }

    #[test]
    fn spare_activation() {
        let d = fixtures::f_csp();
        let s = structure(&d);
        let m = s.initial();
        let p = d.id("P").unwrap();
        let sp = d.id("S").unwrap();
        assert_eq!(s.effective_rate(&m, p), 1.0);
        assert_eq!(s.effective_rate(&m, sp), 0.0);
        assert_eq!(s.enabled_failures(&m), vec![(p, 1.0)]);
        let m = fail_seq(&s, &d, &["P"]);
        assert_eq!(s.enabled_failures(&m), vec![(sp, 1.0)]);
    }

    #[test]
    fn seq_blocks_and_releases_dependents() {
        let d = DftBuilder::new()
            .top("T")
            .gate("T", GateKind::And, &["A", "B", "C"])
            .gate("Q", GateKind::Seq, &["A", "B"])
            .fdep("F", "C", &["B"])
            .basic("A", BasicEvent::with_rate(1.0))
            .basic("B", BasicEvent::with_rate(1.0))
            .basic("C", BasicEvent::with_rate(1.0))
            .build()
            .unwrap();
        let s = structure(&d);
        let b = d.id("B").unwrap();
        let m = s.initial();
        assert!(s.enabled_failures(&m).iter().all(|(x, _)| *x != b));
        let m = fail_seq(&s, &d, &["C"]);
        assert!(!m.is_failed(b));
        let m = s.fail(&m, d.id("A").unwrap(), &mut Scratch::default());
        assert!(m.is_failed(b));
        assert!(s.top_failed(&m));
    }

    #[test]
    fn fdep_cascade_is_transitive() {
        let d = DftBuilder::new()
            .top("T")
            .gate("T", GateKind::And, &["B", "C"])
            .fdep("F1", "A", &["B"])
            .fdep("F2", "B", &["C"])
            .basic("A", BasicEvent::with_rate(1.0))
            .basic("B", BasicEvent::with_rate(1.0))
            .basic("C", BasicEvent::with_rate(1.0))
            .build()
            .unwrap();
        let s = structure(&d);
        assert!(s.top_failed(&fail_seq(&s, &d, &["A"])));
    }

    #[test]
    fn activation_dependency_wakes_module() {
        let d = DftBuilder::new()
            .top("T")
            .gate("T", GateKind::Spare, &["P", "S"])
            .basic("P", BasicEvent::with_rate(1.0))
            .basic("S", BasicEvent::dummy())
            .gate("H", GateKind::Or, &["h"])
            .basic("h", BasicEvent::with_rate(2.0).dormancy(0.0))
            .fdep("F", "H", &["S"])
            .adep("AD", "S", &["H"])
            .build()
            .unwrap();
        let s = structure(&d);
        let h = d.id("h").unwrap();
        assert_eq!(s.effective_rate(&s.initial(), h), 0.0);
        let m = fail_seq(&s, &d, &["P"]);
        assert_eq!(s.effective_rate(&m, h), 2.0);
        let m = s.fail(&m, h, &mut Scratch::default());
        assert!(s.top_failed(&m));
    }

    #[test]
    fn key_round_trip() {
        let d = fixtures::f_wsp();
        let s = structure(&d);
        for names in [&[][..], &["P"][..], &["S"][..], &["S", "P"][..]] {
            let m = fail_seq(&s, &d, names);
            assert_eq!(s.decode(&s.key(&m)), m);
        }
    }

    #[test]
    fn evidence_orders() {
        let d = fixtures::f_pand();
        let s = structure(&d);
        let ms = evaluate_marking(&d, &s, &["A", "B"]).unwrap();
        // A then B fails the top; B then A is fail-safe
        assert_eq!(ms.len(), 2);
        assert!(matches!(
            evaluate_marking(&d, &s, &["A", "A"]),
            Err(SemanticsError::AlreadyFailed(_))
        ));
        assert!(matches!(
            evaluate_marking(&d, &s, &["T"]),
            Err(SemanticsError::NotABasicEvent(_))
        ));
    }
}

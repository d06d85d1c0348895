//! Translation of a DFT into a labelled CTMC.
//!
//! States are canonical markings discovered breadth-first from the initial
//! marking (and from evidence entry markings). Every marking with a failed
//! top-level event collapses into one absorbing `failed` sink. Transient
//! basic events only contribute a transition when their failure would fail
//! the top-level event; otherwise the fault vanishes.

mod export;

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;
use indexmap::IndexMap;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::dft::{
    evaluate_marking, validate, Dft, Diagnostic, Marking, RateError, Scratch, SemanticsError,
    StateKey, Structure, Valuation, DEGRADED_LABEL,
};
use crate::engine::Chain;

pub use export::{to_dot, to_transition_list};

pub const DEFAULT_STATE_LIMIT: usize = 10_000_000;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StateSpaceError {
    #[error("the tree is not well-formed: {}", .0.iter().map(|d| d.to_string()).collect::<Vec<_>>().join("; "))]
    Invalid(Vec<Diagnostic>),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error(transparent)]
    Semantics(#[from] SemanticsError),
    #[error("state space exceeds {limit} states; consider the approximation instead")]
    StateSpaceLimitExceeded { limit: usize },
}

#[derive(Debug, Clone, PartialEq)]
pub struct BuildOptions {
    pub max_states: usize,
    /// Basic events assumed failed at the start of the analysis.
    pub evidence: Vec<String>,
}

impl Default for BuildOptions {
    fn default() -> Self {
        BuildOptions {
            max_states: DEFAULT_STATE_LIMIT,
            evidence: Vec::new(),
        }
    }
}

/// Labelled CTMC with marking provenance.
#[derive(Debug, Clone)]
pub struct Ctmc {
    pub chain: Chain,
    pub initial: usize,
    /// Start states induced by evidence; just `[initial]` without evidence.
    pub entries: Vec<usize>,
    pub failed: FixedBitSet,
    pub degraded: FixedBitSet,
    /// Whether the tree declares a `degraded` label.
    pub has_degraded_label: bool,
    /// Remaining user labels.
    pub labels: IndexMap<String, FixedBitSet>,
    /// Canonical marking per state; `None` for the failed sink.
    pub keys: Vec<Option<StateKey>>,
    structure: Structure,
    names: Vec<String>,
}

impl Ctmc {
    pub fn len(&self) -> usize {
        self.chain.len()
    }

    pub fn is_empty(&self) -> bool {
        self.chain.is_empty()
    }

    pub fn sink(&self) -> Option<usize> {
        self.failed.ones().next()
    }

    pub fn initial_distribution(&self, state: usize) -> Vec<f64> {
        let mut d = vec![0.0; self.len()];
        d[state] = 1.0;
        d
    }

    /// Operational states without outgoing transitions (fail-safe).
    pub fn operational_absorbing(&self) -> Vec<usize> {
        (0..self.len())
            .filter(|&s| !self.failed.contains(s) && self.chain.exit(s) == 0.0)
            .collect()
    }

    pub fn marking(&self, s: usize) -> Option<Marking> {
        self.keys[s].as_ref().map(|k| self.structure.decode(k))
    }

    /// Human-readable description of a state's marking.
    pub fn describe(&self, s: usize) -> String {
        let Some(m) = self.marking(s) else {
            return "failed".to_string();
        };
        let mut parts: Vec<String> = Vec::new();
        let failed: Vec<&str> = self
            .structure
            .basic_events()
            .filter(|b| m.is_failed(*b))
            .map(|b| self.names[b.index()].as_str())
            .collect();
        parts.push(format!("failed={{{}}}", failed.join(",")));
        let failsafe: Vec<&str> = m.failsafe.ones().map(|i| self.names[i].as_str()).collect();
        if !failsafe.is_empty() {
            parts.push(format!("failsafe={{{}}}", failsafe.join(",")));
        }
        parts.join(" ")
    }

    pub fn label(&self, name: &str) -> Option<&FixedBitSet> {
        match name {
            "failed" => Some(&self.failed),
            DEGRADED_LABEL if self.has_degraded_label => Some(&self.degraded),
            _ => self.labels.get(name),
        }
    }
}

/// Builds the CTMC of `dft` under parameter `overrides`.
pub fn build_ctmc(
    dft: &Dft,
    overrides: &Valuation,
    options: &BuildOptions,
) -> Result<Ctmc, StateSpaceError> {
    let diags = validate(dft);
    if !diags.is_empty() {
        return Err(StateSpaceError::Invalid(diags));
    }
    let structure = Structure::new(dft, overrides)?;
    let mut starts = vec![structure.initial()];
    if !options.evidence.is_empty() {
        let names: Vec<&str> = options.evidence.iter().map(|s| s.as_str()).collect();
        starts.extend(evaluate_marking(dft, &structure, &names)?);
    }

    let mut explorer = Explorer::new(&structure, options.max_states);
    let mut start_ids = Vec::new();
    for m in starts {
        start_ids.push(explorer.intern(m)?);
    }
    let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
    let mut scratch = Scratch::default();
    while let Some((s, m)) = explorer.queue.pop_front() {
        let row = explorer.successors(&m, &mut scratch)?;
        if rows.len() <= s {
            rows.resize(s + 1, Vec::new());
        }
        rows[s] = row;
    }
    let n = explorer.keys.len();
    rows.resize(n, Vec::new());
    let chain = Chain::from_rows(rows);

    let mut failed = FixedBitSet::with_capacity(n);
    if let Some(s) = explorer.sink {
        failed.insert(s);
    }
    let degraded_label = dft.label(DEGRADED_LABEL);
    let mut degraded = FixedBitSet::with_capacity(n);
    let mut labels: IndexMap<String, FixedBitSet> = dft
        .labels()
        .iter()
        .filter(|l| l.name != DEGRADED_LABEL)
        .map(|l| (l.name.clone(), FixedBitSet::with_capacity(n)))
        .collect();
    for (s, key) in explorer.keys.iter().enumerate() {
        let Some(key) = key else { continue };
        let m = structure.decode(key);
        let is_failed = |id: crate::dft::ElementId| m.is_failed(id);
        if let Some(l) = degraded_label {
            degraded.set(s, l.expr.eval(&is_failed));
        }
        for l in dft.labels() {
            if let Some(bits) = labels.get_mut(&l.name) {
                bits.set(s, l.expr.eval(&is_failed));
            }
        }
    }
    let initial = start_ids[0];
    let entries = if options.evidence.is_empty() {
        vec![initial]
    } else {
        start_ids[1..].to_vec()
    };
    Ok(Ctmc {
        chain,
        initial,
        entries,
        failed,
        degraded,
        has_degraded_label: degraded_label.is_some(),
        labels,
        keys: explorer.keys,
        structure,
        names: dft.elements().iter().map(|e| e.name.clone()).collect(),
    })
}

struct Explorer<'a> {
    structure: &'a Structure,
    limit: usize,
    index: FxHashMap<StateKey, usize>,
    keys: Vec<Option<StateKey>>,
    sink: Option<usize>,
    queue: VecDeque<(usize, Marking)>,
}

impl<'a> Explorer<'a> {
    fn new(structure: &'a Structure, limit: usize) -> Self {
        Explorer {
            structure,
            limit,
            index: FxHashMap::default(),
            keys: Vec::new(),
            sink: None,
            queue: VecDeque::new(),
        }
    }

    fn fresh(&mut self, key: Option<StateKey>) -> Result<usize, StateSpaceError> {
        if self.keys.len() >= self.limit {
            return Err(StateSpaceError::StateSpaceLimitExceeded { limit: self.limit });
        }
        self.keys.push(key);
        Ok(self.keys.len() - 1)
    }

    fn sink(&mut self) -> Result<usize, StateSpaceError> {
        match self.sink {
            Some(s) => Ok(s),
            None => {
                let s = self.fresh(None)?;
                self.sink = Some(s);
                Ok(s)
            }
        }
    }

    fn intern(&mut self, m: Marking) -> Result<usize, StateSpaceError> {
        if self.structure.top_failed(&m) {
            return self.sink();
        }
        let key = self.structure.key(&m);
        if let Some(&s) = self.index.get(&key) {
            return Ok(s);
        }
        let s = self.fresh(Some(key.clone()))?;
        self.index.insert(key, s);
        self.queue.push_back((s, m));
        Ok(s)
    }

    fn successors(
        &mut self,
        m: &Marking,
        scratch: &mut Scratch,
    ) -> Result<Vec<(usize, f64)>, StateSpaceError> {
        let mut row = Vec::new();
        for (be, rate) in self.structure.enabled_failures(m) {
            let next = self.structure.fail(m, be, scratch);
            if self.structure.is_transient(be) {
                if self.structure.top_failed(&next) {
                    row.push((self.sink()?, rate));
                }
                continue;
            }
            row.push((self.intern(next)?, rate));
        }
        Ok(row)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dft::fixtures;

    fn build(d: &Dft) -> Ctmc {
        build_ctmc(d, &Valuation::new(), &BuildOptions::default()).unwrap()
    }

    fn rows(c: &Ctmc) -> Vec<Vec<(usize, f64)>> {
        (0..c.len()).map(|s| c.chain.row(s).collect()).collect()
    }

    #[test]
    fn and_gate() {
        let c = build(&fixtures::f_and());
        assert_eq!(c.len(), 4);
        // {} -> {A}:1, {B}:2; {A} -> F:2; {B} -> F:1
        assert_eq!(
            rows(&c),
            vec![
                vec![(1, 1.0), (2, 2.0)],
                vec![(3, 2.0)],
                vec![(3, 1.0)],
                vec![]
            ]
        );
        assert_eq!(c.sink(), Some(3));
    }

    #[test]
    fn cold_spare_and_pand() {
        let c = build(&fixtures::f_csp());
        assert_eq!(c.len(), 3);
        assert_eq!(rows(&c)[0], vec![(1, 1.0)]);
        let c = build(&fixtures::f_pand());
        assert_eq!(c.len(), 5);
        assert_eq!(c.operational_absorbing().len(), 1);
    }

    #[test]
    fn vot_merges_orders() {
        assert_eq!(build(&fixtures::f_vot()).len(), 5);
    }

    #[test]
    fn transient_only_when_fatal() {
        let c = build(&fixtures::f_trans());
        // {} -P-> {P} -T-> failed
        assert_eq!(rows(&c), vec![vec![(1, 1.0)], vec![(2, 1.0)], vec![]]);
    }

    #[test]
    fn state_limit() {
        let err = build_ctmc(
            &fixtures::f_vot(),
            &Valuation::new(),
            &BuildOptions {
                max_states: 3,
                ..Default::default()
            },
        );
        assert_eq!(
            err.unwrap_err(),
            StateSpaceError::StateSpaceLimitExceeded { limit: 3 }
        );
    }

    #[test]
    fn evidence_entries() {
        let c = build_ctmc(
            &fixtures::f_and(),
            &Valuation::new(),
            &BuildOptions {
                evidence: vec!["A".into()],
                ..Default::default()
            },
        )
        .unwrap();
        assert_eq!(c.entries.len(), 1);
        assert_eq!(c.describe(c.entries[0]), "failed={A}");
    }

    #[test]
    fn degraded_label() {
        let c = build(&fixtures::d_and());
        assert!(c.has_degraded_label);
        assert_eq!(c.degraded.ones().collect::<Vec<_>>(), vec![1, 2]);
    }
}

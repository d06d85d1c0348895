//! Certified bounds from a partially explored state space.
//!
//! States are expanded in order of the probability mass of their discovery
//! path. Unexpanded (frontier) states are closed off in two ways: treating
//! them as failed over-approximates unreliability, treating them as
//! operational and absorbing under-approximates it. For the mean time to
//! failure, a frontier state failing immediately gives a lower bound, and a
//! conservative estimate of the time needed to fail every remaining basic
//! event gives an upper bound.
//!
//! The upper MTTF estimate of a frontier state `s` sums `1/r` over basic
//! events it fails one by one (respecting sequence enforcers) until the
//! top-level event fails, where `r` is the event's effective rate in `s`.
//! Activation is never withdrawn, so `r` is a floor for the real rate from
//! `s` on. The argument needs failure of the top-level event to be monotone
//! in the set of failed events, which priority-AND gates break; with such
//! gates frontier states get an infinite upper bound.

// `!(x > 0.0)` deliberately rejects NaN as well
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::cmp::Ordering;
use std::collections::BinaryHeap;
use std::time::{Duration, Instant};

use fixedbitset::FixedBitSet;
use rustc_hash::FxHashMap;
use thiserror::Error;

use crate::dft::{validate, Dft, Marking, RateError, Scratch, StateKey, Structure, Valuation};
use crate::engine::{
    bounded_reach_backward, expected_time_with_boundary, mask, Chain, EngineError, Tolerances,
};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BoundInterval {
    pub lower: f64,
    pub upper: f64,
    pub states_explored: usize,
    pub iterations: usize,
}

impl BoundInterval {
    pub fn width(&self) -> f64 {
        self.upper - self.lower
    }

    pub fn contains(&self, x: f64, slack: f64) -> bool {
        self.lower - slack <= x && x <= self.upper + slack
    }
}

/// Bounds after one refinement round.
#[derive(Debug, Clone, PartialEq)]
pub struct ApproxStep {
    pub iteration: usize,
    pub elapsed: Duration,
    pub states_explored: usize,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ApproxOutcome {
    pub interval: BoundInterval,
    pub trace: Vec<ApproxStep>,
}

#[derive(Debug, Error, Clone, PartialEq)]
pub enum ApproxError {
    #[error("the tree is not well-formed: {0}")]
    Invalid(String),
    #[error(transparent)]
    Rate(#[from] RateError),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(
        "state cap reached before the requested precision; best interval [{}, {}]",
        .0.interval.lower, .0.interval.upper
    )]
    CapReachedWithoutPrecision(Box<ApproxOutcome>),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ApproxOptions {
    /// Stop once `upper - lower <= rel_err * lower`.
    pub rel_err: f64,
    /// States expanded in the first round; doubled every round.
    pub initial_budget: usize,
    /// Stop without the requested precision beyond this many known states.
    pub max_states: usize,
    pub tol: Tolerances,
}

impl Default for ApproxOptions {
    fn default() -> Self {
        ApproxOptions {
            rel_err: 0.01,
            initial_budget: 1000,
            max_states: crate::statespace::DEFAULT_STATE_LIMIT,
            tol: Tolerances::default(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Entry {
    mass: f64,
    state: usize,
}

impl Eq for Entry {}

impl Ord for Entry {
    fn cmp(&self, other: &Self) -> Ordering {
        self.mass
            .total_cmp(&other.mass)
            .then_with(|| other.state.cmp(&self.state))
    }
}

impl PartialOrd for Entry {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Explored states with their transitions, plus the frontier.
#[derive(Debug)]
pub struct PartialSpace {
    structure: Structure,
    index: FxHashMap<StateKey, usize>,
    keys: Vec<Option<StateKey>>,
    /// Outgoing transitions; `None` while a state is on the frontier.
    rows: Vec<Option<Vec<(usize, f64)>>>,
    mass: Vec<f64>,
    sink: usize,
    initial: usize,
    heap: BinaryHeap<Entry>,
    explored: usize,
    scratch: Scratch,
}

impl PartialSpace {
    /// The initial state alone, on the frontier.
    pub fn new(dft: &Dft, overrides: &Valuation) -> Result<Self, ApproxError> {
        let diags = validate(dft);
        if !diags.is_empty() {
            let msg: Vec<String> = diags.iter().map(|d| d.to_string()).collect();
            return Err(ApproxError::Invalid(msg.join("; ")));
        }
        let structure = Structure::new(dft, overrides)?;
        let mut space = PartialSpace {
            structure,
            index: FxHashMap::default(),
            keys: vec![None],
            rows: vec![Some(Vec::new())],
            mass: vec![0.0],
            sink: 0,
            initial: 0,
            heap: BinaryHeap::new(),
            explored: 0,
            scratch: Scratch::default(),
        };
        let init = space.structure.initial();
        space.initial = space.discover(init, 1.0);
        Ok(space)
    }

    /// Number of known states, including the sink and the frontier.
    pub fn len(&self) -> usize {
        self.keys.len()
    }

    pub fn is_empty(&self) -> bool {
        self.keys.is_empty()
    }

    pub fn initial(&self) -> usize {
        self.initial
    }

    pub fn states_explored(&self) -> usize {
        self.explored
    }

    pub fn frontier(&self) -> impl Iterator<Item = usize> + '_ {
        (0..self.len()).filter(|&s| self.rows[s].is_none())
    }

    pub fn is_complete(&self) -> bool {
        self.heap.is_empty()
    }

    fn discover(&mut self, m: Marking, mass: f64) -> usize {
        if self.structure.top_failed(&m) {
            return self.sink;
        }
        let key = self.structure.key(&m);
        if let Some(&s) = self.index.get(&key) {
            if self.rows[s].is_none() && mass > self.mass[s] {
                self.mass[s] = mass;
                self.heap.push(Entry { mass, state: s });
            }
            return s;
        }
        let s = self.keys.len();
        self.keys.push(Some(key.clone()));
        self.index.insert(key, s);
        self.rows.push(None);
        self.mass.push(mass);
        self.heap.push(Entry { mass, state: s });
        s
    }

    fn expand(&mut self, s: usize) {
        let m = self.structure.decode(self.keys[s].as_ref().unwrap());
        let enabled = self.structure.enabled_failures(&m);
        let exit: f64 = enabled.iter().map(|e| e.1).sum();
        let mut row = Vec::with_capacity(enabled.len());
        for (be, rate) in enabled {
            let next = self.structure.fail(&m, be, &mut self.scratch);
            if self.structure.is_transient(be) {
                if self.structure.top_failed(&next) {
                    row.push((self.sink, rate));
                }
                continue;
            }
            let t = self.discover(next, self.mass[s] * rate / exit);
            row.push((t, rate));
        }
        self.rows[s] = Some(row);
        self.explored += 1;
    }

    /// Expands up to `budget` frontier states, highest path mass first and
    /// lowest index among ties.
    pub fn refine(&mut self, budget: usize) {
        let mut done = 0;
        while done < budget {
            let Some(e) = self.heap.pop() else { break };
            if self.rows[e.state].is_some() || e.mass < self.mass[e.state] {
                continue;
            }
            self.expand(e.state);
            done += 1;
        }
    }

    fn chain(&self) -> Chain {
        Chain::from_rows(self.rows.iter().map(|r| r.clone().unwrap_or_default()))
    }

    /// `[lower, upper]` on the probability of failing within `t`.
    pub fn unreliability_bounds(&self, t: f64, tol: &Tolerances) -> (f64, f64) {
        let chain = self.chain();
        let n = self.len();
        let frontier = mask(n, self.frontier());
        let failed = mask(n, [self.sink]);
        let lower = bounded_reach_backward(&chain, &frontier, &failed, t, tol.eps_u);
        let mut target = failed;
        target.union_with(&frontier);
        let upper = bounded_reach_backward(&chain, &FixedBitSet::with_capacity(n), &target, t, tol.eps_u);
        let s = self.initial();
        // truncation only loses mass, so widen the upper bound by it
        (lower[s], (upper[s] + tol.eps_u).min(1.0))
    }

    /// Conservative expected time for a frontier state to fail the top-level
    /// event; infinite if no such estimate exists.
    fn completion_time(&self, s: usize) -> f64 {
        if self.structure.has_pand() {
            return f64::INFINITY;
        }
        let start = self.structure.decode(self.keys[s].as_ref().unwrap());
        let mut m = start.clone();
        let mut scratch = Scratch::default();
        let mut total = 0.0;
        while !self.structure.top_failed(&m) {
            let next = self.structure.basic_events().find(|&b| {
                !m.is_failed(b)
                    && !self.structure.is_transient(b)
                    && !self.structure.is_dummy(b)
                    && !self.structure.seq_blocked(&m, b)
                    && self.structure.effective_rate(&start, b) > 0.0
            });
            let Some(b) = next else {
                return f64::INFINITY;
            };
            total += 1.0 / self.structure.effective_rate(&start, b);
            self.structure.fail_in_place(&mut m, b, &mut scratch);
        }
        total
    }

    /// `[lower, upper]` on the mean time to failure.
    pub fn mttf_bounds(&self, tol: &Tolerances) -> Result<(f64, f64), EngineError> {
        let chain = self.chain();
        let n = self.len();
        let s = self.initial();
        let frontier: Vec<usize> = self.frontier().collect();
        let mut boundary: Vec<Option<f64>> = vec![None; n];
        boundary[self.sink] = Some(0.0);
        for &f in &frontier {
            boundary[f] = Some(0.0);
        }
        // explored fail-safe dead ends never fail
        for (d, b) in boundary.iter_mut().enumerate() {
            if b.is_none() && chain.exit(d) == 0.0 {
                *b = Some(f64::INFINITY);
            }
        }
        let lower = expected_time_with_boundary(&chain, &boundary, &[s], tol)?[s];
        for &f in &frontier {
            boundary[f] = Some(self.completion_time(f));
        }
        let upper = expected_time_with_boundary(&chain, &boundary, &[s], tol)?[s];
        Ok((lower, upper))
    }
}

fn refine_loop(
    mut space: PartialSpace,
    opts: &ApproxOptions,
    mut bounds: impl FnMut(&PartialSpace) -> Result<(f64, f64), ApproxError>,
) -> Result<ApproxOutcome, ApproxError> {
    if !(opts.rel_err > 0.0) {
        return Err(ApproxError::InvalidParameter(format!(
            "relative error must be positive, got {}",
            opts.rel_err
        )));
    }
    let started = Instant::now();
    let mut budget = opts.initial_budget.max(1);
    let mut trace: Vec<ApproxStep> = Vec::new();
    let (mut lower, mut upper) = (f64::NEG_INFINITY, f64::INFINITY);
    loop {
        space.refine(budget);
        budget = budget.saturating_mul(2);
        let (l, u) = bounds(&space)?;
        // each round's interval is certified, so is their intersection
        lower = lower.max(l);
        upper = upper.min(u);
        trace.push(ApproxStep {
            iteration: trace.len() + 1,
            elapsed: started.elapsed(),
            states_explored: space.states_explored(),
            lower,
            upper,
        });
        let outcome = || ApproxOutcome {
            interval: BoundInterval {
                lower,
                upper,
                states_explored: space.states_explored(),
                iterations: trace.len(),
            },
            trace: trace.clone(),
        };
        if upper - lower <= opts.rel_err * lower || lower == f64::INFINITY || space.is_complete() {
            return Ok(outcome());
        }
        if space.len() >= opts.max_states {
            return Err(ApproxError::CapReachedWithoutPrecision(Box::new(outcome())));
        }
    }
}

/// Bounds on the probability that the top-level event fails within `t`.
pub fn approx_unreliability(
    dft: &Dft,
    overrides: &Valuation,
    t: f64,
    opts: &ApproxOptions,
) -> Result<ApproxOutcome, ApproxError> {
    if !(t >= 0.0) || !t.is_finite() {
        return Err(ApproxError::InvalidParameter(format!(
            "time bound must be finite and non-negative, got {t}"
        )));
    }
    let space = PartialSpace::new(dft, overrides)?;
    refine_loop(space, opts, |s| Ok(s.unreliability_bounds(t, &opts.tol)))
}

/// Bounds on the mean time to failure.
pub fn approx_mttf(
    dft: &Dft,
    overrides: &Valuation,
    opts: &ApproxOptions,
) -> Result<ApproxOutcome, ApproxError> {
    let space = PartialSpace::new(dft, overrides)?;
    refine_loop(space, opts, |s| Ok(s.mttf_bounds(&opts.tol)?))
}

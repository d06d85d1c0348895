//! Checks shared by the focused test files and the acceptance runner. Each
//! returns a one-line summary on success and a diagnosis on failure.

use std::fs;
use std::path::PathBuf;
use std::time::Instant;

use fixedbitset::FixedBitSet;
use rand::seq::IndexedRandom;
use rand::Rng;

use dftmc::approx::{approx_mttf, approx_unreliability, ApproxOptions, ApproxStep};
use dftmc::dft::{
    fixtures, BasicEvent, Dft, DftBuilder, GateKind, RawLabelExpr, Valuation, DEGRADED_LABEL,
};
use dftmc::engine::{bounded_reach_backward, unbounded_reach_avoid, Tolerances};
use dftmc::io::galileo;
use dftmc::measures::{Analyzer, MeasureError};
use dftmc::rewrite::rewrite;
use dftmc::scenario::{
    derive_channel_assignment, families, parse_scenario, synthesize, HardwareTemplate, Route,
    ScenarioDocument,
};
use dftmc::statespace::{build_ctmc, BuildOptions, Ctmc};

use super::oracle::history_tree;
use super::{random_dft, rel_close, rng};

pub type Check = Result<String, String>;

macro_rules! ensure {
    ($cond:expr, $($fmt:tt)+) => {
        #[allow(clippy::neg_cmp_op_on_partial_ord)]
        if !$cond {
            return Err(format!($($fmt)+));
        }
    };
}

pub fn ctmc(d: &Dft) -> Ctmc {
    build_ctmc(d, &Valuation::new(), &BuildOptions::default()).unwrap()
}

/// MTTF with "undefined" mapped to infinity.
pub fn mttf(a: &Analyzer, from: usize) -> f64 {
    match a.mttf(from) {
        Ok(r) => r.value,
        Err(MeasureError::Undefined { .. }) => f64::INFINITY,
        Err(e) => panic!("{e}"),
    }
}

// ---------------------------------------------------------------------------
// closed forms

type Closed = (&'static str, Dft, fn(f64) -> f64, f64);

fn closed_forms() -> Vec<Closed> {
    fn or(t: f64) -> f64 {
        1.0 - (-3e-3 * t).exp()
    }
    fn and(t: f64) -> f64 {
        (1.0 - (-t).exp()) * (1.0 - (-2.0 * t).exp())
    }
    fn vot(t: f64) -> f64 {
        1.0 - (3.0 * (-2.0 * t).exp() - 2.0 * (-3.0 * t).exp())
    }
    fn erlang2(t: f64) -> f64 {
        1.0 - (-t).exp() * (1.0 + t)
    }
    // P active at 1, S dormant at 1/2, active at 1 after P fails
    fn wsp(t: f64) -> f64 {
        1.0 - ((-t).exp() + 2.0 * ((-t).exp() - (-1.5 * t).exp()))
    }
    // by symmetry half of the runs with both failed have A first
    fn pand(t: f64) -> f64 {
        (1.0 - (-t).exp()).powi(2) / 2.0
    }
    vec![
        ("F_OR", fixtures::f_or(), or, 1.0 / 3e-3),
        ("F_AND", fixtures::f_and(), and, 7.0 / 6.0),
        ("F_VOT", fixtures::f_vot(), vot, 5.0 / 6.0),
        ("F_CSP", fixtures::f_csp(), erlang2, 2.0),
        ("F_WSP", fixtures::f_wsp(), wsp, 1.0 / 1.5 + 1.0),
        ("F_PAND", fixtures::f_pand(), pand, f64::INFINITY),
        ("F_TRANS", fixtures::f_trans(), erlang2, 2.0),
    ]
}

pub fn analytic_fixtures() -> Check {
    let start = Instant::now();
    for (name, d, unrel, mttf_exact) in closed_forms() {
        let c = ctmc(&d);
        let a = Analyzer::new(&c);
        let scale = if name == "F_OR" { 1000.0 } else { 1.0 };
        for t in [0.1, 0.5, 1.0, 3.0] {
            let t = t * scale;
            let v = a.unreliability(c.initial, t).unwrap().value;
            ensure!(rel_close(v, unrel(t), 1e-8), "{name} unreliability({t}) = {v}, expected {}", unrel(t));
        }
        let m = mttf(&a, c.initial);
        ensure!(rel_close(m, mttf_exact, 1e-8), "{name} MTTF = {m}, expected {mttf_exact}");
    }
    let ms = start.elapsed().as_secs_f64();
    ensure!(ms < 1.0, "took {ms:.2} s");
    Ok(format!("7 fixtures, 4 horizons each, {ms:.3} s"))
}

// ---------------------------------------------------------------------------
// brute force

pub fn brute_force_one(d: &Dft, t: f64) -> Result<(), String> {
    let tree = history_tree(d);
    let c = ctmc(d);
    let a = Analyzer::new(&c);
    let u = a.unreliability(c.initial, t).unwrap().value;
    let m = mttf(&a, c.initial);
    let (ou, om) = (tree.unreliability(t), tree.mttf());
    let text = galileo::serialize(d);
    ensure!((u - ou).abs() <= 1e-6, "unreliability {u} vs oracle {ou}\n{text}");
    ensure!(rel_close(m, om, 1e-6), "MTTF {m} vs oracle {om}\n{text}");
    Ok(())
}

pub fn brute_force(n: usize, seed: u64) -> Check {
    let start = Instant::now();
    let mut r = rng(seed);
    let mut histories = 0;
    for _ in 0..n {
        let d = random_dft(&mut r, 7);
        histories += history_tree(&d).failed.len();
        brute_force_one(&d, 0.7)?;
    }
    let s = start.elapsed().as_secs_f64();
    ensure!(s < 300.0, "took {s:.1} s");
    Ok(format!("{n} random trees, {histories} histories, {s:.2} s"))
}

// ---------------------------------------------------------------------------
// rewriting

fn reliability_and_mttf(d: &Dft) -> (f64, f64) {
    let c = ctmc(d);
    let a = Analyzer::new(&c);
    (a.reliability(c.initial, 10_000.0).unwrap().value, mttf(&a, c.initial))
}

pub fn fixture_list() -> Vec<Dft> {
    vec![
        fixtures::f_or(),
        fixtures::f_and(),
        fixtures::f_pand(),
        fixtures::f_csp(),
        fixtures::f_wsp(),
        fixtures::f_vot(),
        fixtures::f_trans(),
        fixtures::d_and(),
        fixtures::d_wsp(),
        fixtures::d_or(),
    ]
}

pub fn rewrite_equivalent(d: &Dft) -> Result<(), String> {
    let rw = rewrite(d);
    let (r, m) = reliability_and_mttf(d);
    let (r2, m2) = reliability_and_mttf(&rw);
    let text = galileo::serialize(d);
    ensure!(rel_close(r, r2, 1e-9) || (r - r2).abs() < 1e-300, "R(1e4) {r} vs {r2}\n{text}");
    ensure!(rel_close(m, m2, 1e-9), "MTTF {m} vs {m2}\n{text}");
    Ok(())
}

pub fn rewriter_sound(n: usize, seed: u64) -> Check {
    let fx = fixture_list();
    for d in &fx {
        rewrite_equivalent(d)?;
    }
    let mut r = rng(seed);
    let mut removed = 0;
    for _ in 0..n {
        let d = random_dft(&mut r, 7);
        removed += d.len() - rewrite(&d).len();
        rewrite_equivalent(&d)?;
    }
    Ok(format!("{} fixtures + {n} random trees, {removed} elements removed in total", fx.len()))
}

// ---------------------------------------------------------------------------
// degradation

pub fn degraded_hand_values() -> Check {
    let e = |x: f64| (-x).exp();
    let check = |what: &str, v: f64, want: f64| -> Result<(), String> {
        ensure!(rel_close(v, want, 1e-8) || (v - want).abs() < 1e-14, "{what} = {v}, expected {want}");
        Ok(())
    };

    // D_AND: A (1) and B (2) race; from {A} B remains, from {B} A remains.
    let c = ctmc(&fixtures::d_and());
    let a = Analyzer::new(&c);
    let s = c.initial;
    let first_within = (1.0 - e(3.0)) / 3.0 * (1.0 - e(2.0)) + 2.0 * (1.0 - e(3.0)) / 3.0 * (1.0 - e(1.0));
    check("D_AND ffa", a.ffa(s, 1.0).unwrap().value, e(3.0))?;
    check("D_AND fwd", a.fwd(s, 1.0).unwrap().value, 0.0)?;
    check("D_AND mtdf", a.mtdf(s).unwrap().value, 1.0 / 3.0 * 0.5 + 2.0 / 3.0 * 1.0)?;
    check("D_AND mdr", a.mdr(s, 1.0).unwrap().value, e(2.0))?;
    check("D_AND flod", a.flod(s, 1.0, 1.0).unwrap().value, first_within)?;
    check("D_AND silfo", a.silfo(s, 1.0, 1.0).unwrap().value, 1.0 - first_within)?;

    // D_WSP: P (1) against dormant S (1/2); degraded once P has failed.
    let c = ctmc(&fixtures::d_wsp());
    let a = Analyzer::new(&c);
    let s = c.initial;
    // S first at rate 1/2, then P within the remaining time
    let fwd = 0.5 * ((1.0 - e(1.5)) / 1.5 - e(1.0) * (1.0 - e(0.5)) / 0.5);
    let p_first_within = (1.0 - e(1.5)) / 1.5;
    let flod = p_first_within * (1.0 - e(1.0));
    check("D_WSP ffa", a.ffa(s, 1.0).unwrap().value, e(1.0))?;
    check("D_WSP fwd", a.fwd(s, 1.0).unwrap().value, fwd)?;
    check("D_WSP mtdf", a.mtdf(s).unwrap().value, 2.0 / 3.0)?;
    check("D_WSP mdr", a.mdr(s, 1.0).unwrap().value, e(1.0))?;
    check("D_WSP flod", a.flod(s, 1.0, 1.0).unwrap().value, flod)?;
    check("D_WSP silfo", a.silfo(s, 1.0, 1.0).unwrap().value, 1.0 - fwd - flod)?;
    Ok("D_AND and D_WSP: ffa, fwd, mtdf, mdr, flod, silfo".into())
}

fn with_random_label(d: &Dft, r: &mut impl Rng) -> Option<Dft> {
    let names: Vec<String> = d
        .elements()
        .iter()
        .filter(|e| e.as_dependency().is_none() && e.name != d.name(d.top()))
        .map(|e| e.name.clone())
        .collect();
    let k = r.random_range(1..=2);
    let parts: Vec<RawLabelExpr> = (0..k)
        .map(|_| RawLabelExpr::Failed(names.choose(r).unwrap().clone()))
        .collect();
    let mut b = d.to_builder();
    b.label(DEGRADED_LABEL, RawLabelExpr::Or(parts));
    b.build().ok()
}

/// Random models with at least three degraded states, none of them initial.
pub fn degraded_models(n: usize, seed: u64) -> Vec<Ctmc> {
    let mut r = rng(seed);
    let mut out = Vec::new();
    while out.len() < n {
        let d = random_dft(&mut r, 7);
        let Some(d) = with_random_label(&d, &mut r) else { continue };
        let c = ctmc(&d);
        if c.degraded.count_ones(..) >= 3 && !c.degraded.contains(c.initial) {
            out.push(c);
        }
    }
    out
}

fn single_target(c: &Ctmc, d: usize) -> (FixedBitSet, FixedBitSet) {
    let mut bad = c.degraded.clone();
    bad.union_with(&c.failed);
    bad.set(d, false);
    let mut target = FixedBitSet::with_capacity(c.len());
    target.insert(d);
    (bad, target)
}

/// The all-states forward computations against one query per degraded state.
pub fn forward_vs_per_state(n: usize, seed: u64) -> Check {
    let tol = Tolerances::default();
    let mut states = 0;
    for c in degraded_models(n, seed) {
        let a = Analyzer::new(&c);
        let p = a.first_degraded(c.initial).unwrap();
        let fail = a.failure_probabilities(0.5);
        let within: Vec<Vec<f64>> = [0.2, 1.5].iter().map(|&t| a.first_degraded_within(c.initial, t)).collect();
        for d in c.degraded.ones() {
            states += 1;
            let (bad, target) = single_target(&c, d);
            let naive = unbounded_reach_avoid(&c.chain, &bad, &target, &tol).unwrap()[c.initial];
            ensure!((p[d] - naive).abs() <= 1e-9, "unbounded, state {d}: {} vs {naive}", p[d]);
            for (k, &t) in [0.2, 1.5].iter().enumerate() {
                let naive = bounded_reach_backward(&c.chain, &bad, &target, t, tol.eps_u)[c.initial];
                ensure!(
                    (within[k][d] - naive).abs() <= 1e-8,
                    "bounded t={t}, state {d}: {} vs {naive}",
                    within[k][d]
                );
            }
        }
        for (k, &t) in [0.2, 1.5].iter().enumerate() {
            let naive: f64 = c.degraded.ones().map(|d| within[k][d] * fail[d]).sum();
            let v = a.flod(c.initial, t, 0.5).unwrap().value;
            ensure!((v - naive).abs() <= 1e-8, "flod t={t}: {v} vs {naive}");
        }
    }
    Ok(format!("{n} random models, {states} degraded states"))
}

// ---------------------------------------------------------------------------
// approximation

fn synthesized(doc: &ScenarioDocument) -> Dft {
    rewrite(&synthesize(&doc.to_scenario().unwrap()).unwrap())
}

fn check_trace(trace: &[ApproxStep], exact: f64, what: &str) -> Result<(), String> {
    let slack = 1e-9 * exact.abs();
    let mut width = f64::INFINITY;
    for s in trace {
        ensure!(
            s.lower - slack <= exact && exact <= s.upper + slack,
            "{what}: round {} gives [{}, {}], exact {exact}",
            s.iteration,
            s.lower,
            s.upper
        );
        let w = s.upper - s.lower;
        ensure!(w <= width, "{what}: width grew from {width} to {w} in round {}", s.iteration);
        width = w;
    }
    Ok(())
}

pub fn approximation_scaled() -> Check {
    let t = 10_000.0;
    let d = synthesized(&families::scaled_adas(3, 8, 2, 7));
    let c = ctmc(&d);
    let full = c.len();
    let exact = Analyzer::new(&c).unreliability(c.initial, t).unwrap().value;
    drop(c);

    let v = Valuation::new();
    let coarse = approx_unreliability(&d, &v, t, &ApproxOptions::default())
        .map_err(|e| e.to_string())?;
    check_trace(&coarse.trace, exact, "unreliability, 1%")?;
    let i = coarse.interval;
    ensure!(i.width() <= 0.01 * i.lower, "1% not reached: [{}, {}]", i.lower, i.upper);
    let fraction = i.states_explored as f64 / full as f64;
    ensure!(fraction < 0.5, "explored {} of {full} states", i.states_explored);

    let fine_opts = ApproxOptions { rel_err: 1e-5, initial_budget: 100, ..Default::default() };
    let fine = approx_unreliability(&d, &v, t, &fine_opts).map_err(|e| e.to_string())?;
    check_trace(&fine.trace, exact, "unreliability, 1e-5")?;

    let small = synthesized(&families::scaled_adas(2, 8, 2, 7));
    let c = ctmc(&small);
    let exact_mttf = mttf(&Analyzer::new(&c), c.initial);
    let m = approx_mttf(&small, &v, &ApproxOptions::default()).map_err(|e| e.to_string())?;
    check_trace(&m.trace, exact_mttf, "mttf")?;

    Ok(format!(
        "{full} states; 1% after {} states ({:.2}%), interval [{:.6e}, {:.6e}] vs exact {exact:.6e}; \
         {} rounds to 1e-5 all sound; MTTF bounds sound over {} rounds",
        i.states_explored,
        100.0 * fraction,
        i.lower,
        i.upper,
        fine.trace.len(),
        m.trace.len()
    ))
}

// ---------------------------------------------------------------------------
// synthesis

pub fn repo_root() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../..")
}

pub fn synthesis_structure() -> Check {
    let mut summary = Vec::new();
    for name in ["sc1", "sc2-arch-b", "sc2-arch-a", "sc3"] {
        let text = fs::read_to_string(repo_root().join(format!("scenarios/{name}.toml")))
            .map_err(|e| format!("{name}: {e}"))?;
        let s = parse_scenario(&text).map_err(|e| format!("{name}: {e}"))?;
        let d = synthesize(&s).map_err(|e| format!("{name}: {e}"))?;
        let golden = fs::read_to_string(repo_root().join(format!("crates/core/tests/golden/{name}.dft")))
            .map_err(|e| format!("{name}: {e}"))?;
        ensure!(galileo::serialize(&d) == golden, "{name}: serialization differs from golden file");

        let count = |prefix: &str| d.elements().iter().filter(|e| e.name.starts_with(prefix)).count();
        let blocks = s.diagram.blocks.len();
        ensure!(count("fdep.hw.") == blocks, "{name}: {} hardware FDEPs for {blocks} blocks", count("fdep.hw."));
        ensure!(count("adep.hw.") == blocks, "{name}: {} ADEPs for {blocks} blocks", count("adep.hw."));
        let a = derive_channel_assignment(&s.diagram, &s.architecture, &s.block_map, &s.channel_map)
            .map_err(|e| format!("{name}: {e}"))?;
        let fallible = a
            .channels
            .values()
            .filter(|r| matches!(r, Route::Bus(b) if s.hardware[b] != HardwareTemplate::Infallible))
            .count();
        ensure!(
            count("fdep.bus.") == fallible,
            "{name}: {} bus FDEPs for {fallible} channels over fallible buses",
            count("fdep.bus.")
        );
        summary.push(format!("{name}: {} elements, {blocks} blocks, {fallible} bus FDEPs", d.len()));
    }
    Ok(summary.join("; "))
}

// ---------------------------------------------------------------------------
// reconstruction (informational)

pub struct Reconstruction {
    pub unreliability: f64,
    pub states: usize,
}

pub fn reconstruction() -> Reconstruction {
    let d = synthesized(&families::sc2_arch_a());
    let c = ctmc(&d);
    Reconstruction {
        unreliability: Analyzer::new(&c).unreliability(c.initial, 10_000.0).unwrap().value,
        states: c.len(),
    }
}

// ---------------------------------------------------------------------------
// transient faults

pub fn transient_rule() -> Check {
    let c = ctmc(&fixtures::f_trans());
    let a = Analyzer::new(&c);
    for t in [0.5, 1.0, 2.0] {
        let r = a.reliability(c.initial, t).unwrap().value;
        let want = (-t).exp() * (1.0 + t);
        ensure!(rel_close(r, want, 1e-8), "F_TRANS reliability({t}) = {r}, expected {want}");
    }
    let m = mttf(&a, c.initial);
    ensure!(rel_close(m, 2.0, 1e-8), "F_TRANS MTTF = {m}");

    // same tree with T permanent: max of two rate-1 exponentials
    let plain = DftBuilder::new()
        .top("Top")
        .gate("Top", GateKind::And, &["P", "T"])
        .basic("P", BasicEvent::with_rate(1.0))
        .basic("T", BasicEvent::with_rate(1.0))
        .build()
        .unwrap();
    let c = ctmc(&plain);
    let m2 = mttf(&Analyzer::new(&c), c.initial);
    ensure!(rel_close(m2, 1.5, 1e-8), "permanent variant MTTF = {m2}, expected 1.5");
    Ok(format!("MTTF {m} with the transient flag, {m2} without"))
}

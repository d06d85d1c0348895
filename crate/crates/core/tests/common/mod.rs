//! Shared helpers for integration tests: a random tree generator and a
//! brute-force reference analysis.

#![allow(dead_code)]

pub mod checks;
pub mod oracle;

use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use dftmc::dft::{validate, BasicEvent, Dft, DftBuilder, GateKind, RateExpr};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// A random well-formed tree with at most `max_be` basic events, mixing all
/// gate types and dependencies. Rates are multiples of 1/4 in [0.5, 3].
pub fn random_dft(rng: &mut impl Rng, max_be: usize) -> Dft {
    loop {
        if let Some(d) = attempt(rng, max_be) {
            return d;
        }
    }
}

fn attempt(rng: &mut impl Rng, max_be: usize) -> Option<Dft> {
    let mut b = DftBuilder::new();
    let n_be = rng.random_range(2..=max_be);
    let mut bes = Vec::new();
    for i in 0..n_be {
        let name = format!("B{i}");
        let rate = rng.random_range(2..=12) as f64 / 4.0;
        let mut be = BasicEvent::new(RateExpr::constant(rate));
        let roll: f64 = rng.random();
        if roll < 0.25 {
            be = be.dormancy(*[0.0, 0.5].choose(rng).unwrap());
        } else if roll < 0.33 {
            be = be.transient();
        } else if roll < 0.37 {
            be = BasicEvent::dummy();
        }
        b.basic(&name, be);
        bes.push(name);
    }

    // Gates are built bottom-up; `roots` holds elements without a parent.
    let mut roots: Vec<String> = bes.clone();
    let mut all: Vec<String> = bes.clone();
    let n_gates = rng.random_range(1..=4);
    for g in 0..n_gates {
        if roots.len() < 2 && all.len() < 2 {
            break;
        }
        let kind = match rng.random_range(0..5) {
            0 => GateKind::And,
            1 => GateKind::Or,
            2 => GateKind::Pand,
            3 => GateKind::Spare,
            _ => GateKind::Vot(2),
        };
        let k = rng.random_range(2..=3).min(all.len());
        // prefer parentless elements so the tree stays connected
        let mut pool: Vec<String> = roots.clone();
        pool.shuffle(rng);
        let mut children: Vec<String> = pool.into_iter().take(k).collect();
        while children.len() < k {
            let c = all.choose(rng).unwrap().clone();
            if !children.contains(&c) {
                children.push(c);
            }
        }
        let kind = match kind {
            GateKind::Vot(_) => GateKind::Vot(rng.random_range(1..=children.len() as u32)),
            k => k,
        };
        let name = format!("G{g}");
        b.gate(&name, kind, &children);
        roots.retain(|r| !children.contains(r));
        roots.push(name.clone());
        all.push(name);
    }
    let top = if roots.len() == 1 && !bes.contains(&roots[0]) {
        roots[0].clone()
    } else {
        let kind = *[GateKind::And, GateKind::Or].choose(rng).unwrap();
        b.gate("T", kind, &roots);
        all.push("T".into());
        "T".to_string()
    };
    b.top(&top);

    if n_be >= 2 && rng.random_bool(0.2) {
        let mut pair = bes.clone();
        pair.shuffle(rng);
        b.gate("Q", GateKind::Seq, &pair[..2]);
    }
    if rng.random_bool(0.35) {
        let trigger = all.choose(rng).unwrap().clone();
        let n = rng.random_range(1..=2);
        let mut targets = bes.clone();
        targets.shuffle(rng);
        b.fdep("F", &trigger, &targets[..n.min(targets.len())]);
    }
    if rng.random_bool(0.15) {
        let source = all.choose(rng).unwrap().clone();
        let target = all.choose(rng).unwrap().clone();
        b.adep("D", &source, &[target]);
    }
    let dft = b.build().ok()?;
    validate(&dft).is_empty().then_some(dft)
}

pub fn rel_close(a: f64, b: f64, tol: f64) -> bool {
    if a.is_infinite() || b.is_infinite() {
        return a == b;
    }
    (a - b).abs() <= tol * a.abs().max(b.abs()).max(1e-12)
}

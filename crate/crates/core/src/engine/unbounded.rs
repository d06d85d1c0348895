//! Unbounded reachability, expected times and forward absorption.

use std::collections::VecDeque;

use fixedbitset::FixedBitSet;

use super::{solve, Chain, EngineError, Tolerances};

/// States reachable from `sources`; states in `stop` are reached but not
/// expanded.
pub fn reachable_from(chain: &Chain, sources: &[usize], stop: &FixedBitSet) -> FixedBitSet {
    let mut seen = FixedBitSet::with_capacity(chain.len());
    let mut queue: VecDeque<usize> = VecDeque::new();
    for &s in sources {
        if !seen.put(s) {
            queue.push_back(s);
        }
    }
    while let Some(s) = queue.pop_front() {
        if stop.contains(s) {
            continue;
        }
        for (t, _) in chain.row(s) {
            if !seen.put(t) {
                queue.push_back(t);
            }
        }
    }
    seen
}

/// States that can reach `target` without passing through `avoid`
/// (target states themselves included).
pub fn can_reach(chain: &Chain, target: &FixedBitSet, avoid: &FixedBitSet) -> FixedBitSet {
    let pre = chain.predecessors();
    let mut seen = FixedBitSet::with_capacity(chain.len());
    let mut queue: VecDeque<usize> = target.ones().collect();
    for s in target.ones() {
        seen.insert(s);
    }
    while let Some(s) = queue.pop_front() {
        for &p in &pre[s] {
            let p = p as usize;
            if !avoid.contains(p) && !seen.put(p) {
                queue.push_back(p);
            }
        }
    }
    seen
}

fn local_index(n: usize, states: &[usize]) -> Vec<usize> {
    let mut local = vec![usize::MAX; n];
    for (i, &s) in states.iter().enumerate() {
        local[s] = i;
    }
    local
}

/// `P^s(¬bad U target)` for every state; a state in both sets counts as target.
pub fn unbounded_reach_avoid(
    chain: &Chain,
    bad: &FixedBitSet,
    target: &FixedBitSet,
    tol: &Tolerances,
) -> Result<Vec<f64>, EngineError> {
    let n = chain.len();
    let mut avoid = bad.clone();
    avoid.grow(n);
    avoid.difference_with(target);
    let yes_or_maybe = can_reach(chain, target, &avoid);
    let maybe: Vec<usize> = yes_or_maybe
        .ones()
        .filter(|&s| !target.contains(s))
        .collect();
    let local = local_index(n, &maybe);
    let a = chain.embedded(&maybe, &local);
    let b: Vec<f64> = maybe
        .iter()
        .map(|&s| {
            let e = chain.exit(s);
            chain
                .row(s)
                .filter(|(t, _)| target.contains(*t))
                .map(|(_, r)| r / e)
                .sum()
        })
        .collect();
    let y = solve(&a, &b, tol)?;
    let mut x = vec![0.0; n];
    for s in target.ones() {
        x[s] = 1.0;
    }
    for (i, &s) in maybe.iter().enumerate() {
        x[s] = y[i].clamp(0.0, 1.0);
    }
    Ok(x)
}

/// Expected time to reach `target`. States in `from` must reach the target
/// almost surely; other states that cannot get `f64::INFINITY`.
pub fn expected_time(
    chain: &Chain,
    target: &FixedBitSet,
    from: &[usize],
    tol: &Tolerances,
) -> Result<Vec<f64>, EngineError> {
    let boundary: Vec<Option<f64>> = (0..chain.len())
        .map(|s| target.contains(s).then_some(0.0))
        .collect();
    expected_time_with_boundary(chain, &boundary, from, tol)
}

/// Expected time until absorption in a boundary state plus that state's
/// value. Boundary values may be infinite; states that reach such a state
/// with positive probability get an infinite result. A queried state from
/// which a non-boundary dead end is reachable makes the result undefined.
pub fn expected_time_with_boundary(
    chain: &Chain,
    boundary: &[Option<f64>],
    from: &[usize],
    tol: &Tolerances,
) -> Result<Vec<f64>, EngineError> {
    let n = chain.len();
    let is_boundary = super::mask(n, (0..n).filter(|&s| boundary[s].is_some()));
    let infinite = super::mask(
        n,
        (0..n).filter(|&s| boundary[s].is_some_and(|v| v.is_infinite())),
    );
    let finite = {
        let mut f = is_boundary.clone();
        f.difference_with(&infinite);
        f
    };
    let none = FixedBitSet::with_capacity(n);
    let reaches_boundary = can_reach(chain, &is_boundary, &none);
    let mut dead = FixedBitSet::with_capacity(n);
    dead.insert_range(..);
    dead.difference_with(&reaches_boundary);
    // positive probability of ending in a dead end
    let undefined = can_reach(chain, &dead, &is_boundary);
    for &s in from {
        if undefined.contains(s) {
            let seen = reachable_from(chain, &[s], &is_boundary);
            // prefer an absorbing dead end as the witness
            let witness = seen
                .ones()
                .find(|&w| dead.contains(w) && chain.exit(w) == 0.0)
                .or_else(|| seen.ones().find(|&w| dead.contains(w)))
                .unwrap_or(s);
            return Err(EngineError::Undefined { witness });
        }
    }
    let to_infinity = can_reach(chain, &infinite, &finite);
    let solvable: Vec<usize> = (0..n)
        .filter(|&s| !is_boundary.contains(s) && !undefined.contains(s) && !to_infinity.contains(s))
        .collect();
    let local = local_index(n, &solvable);
    let a = chain.embedded(&solvable, &local);
    let b: Vec<f64> = solvable
        .iter()
        .map(|&s| {
            let e = chain.exit(s);
            1.0 / e
                + chain
                    .row(s)
                    .filter_map(|(t, r)| boundary[t].map(|v| r / e * v))
                    .sum::<f64>()
        })
        .collect();
    let y = solve(&a, &b, tol)?;
    let mut x = vec![f64::INFINITY; n];
    for s in finite.ones() {
        x[s] = boundary[s].unwrap();
    }
    for (i, &s) in solvable.iter().enumerate() {
        x[s] = y[i];
    }
    Ok(x)
}

/// Probability that the first `absorbing` state reached from `initial` is
/// `s`, for every `s` (zero for non-absorbing states). Solved as expected
/// visit counts on the transposed system.
pub fn absorption_forward(
    chain: &Chain,
    absorbing: &FixedBitSet,
    initial: &[f64],
    tol: &Tolerances,
) -> Result<Vec<f64>, EngineError> {
    let n = chain.len();
    let sources: Vec<usize> = (0..n).filter(|&s| initial[s] > 0.0).collect();
    let reach = reachable_from(chain, &sources, absorbing);
    let transient: Vec<usize> = reach.ones().filter(|&s| !absorbing.contains(s)).collect();
    let local = local_index(n, &transient);
    let a = chain.embedded(&transient, &local).transpose();
    let b: Vec<f64> = transient.iter().map(|&s| initial[s]).collect();
    let visits = solve(&a, &b, tol)?;
    let mut x = vec![0.0; n];
    for s in absorbing.ones() {
        x[s] = initial[s];
    }
    for (i, &u) in transient.iter().enumerate() {
        let e = chain.exit(u);
        if e == 0.0 {
            continue;
        }
        for (t, r) in chain.row(u) {
            if absorbing.contains(t) {
                x[t] += visits[i] * r / e;
            }
        }
    }
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    Ok(x)
}

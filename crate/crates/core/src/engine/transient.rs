//! Time-bounded analysis by uniformization.

use fixedbitset::FixedBitSet;

use super::{poisson_weights, Chain};

const SLACK: f64 = 1.02;

/// Uniformized one-step operators; `absorbing` rows act as the identity.
struct Uniformized<'a> {
    chain: &'a Chain,
    absorbing: &'a FixedBitSet,
    lambda: f64,
}

impl<'a> Uniformized<'a> {
    fn new(chain: &'a Chain, absorbing: &'a FixedBitSet) -> Self {
        let max = (0..chain.len())
            .filter(|&s| !absorbing.contains(s))
            .map(|s| chain.exit(s))
            .fold(0.0, f64::max);
        Uniformized {
            chain,
            absorbing,
            lambda: SLACK * max,
        }
    }

    /// out = P · x
    fn backward(&self, x: &[f64], out: &mut [f64]) {
        for s in 0..x.len() {
            if self.absorbing.contains(s) {
                out[s] = x[s];
                continue;
            }
            let mut acc = (1.0 - self.chain.exit(s) / self.lambda) * x[s];
            for (t, r) in self.chain.row(s) {
                acc += r / self.lambda * x[t];
            }
            out[s] = acc;
        }
    }

    /// out = x · P
    fn forward(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|v| *v = 0.0);
        for s in 0..x.len() {
            let xs = x[s];
            if xs == 0.0 {
                continue;
            }
            if self.absorbing.contains(s) {
                out[s] += xs;
                continue;
            }
            out[s] += (1.0 - self.chain.exit(s) / self.lambda) * xs;
            for (t, r) in self.chain.row(s) {
                out[t] += r / self.lambda * xs;
            }
        }
    }

    fn run(&self, t: f64, eps: f64, start: Vec<f64>, forward: bool) -> Vec<f64> {
        if t == 0.0 || self.lambda == 0.0 {
            return start;
        }
        let w = poisson_weights(self.lambda * t, eps);
        let n = start.len();
        let mut acc = vec![0.0; n];
        let mut cur = start;
        let mut next = vec![0.0; n];
        for k in 0..=w.right {
            if k >= w.left {
                let wk = w.weight(k);
                for (a, c) in acc.iter_mut().zip(&cur) {
                    *a += wk * c;
                }
            }
            if k < w.right {
                if forward {
                    self.forward(&cur, &mut next);
                } else {
                    self.backward(&cur, &mut next);
                }
                std::mem::swap(&mut cur, &mut next);
            }
        }
        acc
    }
}

/// State distribution at time `t` from `initial`.
pub fn transient_distribution(chain: &Chain, t: f64, initial: &[f64], eps: f64) -> Vec<f64> {
    let none = FixedBitSet::with_capacity(chain.len());
    Uniformized::new(chain, &none).run(t, eps, initial.to_vec(), true)
}

/// `P^s(¬bad U≤t target)` for every state `s`; a state in both sets counts
/// as target.
pub fn bounded_reach_backward(
    chain: &Chain,
    bad: &FixedBitSet,
    target: &FixedBitSet,
    t: f64,
    eps: f64,
) -> Vec<f64> {
    let mut absorbing = bad.clone();
    absorbing.grow(chain.len());
    absorbing.union_with(target);
    let start: Vec<f64> = (0..chain.len())
        .map(|s| if target.contains(s) { 1.0 } else { 0.0 })
        .collect();
    let mut x = Uniformized::new(chain, &absorbing).run(t, eps, start, false);
    for v in &mut x {
        *v = v.clamp(0.0, 1.0);
    }
    x
}

/// Probability, for each state, of being the first `absorbing` state reached
/// within `t` from the initial distribution; zero for non-absorbing states.
pub fn bounded_first_passage_forward(
    chain: &Chain,
    absorbing: &FixedBitSet,
    initial: &[f64],
    t: f64,
    eps: f64,
) -> Vec<f64> {
    let mut x = Uniformized::new(chain, absorbing).run(t, eps, initial.to_vec(), true);
    for (s, v) in x.iter_mut().enumerate() {
        *v = if absorbing.contains(s) {
            v.clamp(0.0, 1.0)
        } else {
            0.0
        };
    }
    x
}

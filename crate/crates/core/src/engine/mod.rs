//! Numeric kernels over sparse continuous-time Markov chains.

mod linear;
mod poisson;
mod transient;
mod unbounded;

use fixedbitset::FixedBitSet;
use thiserror::Error;

pub use linear::{solve, Sparse};
pub use poisson::{poisson_weights, PoissonWeights};
pub use transient::{
    bounded_first_passage_forward, bounded_reach_backward, transient_distribution,
};
pub use unbounded::{
    absorption_forward, can_reach, expected_time, expected_time_with_boundary, reachable_from,
    unbounded_reach_avoid,
};

#[derive(Debug, Error, Clone, PartialEq)]
pub enum EngineError {
    #[error(
        "expected time is undefined: state {witness} cannot reach the target with probability one"
    )]
    Undefined { witness: usize },
    #[error("iterative solver did not converge within {iterations} iterations")]
    NoConvergence { iterations: usize },
}

/// Numerical tolerances.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// Poisson truncation mass for uniformization.
    pub eps_u: f64,
    /// Relative-change stopping criterion for iterative solves.
    pub eps_l: f64,
    /// Largest strongly connected component solved by dense elimination.
    pub dense_limit: usize,
    pub max_iterations: usize,
}

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances {
            eps_u: 1e-10,
            eps_l: 1e-12,
            dense_limit: 2000,
            max_iterations: 1_000_000,
        }
    }
}

/// Rate matrix in compressed-row form. Diagonal entries are implicit.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Chain {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    rates: Vec<f64>,
    exit: Vec<f64>,
}

impl Chain {
    /// Rows of `(target, rate)`; entries with equal targets are summed and
    /// non-positive rates dropped.
    pub fn from_rows(rows: impl IntoIterator<Item = Vec<(usize, f64)>>) -> Self {
        let mut c = Chain {
            row_ptr: vec![0],
            ..Default::default()
        };
        for row in rows {
            c.push_row(row);
        }
        c
    }

    pub fn push_row(&mut self, mut row: Vec<(usize, f64)>) {
        row.sort_by_key(|e| e.0);
        let mut exit = 0.0;
        let start = self.cols.len();
        for (t, r) in row {
            if r <= 0.0 {
                continue;
            }
            exit += r;
            if self.cols.len() > start && *self.cols.last().unwrap() as usize == t {
                *self.rates.last_mut().unwrap() += r;
            } else {
                self.cols.push(t as u32);
                self.rates.push(r);
            }
        }
        self.exit.push(exit);
        self.row_ptr.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.exit.len()
    }

    pub fn is_empty(&self) -> bool {
        self.exit.is_empty()
    }

    pub fn transitions(&self) -> usize {
        self.cols.len()
    }

    pub fn row(&self, s: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[s]..self.row_ptr[s + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.rates[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn exit(&self, s: usize) -> f64 {
        self.exit[s]
    }

    pub fn max_exit(&self) -> f64 {
        self.exit.iter().copied().fold(0.0, f64::max)
    }

    /// Predecessor lists.
    pub fn predecessors(&self) -> Vec<Vec<u32>> {
        let mut pre = vec![Vec::new(); self.len()];
        for s in 0..self.len() {
            for (t, _) in self.row(s) {
                pre[t].push(s as u32);
            }
        }
        pre
    }

    /// Embedded-DTMC transition probabilities restricted to rows in `keep`
    /// and columns in `cols`, in local indices given by `local`.
    pub(crate) fn embedded(&self, states: &[usize], local: &[usize]) -> Sparse {
        let mut m = Sparse::new();
        for &s in states {
            let mut row = Vec::new();
            let e = self.exit[s];
            if e > 0.0 {
                for (t, r) in self.row(s) {
                    if local[t] != usize::MAX {
                        row.push((local[t], r / e));
                    }
                }
            }
            m.push_row(row);
        }
        m
    }
}

pub(crate) fn mask(n: usize, states: impl IntoIterator<Item = usize>) -> FixedBitSet {
    let mut m = FixedBitSet::with_capacity(n);
    for s in states {
        m.insert(s);
    }
    m
}

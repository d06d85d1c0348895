//! Solver for `x = b + A·x` with substochastic `A`.
//!
//! Strongly connected components are solved one at a time in reverse
//! topological order, so acyclic chains (the common case for fault trees)
//! reduce to back substitution. Small cyclic components use dense pivoted
//! elimination, large ones Gauss–Seidel.

use super::{EngineError, Tolerances};

#[derive(Debug, Clone, PartialEq, Default)]
pub struct Sparse {
    row_ptr: Vec<usize>,
    cols: Vec<u32>,
    vals: Vec<f64>,
}

impl Sparse {
    pub fn new() -> Self {
        Sparse {
            row_ptr: vec![0],
            cols: Vec::new(),
            vals: Vec::new(),
        }
    }

    pub fn push_row(&mut self, row: Vec<(usize, f64)>) {
        for (c, v) in row {
            self.cols.push(c as u32);
            self.vals.push(v);
        }
        self.row_ptr.push(self.cols.len());
    }

    pub fn len(&self) -> usize {
        self.row_ptr.len() - 1
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn row(&self, i: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        let r = self.row_ptr[i]..self.row_ptr[i + 1];
        self.cols[r.clone()]
            .iter()
            .zip(&self.vals[r])
            .map(|(&c, &v)| (c as usize, v))
    }

    pub fn transpose(&self) -> Sparse {
        let n = self.len();
        let mut rows: Vec<Vec<(usize, f64)>> = vec![Vec::new(); n];
        for i in 0..n {
            for (j, v) in self.row(i) {
                rows[j].push((i, v));
            }
        }
        let mut t = Sparse::new();
        for r in rows {
            t.push_row(r);
        }
        t
    }
}

/// Iterative Tarjan; components come out sinks first.
fn tarjan(a: &Sparse) -> Vec<Vec<usize>> {
    let n = a.len();
    const UNSEEN: usize = usize::MAX;
    let mut index = vec![UNSEEN; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comps = Vec::new();
    let mut counter = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSEEN {
            continue;
        }
        call.push((root, a.row_ptr[root]));
        index[root] = counter;
        low[root] = counter;
        counter += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < a.row_ptr[v + 1] {
                let w = a.cols[*pos] as usize;
                *pos += 1;
                if index[w] == UNSEEN {
                    index[w] = counter;
                    low[w] = counter;
                    counter += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, a.row_ptr[w]));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(u, _)) = call.last() {
                    low[u] = low[u].min(low[v]);
                }
                if low[v] == index[v] {
                    let mut comp = Vec::new();
                    loop {
                        let w = stack.pop().unwrap();
                        on_stack[w] = false;
                        comp.push(w);
                        if w == v {
                            break;
                        }
                    }
                    comp.sort_unstable();
                    comps.push(comp);
                }
            }
        }
    }
    comps
}

/// Solves `x = b + A·x`. `I − A` must be non-singular on every component.
pub fn solve(a: &Sparse, b: &[f64], tol: &Tolerances) -> Result<Vec<f64>, EngineError> {
    let n = a.len();
    assert_eq!(b.len(), n);
    let mut x = vec![0.0; n];
    let mut comp_of = vec![usize::MAX; n];
    for (ci, comp) in tarjan(a).into_iter().enumerate() {
        for &s in &comp {
            comp_of[s] = ci;
        }
        if comp.len() == 1 {
            let s = comp[0];
            let mut rhs = b[s];
            let mut diag = 0.0;
            for (t, v) in a.row(s) {
                if t == s {
                    diag += v;
                } else {
                    rhs += v * x[t];
                }
            }
            x[s] = rhs / (1.0 - diag);
            continue;
        }
        // right-hand side with already solved successors folded in
        let local: std::collections::HashMap<usize, usize> =
            comp.iter().enumerate().map(|(i, &s)| (s, i)).collect();
        let mut rhs: Vec<f64> = comp.iter().map(|&s| b[s]).collect();
        for (i, &s) in comp.iter().enumerate() {
            for (t, v) in a.row(s) {
                if comp_of[t] != ci {
                    rhs[i] += v * x[t];
                }
            }
        }
        let sol = if comp.len() <= tol.dense_limit {
            dense(a, &comp, &local, rhs)
        } else {
            gauss_seidel(a, &comp, &local, rhs, tol)?
        };
        for (i, &s) in comp.iter().enumerate() {
            x[s] = sol[i];
        }
    }
    Ok(x)
}

fn dense(
    a: &Sparse,
    comp: &[usize],
    local: &std::collections::HashMap<usize, usize>,
    mut rhs: Vec<f64>,
) -> Vec<f64> {
    let m = comp.len();
    let mut mat = vec![0.0; m * m];
    for (i, &s) in comp.iter().enumerate() {
        mat[i * m + i] += 1.0;
        for (t, v) in a.row(s) {
            if let Some(&j) = local.get(&t) {
                mat[i * m + j] -= v;
            }
        }
    }
    for col in 0..m {
        let piv = (col..m)
            .max_by(|&p, &q| mat[p * m + col].abs().total_cmp(&mat[q * m + col].abs()))
            .unwrap();
        if piv != col {
            for k in 0..m {
                mat.swap(col * m + k, piv * m + k);
            }
            rhs.swap(col, piv);
        }
        let d = mat[col * m + col];
        for r in col + 1..m {
            let f = mat[r * m + col] / d;
            if f == 0.0 {
                continue;
            }
            for k in col..m {
                mat[r * m + k] -= f * mat[col * m + k];
            }
            rhs[r] -= f * rhs[col];
        }
    }
    let mut x = vec![0.0; m];
    for i in (0..m).rev() {
        let mut acc = rhs[i];
        for k in i + 1..m {
            acc -= mat[i * m + k] * x[k];
        }
        x[i] = acc / mat[i * m + i];
    }
    x
}

fn gauss_seidel(
    a: &Sparse,
    comp: &[usize],
    local: &std::collections::HashMap<usize, usize>,
    rhs: Vec<f64>,
    tol: &Tolerances,
) -> Result<Vec<f64>, EngineError> {
    let m = comp.len();
    let rows: Vec<(f64, Vec<(usize, f64)>)> = comp
        .iter()
        .map(|&s| {
            let mut diag = 0.0;
            let mut off = Vec::new();
            for (t, v) in a.row(s) {
                match local.get(&t) {
                    Some(_) if t == s => diag += v,
                    Some(&j) => off.push((j, v)),
                    None => {}
                }
            }
            (1.0 - diag, off)
        })
        .collect();
    let mut x = vec![0.0; m];
    for it in 0..tol.max_iterations {
        let mut max_change: f64 = 0.0;
        for i in 0..m {
            let (d, off) = &rows[i];
            let mut acc = rhs[i];
            for &(j, v) in off {
                acc += v * x[j];
            }
            let new = acc / d;
            let change = (new - x[i]).abs() / new.abs().max(f64::MIN_POSITIVE);
            max_change = max_change.max(if new == 0.0 && x[i] == 0.0 {
                0.0
            } else {
                change
            });
            x[i] = new;
        }
        if max_change <= tol.eps_l && it > 0 {
            return Ok(x);
        }
    }
    Err(EngineError::NoConvergence {
        iterations: tol.max_iterations,
    })
}

//! Exact maximum-weight perfect matching on square rational weight matrices.
//!
//! The Hungarian method runs on negated weights and yields optimal dual
//! potentials. Every optimal matching uses only edges that are tight under
//! those potentials, so the returned matching is the lexicographically
//! smallest perfect matching of the tight subgraph: row 0 gets the smallest
//! column it can take in some optimum, then row 1, and so on.

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};

use crate::rational::Rational;

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Matching {
    /// `assignment[row] = column`.
    pub assignment: Vec<usize>,
    pub total: Rational,
}

/// Panics if `weights` is not square.
pub fn max_weight_perfect_matching(weights: &[Vec<Rational>]) -> Matching {
    let n = weights.len();
    assert!(weights.iter().all(|row| row.len() == n), "weight matrix must be square");
    if n == 0 {
        return Matching {
            assignment: Vec::new(),
            total: Rational::zero(),
        };
    }
    let (first, tight) = match scaled(weights) {
        Some(ints) => solve(&ints),
        None => solve(weights),
    };
    let assignment = lexicographic_fix(&tight, first);
    let total = assignment
        .iter()
        .enumerate()
        .map(|(i, &j)| &weights[i][j])
        .sum();
    Matching { assignment, total }
}

/// Weights as integers over a common denominator, when potentials and
/// path sums stay far from overflow.
fn scaled(weights: &[Vec<Rational>]) -> Option<Vec<Vec<i128>>> {
    let mut lcm = BigInt::one();
    for w in weights.iter().flatten() {
        lcm = lcm.lcm(w.denom());
    }
    let limit = (1i128 << 100) / (weights.len() as i128 + 1);
    weights
        .iter()
        .map(|row| {
            row.iter()
                .map(|w| (w.numer() * (&lcm / w.denom())).to_i128().filter(|v| v.abs() <= limit))
                .collect()
        })
        .collect()
}

trait Weight: Clone + Ord {
    fn zero() -> Self;
    fn neg(&self) -> Self;
    fn add(&self, other: &Self) -> Self;
    fn sub(&self, other: &Self) -> Self;
    fn is_zero(&self) -> bool;
}

impl Weight for i128 {
    fn zero() -> Self {
        0
    }
    fn neg(&self) -> Self {
        -self
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn is_zero(&self) -> bool {
        *self == 0
    }
}

impl Weight for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn neg(&self) -> Self {
        -self.clone()
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn sub(&self, other: &Self) -> Self {
        self - other
    }
    fn is_zero(&self) -> bool {
        Rational::is_zero(self)
    }
}

/// Some optimal assignment and the tight edges under its dual potentials.
fn solve<T: Weight>(weights: &[Vec<T>]) -> (Vec<usize>, Vec<Vec<usize>>) {
    let n = weights.len();
    let (first, u, v) = hungarian_min(weights);
    let tight = (0..n)
        .map(|i| {
            (0..n)
                .filter(|&j| weights[i][j].neg().sub(&u[i + 1]).sub(&v[j + 1]).is_zero())
                .collect()
        })
        .collect();
    (first, tight)
}

/// Minimizes `sum(-w)`; returns `(row -> col, row potentials, col potentials)`
/// with 1-based potential arrays.
fn hungarian_min<T: Weight>(weights: &[Vec<T>]) -> (Vec<usize>, Vec<T>, Vec<T>) {
    let n = weights.len();
    let cost = |i: usize, j: usize| weights[i - 1][j - 1].neg();
    let mut u = vec![T::zero(); n + 1];
    let mut v = vec![T::zero(); n + 1];
    let mut p = vec![0usize; n + 1];
    let mut way = vec![0usize; n + 1];

    for i in 1..=n {
        p[0] = i;
        let mut j0 = 0usize;
        let mut minv: Vec<Option<T>> = vec![None; n + 1];
        let mut used = vec![false; n + 1];
        loop {
            used[j0] = true;
            let i0 = p[j0];
            let mut delta: Option<T> = None;
            let mut j1 = 0usize;
            for j in 1..=n {
                if used[j] {
                    continue;
                }
                let cur = cost(i0, j).sub(&u[i0]).sub(&v[j]);
                if minv[j].as_ref().is_none_or(|m| cur < *m) {
                    minv[j] = Some(cur);
                    way[j] = j0;
                }
                let mj = minv[j].as_ref().expect("set above");
                if delta.as_ref().is_none_or(|d| mj < d) {
                    delta = Some(mj.clone());
                    j1 = j;
                }
            }
            let delta = delta.expect("an unused column remains");
            for j in 0..=n {
                if used[j] {
                    u[p[j]] = u[p[j]].add(&delta);
                    v[j] = v[j].sub(&delta);
                } else if let Some(m) = minv[j].as_mut() {
                    *m = m.sub(&delta);
                }
            }
            j0 = j1;
            if p[j0] == 0 {
                break;
            }
        }
        loop {
            let j1 = way[j0];
            p[j0] = p[j1];
            j0 = j1;
            if j0 == 0 {
                break;
            }
        }
    }

    let mut assignment = vec![0usize; n];
    for j in 1..=n {
        if p[j] > 0 {
            assignment[p[j] - 1] = j - 1;
        }
    }
    (assignment, u, v)
}

/// Lexicographically smallest perfect matching of the bipartite graph
/// `adj` (rows to sorted column lists), starting from any perfect matching.
fn lexicographic_fix(adj: &[Vec<usize>], start: Vec<usize>) -> Vec<usize> {
    let n = adj.len();
    let mut row_col: Vec<Option<usize>> = start.into_iter().map(Some).collect();
    let mut col_row: Vec<Option<usize>> = vec![None; n];
    for (r, c) in row_col.iter().enumerate() {
        col_row[c.expect("perfect")] = Some(r);
    }

    for r in 0..n {
        let current = row_col[r].expect("perfect");
        for &c in &adj[r] {
            if c == current {
                break;
            }
            let owner = col_row[c].expect("perfect");
            if owner < r {
                continue;
            }
            // Tentatively give c to r and try to rematch its owner elsewhere.
            let mut blocked = vec![false; n];
            blocked[c] = true;
            for fixed in 0..r {
                blocked[row_col[fixed].expect("perfect")] = true;
            }
            row_col[r] = Some(c);
            col_row[c] = Some(r);
            col_row[current] = None;
            row_col[owner] = None;
            if augment(owner, adj, &mut row_col, &mut col_row, &mut blocked) {
                break;
            }
            row_col[r] = Some(current);
            col_row[current] = Some(r);
            col_row[c] = Some(owner);
            row_col[owner] = Some(c);
        }
    }
    row_col.into_iter().map(|c| c.expect("perfect")).collect()
}

fn augment(
    row: usize,
    adj: &[Vec<usize>],
    row_col: &mut [Option<usize>],
    col_row: &mut [Option<usize>],
    visited: &mut [bool],
) -> bool {
    for &c in &adj[row] {
        if visited[c] {
            continue;
        }
        visited[c] = true;
        let free = match col_row[c] {
            None => true,
            Some(next) => augment(next, adj, row_col, col_row, visited),
        };
        if free {
            col_row[c] = Some(row);
            row_col[row] = Some(c);
            return true;
        }
    }
    false
}

//! Worst-case instances attaining the closed-form prices.
//!
//! Each constructor checks the hypotheses its ratio claim depends on and
//! rejects parameter sets outside them.

use crate::bounds::{floor_s, MultiCatBoundParams};
use crate::error::{Error, Result};
use crate::instance::{canonical_pairs, CategorySpec, Instance};
use crate::rational::Rational;

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn zeros(n: usize, m: usize) -> Vec<Vec<Rational>> {
    vec![vec![Rational::zero(); m]; n]
}

/// Categories laid out contiguously in the given order.
fn contiguous_categories(pairs: &[(usize, usize)]) -> Vec<CategorySpec> {
    let mut start = 0;
    pairs
        .iter()
        .enumerate()
        .map(|(id, &(m, k))| {
            let cat = CategorySpec::contiguous(id, start, m, k);
            start += m;
            cat
        })
        .collect()
}

/// Divisible single-category construction with `m = k(c^2-1) + 1` and
/// `s = c - 1`: agents `0..s` each value a disjoint block of `(m-1)/s`
/// items at `s/(m-1)`, the remaining agents value only the last item.
pub fn gen_usw_single_divisible(c: usize, k: usize, n: usize) -> Result<Instance> {
    if c < 2 {
        return Err(domain("c must be at least 2"));
    }
    if k == 0 {
        return Err(domain("k must be positive"));
    }
    let m = k * (c * c - 1) + 1;
    let s = c - 1;
    if n * k < m {
        return Err(domain(format!("n * k >= m required (m = {m})")));
    }
    if n < s + 1 {
        return Err(domain(format!("n >= s + 1 = {} required", s + 1)));
    }
    let block = (m - 1) / s;
    let mut rows = zeros(n, m);
    for (i, row) in rows.iter_mut().enumerate().take(s) {
        for g in i * block..(i + 1) * block {
            row[g] = Rational::from(s) / Rational::from(m - 1);
        }
    }
    for row in rows.iter_mut().skip(s) {
        row[m - 1] = Rational::one();
    }
    Instance::single_category(n, k, rows)
}

/// General single-category construction with `t = max(floor(s), 1)`:
/// agents `0..t` value disjoint blocks of `floor((m-1)/t)` items uniformly,
/// the remaining agents value only the last item. Items between the blocks
/// and the last item are worth nothing to anyone.
pub fn gen_usw_single_general(m: usize, k: usize, n: usize) -> Result<Instance> {
    if k == 0 || m < k + 2 {
        return Err(domain("m - 2 >= k >= 1 required"));
    }
    let t = floor_s(m as u64, k as u64).max(1) as usize;
    if n * k < m {
        return Err(domain(format!("n >= m/k required (m = {m}, k = {k})")));
    }
    if n < t + 1 {
        return Err(domain(format!("n >= t + 1 = {} required", t + 1)));
    }
    let block = (m - 1) / t;
    let mut rows = zeros(n, m);
    for (i, row) in rows.iter_mut().enumerate().take(t) {
        for g in i * block..(i + 1) * block {
            row[g] = Rational::one() / Rational::from(block);
        }
    }
    for row in rows.iter_mut().skip(t) {
        row[m - 1] = Rational::one();
    }
    Instance::single_category(n, k, rows)
}

/// Single-category egalitarian construction: agents `0..n-1` each value
/// one private item, the last agent spreads its value over the other
/// `m - n + 1` items.
pub fn gen_esw_single(m: usize, n: usize, k: usize) -> Result<Instance> {
    if n == 0 || k == 0 {
        return Err(domain("n and k must be positive"));
    }
    if m < n {
        return Err(domain("m >= n required"));
    }
    if n * k < m {
        return Err(domain("n * k >= m required"));
    }
    if m - n + 1 <= k {
        return Err(domain("m - n + 1 > k required (otherwise the price is 1)"));
    }
    let mut rows = zeros(n, m);
    for (i, row) in rows.iter_mut().enumerate().take(n - 1) {
        row[i] = Rational::one();
    }
    let share = Rational::one() / Rational::from(m - n + 1);
    for g in n - 1..m {
        rows[n - 1][g] = share.clone();
    }
    Instance::single_category(n, k, rows)
}

/// Two-agent construction: agent 0 is uniform on the first canonical
/// category, agent 1 on the second. Further categories are worthless.
pub fn gen_usw_two(pairs: &[(usize, usize)]) -> Result<Instance> {
    if pairs.len() < 2 {
        return Err(domain("at least two categories required"));
    }
    if pairs.iter().any(|&(m, k)| m == 0 || k == 0) {
        return Err(domain("category sizes and caps must be positive"));
    }
    if pairs.iter().any(|&(m, k)| 2 * k < m) {
        return Err(domain("2 * k_j >= m_j required for two agents"));
    }
    let pairs = canonical_pairs(pairs);
    let cats = contiguous_categories(&pairs);
    let m: usize = pairs.iter().map(|p| p.0).sum();
    let mut rows = zeros(2, m);
    for (agent, cat) in cats.iter().take(2).enumerate() {
        for &g in &cat.items {
            rows[agent][g] = Rational::one() / Rational::from(cat.len());
        }
    }
    Instance::new(2, cats, rows, true)
}

/// `n` categories of `q` items with cap `k`; agent `i` is uniform on
/// category `i`.
pub fn gen_usw_multi(n: usize, q: usize, k: usize) -> Result<Instance> {
    if n == 0 || k == 0 {
        return Err(domain("n and k must be positive"));
    }
    if q % k != 0 {
        return Err(domain("q must be divisible by k"));
    }
    if q < k || q > n * k {
        return Err(domain("k <= q <= n * k required"));
    }
    let cats = contiguous_categories(&vec![(q, k); n]);
    let mut rows = zeros(n, n * q);
    for (i, cat) in cats.iter().enumerate() {
        for &g in &cat.items {
            rows[i][g] = Rational::one() / Rational::from(q);
        }
    }
    Instance::new(n, cats, rows, true)
}

/// Multi-category egalitarian construction for whichever regime `n` and
/// the category sizes fall into.
pub fn gen_esw_multi(n: usize, pairs: &[(usize, usize)]) -> Result<Instance> {
    let params = MultiCatBoundParams::new(n as u64, pairs)?;
    let pairs = canonical_pairs(pairs);
    let m: usize = pairs.iter().map(|p| p.0).sum();
    if m < n {
        return Err(domain("m >= n required (otherwise the optimum is 0)"));
    }
    let cats = contiguous_categories(&pairs);
    let mut rows = zeros(n, m);

    if params.first_regime() {
        // Agent 0 uniform on C_1, everyone else on a private item of C_2.. .
        for &g in &cats[0].items {
            rows[0][g] = Rational::one() / Rational::from(cats[0].len());
        }
        let others = cats[1..].iter().flat_map(|c| c.items.iter().copied());
        for (agent, g) in (1..n).zip(others) {
            rows[agent][g] = Rational::one();
        }
        return Instance::new(n, cats, rows, true);
    }

    let worst = params.worst_category();
    let c = params.c_values[worst] as usize;
    let outside: Vec<usize> = cats
        .iter()
        .enumerate()
        .filter(|&(j, _)| j != worst)
        .flat_map(|(_, cat)| cat.items.iter().copied())
        .collect();
    let inside = &cats[worst].items;
    let mut agent = 0;
    if c == 0 {
        for &g in outside.iter().take(n - 1) {
            rows[agent][g] = Rational::one();
            agent += 1;
        }
        for &g in inside {
            rows[n - 1][g] = Rational::one() / Rational::from(inside.len());
        }
    } else {
        for &g in &outside {
            rows[agent][g] = Rational::one();
            agent += 1;
        }
        for &g in &inside[..c] {
            rows[agent][g] = Rational::one();
            agent += 1;
        }
        let rest = &inside[c..];
        for &g in rest {
            rows[n - 1][g] = Rational::one() / Rational::from(rest.len());
        }
    }
    debug_assert_eq!(agent, n - 1);
    Instance::new(n, cats, rows, true)
}

//! Exhaustive-search ground truth for small instances.
//!
//! Allocations are visited in item-major lexicographic order: item 0 is the
//! most significant position and agents are tried in ascending index order.
//! All optima keep the first allocation attaining them in that order.

use std::ops::{Add, Sub};

use num_bigint::BigInt;
use num_integer::Integer;
use num_traits::{One, ToPrimitive};
use serde::Serialize;

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::welfare::{poc_ratio, Objective};

/// Default cap on `n^m`, the number of assignments a search may visit.
pub const DEFAULT_BUDGET: u128 = 10_000_000;

/// Environment variable overriding [`DEFAULT_BUDGET`].
pub const BUDGET_ENV: &str = "CARDFAIR_BUDGET";

/// [`DEFAULT_BUDGET`], or the value of `CARDFAIR_BUDGET` when it parses.
pub fn default_budget() -> u128 {
    std::env::var(BUDGET_ENV)
        .ok()
        .and_then(|v| v.trim().replace('_', "").parse().ok())
        .unwrap_or(DEFAULT_BUDGET)
}

/// `n^m`, saturating.
pub fn assignment_count(inst: &Instance) -> u128 {
    (inst.n() as u128)
        .checked_pow(inst.m() as u32)
        .unwrap_or(u128::MAX)
}

fn check_budget(inst: &Instance, budget: u128) -> Result<()> {
    let required = assignment_count(inst);
    if required > budget {
        return Err(Error::BudgetExceeded { required, budget });
    }
    Ok(())
}

fn caps_and_categories(inst: &Instance) -> (Vec<usize>, Vec<usize>) {
    let caps = inst.categories().iter().map(|c| c.cap).collect();
    let cat_of = (0..inst.m()).map(|g| inst.category_of(g)).collect();
    (caps, cat_of)
}

/// Iterator over allocations in enumeration order.
pub struct Allocations {
    n: usize,
    caps: Vec<usize>,
    cat_of: Vec<usize>,
    cardinal_only: bool,
    owner: Vec<Option<usize>>,
    counts: Vec<usize>,
    depth: usize,
    done: bool,
}

impl Allocations {
    fn count_mut(&mut self, agent: usize, g: usize) -> &mut usize {
        let h = self.caps.len();
        &mut self.counts[agent * h + self.cat_of[g]]
    }

    /// Moves item `g` to its next admissible agent; clears it if none is left.
    fn try_next(&mut self, g: usize) -> bool {
        let start = match self.owner[g] {
            Some(a) => {
                *self.count_mut(a, g) -= 1;
                a + 1
            }
            None => 0,
        };
        let cap = self.caps[self.cat_of[g]];
        for a in start..self.n {
            if !self.cardinal_only || *self.count_mut(a, g) < cap {
                *self.count_mut(a, g) += 1;
                self.owner[g] = Some(a);
                return true;
            }
        }
        self.owner[g] = None;
        false
    }
}

impl Iterator for Allocations {
    type Item = Allocation;

    fn next(&mut self) -> Option<Allocation> {
        if self.done {
            return None;
        }
        let m = self.owner.len();
        let mut g = self.depth;
        if g == m {
            g -= 1;
        }
        loop {
            if self.try_next(g) {
                g += 1;
                if g == m {
                    self.depth = m;
                    let owners = self.owner.iter().map(|o| o.expect("assigned")).collect();
                    return Some(Allocation::from_owners(self.n, owners).expect("valid owners"));
                }
            } else if g == 0 {
                self.done = true;
                return None;
            } else {
                g -= 1;
            }
        }
    }
}

/// Every assignment of items to agents, or only the cardinal ones.
pub fn enumerate_allocations(inst: &Instance, cardinal_only: bool) -> Result<Allocations> {
    enumerate_allocations_with_budget(inst, cardinal_only, default_budget())
}

pub fn enumerate_allocations_with_budget(
    inst: &Instance,
    cardinal_only: bool,
    budget: u128,
) -> Result<Allocations> {
    check_budget(inst, budget)?;
    let (caps, cat_of) = caps_and_categories(inst);
    Ok(Allocations {
        n: inst.n(),
        counts: vec![0; inst.n() * caps.len()],
        caps,
        cat_of,
        cardinal_only,
        owner: vec![None; inst.m()],
        depth: 0,
        done: false,
    })
}

/// Values summed during the search: exact integers when the utilities
/// scale into `i128`, rationals otherwise.
trait Value: Clone + Ord {
    fn zero() -> Self;
    fn plus(&self, other: &Self) -> Self;
    fn minus(&self, other: &Self) -> Self;
}

impl Value for i128 {
    fn zero() -> Self {
        0
    }
    fn plus(&self, other: &Self) -> Self {
        self + other
    }
    fn minus(&self, other: &Self) -> Self {
        self - other
    }
}

impl Value for Rational {
    fn zero() -> Self {
        Rational::zero()
    }
    fn plus(&self, other: &Self) -> Self {
        Add::add(self, other)
    }
    fn minus(&self, other: &Self) -> Self {
        Sub::sub(self, other)
    }
}

#[derive(Clone, Debug)]
struct Best<T> {
    value: T,
    owner: Vec<usize>,
}

fn offer<T: Value>(slot: &mut Option<Best<T>>, value: &T, owner: &[usize]) {
    if slot.as_ref().is_none_or(|b| *value > b.value) {
        *slot = Some(Best {
            value: value.clone(),
            owner: owner.to_vec(),
        });
    }
}

/// Optima found in one pass: `[usw, esw]` over all visited allocations and
/// over the cardinal ones among them.
struct Optima<T> {
    any: [Option<Best<T>>; 2],
    cardinal: [Option<Best<T>>; 2],
}

struct Search<'a, T> {
    vals: &'a [Vec<T>],
    n: usize,
    h: usize,
    caps: &'a [usize],
    cat_of: &'a [usize],
    prune: bool,
    owner: Vec<usize>,
    counts: Vec<usize>,
    utils: Vec<T>,
    total: T,
    violations: usize,
    out: Optima<T>,
}

impl<T: Value> Search<'_, T> {
    fn run(&mut self, g: usize) {
        if g == self.owner.len() {
            let esw = self.utils.iter().min().expect("n >= 1").clone();
            offer(&mut self.out.any[0], &self.total, &self.owner);
            offer(&mut self.out.any[1], &esw, &self.owner);
            if self.violations == 0 {
                offer(&mut self.out.cardinal[0], &self.total, &self.owner);
                offer(&mut self.out.cardinal[1], &esw, &self.owner);
            }
            return;
        }
        let c = self.cat_of[g];
        let cap = self.caps[c];
        for a in 0..self.n {
            let slot = a * self.h + c;
            if self.prune && self.counts[slot] >= cap {
                continue;
            }
            let v = &self.vals[a][g];
            self.counts[slot] += 1;
            let over = self.counts[slot] == cap + 1;
            if over {
                self.violations += 1;
            }
            self.owner[g] = a;
            self.utils[a] = self.utils[a].plus(v);
            self.total = self.total.plus(v);
            self.run(g + 1);
            self.total = self.total.minus(v);
            self.utils[a] = self.utils[a].minus(v);
            if over {
                self.violations -= 1;
            }
            self.counts[slot] -= 1;
        }
    }
}

fn search<T: Value>(inst: &Instance, vals: &[Vec<T>], prune: bool) -> Optima<T> {
    let (caps, cat_of) = caps_and_categories(inst);
    let mut s = Search {
        vals,
        n: inst.n(),
        h: caps.len(),
        caps: &caps,
        cat_of: &cat_of,
        prune,
        owner: vec![0; inst.m()],
        counts: vec![0; inst.n() * caps.len()],
        utils: vec![T::zero(); inst.n()],
        total: T::zero(),
        violations: 0,
        out: Optima {
            any: [None, None],
            cardinal: [None, None],
        },
    };
    s.run(0);
    s.out
}

/// Utilities as integers over a common denominator, if they fit
/// comfortably in `i128`.
fn integer_scaling(inst: &Instance) -> Option<(Vec<Vec<i128>>, BigInt)> {
    let mut lcm = BigInt::one();
    for row in inst.utilities() {
        for u in row {
            lcm = lcm.lcm(u.denom());
        }
    }
    let limit = i128::MAX / (2 * inst.m() as i128 + 2);
    let mut rows = Vec::with_capacity(inst.n());
    for row in inst.utilities() {
        let mut out = Vec::with_capacity(row.len());
        for u in row {
            let v = (u.numer() * (&lcm / u.denom())).to_i128()?;
            if v > limit {
                return None;
            }
            out.push(v);
        }
        rows.push(out);
    }
    Some((rows, lcm))
}

/// Exact optima as rationals, with their enumeration-order-first witnesses.
struct Found {
    any: [(Rational, Vec<usize>); 2],
    cardinal: [(Rational, Vec<usize>); 2],
}

fn solve(inst: &Instance, prune: bool) -> Found {
    fn unpack<T: Clone>(slots: [Option<Best<T>>; 2], f: &dyn Fn(T) -> Rational) -> [(Rational, Vec<usize>); 2] {
        slots.map(|b| {
            let b = b.expect("feasible instances admit a cardinal allocation");
            (f(b.value), b.owner)
        })
    }
    match integer_scaling(inst) {
        Some((rows, lcm)) => {
            let out = search(inst, &rows, prune);
            let back = |v: i128| Rational::from_big(BigInt::from(v), lcm.clone()).expect("positive lcm");
            Found {
                any: unpack(out.any, &back),
                cardinal: unpack(out.cardinal, &back),
            }
        }
        None => {
            let out = search(inst, inst.utilities(), prune);
            Found {
                any: unpack(out.any, &|v| v),
                cardinal: unpack(out.cardinal, &|v| v),
            }
        }
    }
}

fn slot(objective: Objective) -> usize {
    match objective {
        Objective::Usw => 0,
        Objective::Esw => 1,
    }
}

/// Best objective value over all allocations (or all cardinal ones), and
/// the first allocation attaining it.
pub fn opt_brute(inst: &Instance, objective: Objective, cardinal_only: bool) -> Result<(Rational, Allocation)> {
    opt_brute_with_budget(inst, objective, cardinal_only, default_budget())
}

pub fn opt_brute_with_budget(
    inst: &Instance,
    objective: Objective,
    cardinal_only: bool,
    budget: u128,
) -> Result<(Rational, Allocation)> {
    check_budget(inst, budget)?;
    let found = solve(inst, cardinal_only);
    let (value, owner) = found.cardinal_or_any(cardinal_only)[slot(objective)].clone();
    Ok((value, Allocation::from_owners(inst.n(), owner)?))
}

impl Found {
    fn cardinal_or_any(&self, cardinal: bool) -> &[(Rational, Vec<usize>); 2] {
        if cardinal {
            &self.cardinal
        } else {
            &self.any
        }
    }
}

/// Measured prices of cardinality for one instance.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct PocReport {
    pub opt_usw: Rational,
    pub best_cardinal_usw: Rational,
    pub opt_esw: Rational,
    pub best_cardinal_esw: Rational,
    pub usw_ratio: Rational,
    pub esw_ratio: Rational,
    pub opt_usw_witness: Allocation,
    pub best_cardinal_usw_witness: Allocation,
    pub opt_esw_witness: Allocation,
    pub best_cardinal_esw_witness: Allocation,
}

pub fn empirical_poc(inst: &Instance) -> Result<PocReport> {
    empirical_poc_with_budget(inst, default_budget())
}

pub fn empirical_poc_with_budget(inst: &Instance, budget: u128) -> Result<PocReport> {
    check_budget(inst, budget)?;
    let found = solve(inst, false);
    let n = inst.n();
    let [(opt_usw, w0), (opt_esw, w1)] = found.any;
    let [(best_cardinal_usw, w2), (best_cardinal_esw, w3)] = found.cardinal;
    Ok(PocReport {
        usw_ratio: poc_ratio(&opt_usw, &best_cardinal_usw)?,
        esw_ratio: poc_ratio(&opt_esw, &best_cardinal_esw)?,
        opt_usw,
        best_cardinal_usw,
        opt_esw,
        best_cardinal_esw,
        opt_usw_witness: Allocation::from_owners(n, w0)?,
        best_cardinal_usw_witness: Allocation::from_owners(n, w2)?,
        opt_esw_witness: Allocation::from_owners(n, w1)?,
        best_cardinal_esw_witness: Allocation::from_owners(n, w3)?,
    })
}

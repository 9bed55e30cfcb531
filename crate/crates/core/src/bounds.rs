//! Closed-form prices of cardinality.
//!
//! Bounds that involve `sqrt(1 + (m-1)/k)` are evaluated in binary64 and
//! compared with [`TOLERANCE`]; every other bound is an exact [`Rational`].
//! Caps at or above a category's size never bind, so multi-category
//! formulas use the effective cap `min(k_j, m_j)`.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::instance::{canonical_pairs, Instance};
use crate::rational::Rational;
use crate::welfare::Objective;

/// Absolute slack for comparisons against irrational closed forms.
pub const TOLERANCE: f64 = 1e-9;

/// Derived single-category quantities.
#[derive(Clone, Debug, PartialEq)]
pub struct SingleCatBoundParams {
    pub m: u64,
    pub k: u64,
    pub n: u64,
    /// `-1 + sqrt(1 + (m-1)/k)`
    pub s: f64,
    /// `max(floor(s), 1)`
    pub t: u64,
    /// `c` with `m = k(c^2 - 1) + 1`, when one exists.
    pub c: Option<u64>,
}

impl SingleCatBoundParams {
    pub fn new(m: u64, k: u64, n: u64) -> Result<Self> {
        if k == 0 || m == 0 || n == 0 {
            return Err(Error::Domain("m, k and n must be positive".into()));
        }
        if n * k < m {
            return Err(infeasible(n, k, m));
        }
        Ok(SingleCatBoundParams {
            m,
            k,
            n,
            s: -1.0 + (1.0 + (m - 1) as f64 / k as f64).sqrt(),
            t: floor_s(m, k).max(1),
            c: divisible_c(m, k),
        })
    }
}

fn infeasible(n: u64, k: u64, m: u64) -> Error {
    Error::Infeasible {
        category: 0,
        n: n as usize,
        cap: k as usize,
        items: m as usize,
    }
}

/// `floor(-1 + sqrt(1 + (m-1)/k))` in integer arithmetic: the largest
/// `a >= 0` with `k (a+1)^2 <= k + m - 1`.
pub fn floor_s(m: u64, k: u64) -> u64 {
    let limit = k + m - 1;
    let mut a = 0u64;
    while k * (a + 2) * (a + 2) <= limit {
        a += 1;
    }
    a
}

/// The `c >= 2` with `m = k (c^2 - 1) + 1`, if any.
pub fn divisible_c(m: u64, k: u64) -> Option<u64> {
    if m < 1 || k == 0 || (m - 1) % k != 0 {
        return None;
    }
    let sq = (m - 1) / k + 1;
    let c = (sq as f64).sqrt().round() as u64;
    (c >= 2 && c * c == sq).then_some(c)
}

/// Single-category utilitarian price: `(1 + sqrt(1 + (m-1)/k)) / 2`, or 1
/// when `m <= k`.
pub fn poc_usw_single(m: u64, k: u64) -> Result<f64> {
    if k == 0 {
        return Err(Error::Domain("cap must be positive".into()));
    }
    if m <= k {
        return Ok(1.0);
    }
    Ok((1.0 + (1.0 + (m - 1) as f64 / k as f64).sqrt()) / 2.0)
}

/// Exact ratio `(1+t) / (1 + k t / floor((m-1)/t))` achieved by the
/// general lower-bound construction; 1 when `m <= k + 1`.
pub fn lower_achieved_exact(m: u64, k: u64) -> Result<Rational> {
    if k == 0 {
        return Err(Error::Domain("cap must be positive".into()));
    }
    if m <= k + 1 {
        return Ok(Rational::one());
    }
    let t = floor_s(m, k).max(1);
    let block = (m - 1) / t;
    let num = Rational::from(1 + t);
    let den = Rational::one() + Rational::from(k * t) / Rational::from(block);
    Ok(num / den)
}

pub fn poc_usw_single_lower_achieved(m: u64, k: u64) -> Result<f64> {
    lower_achieved_exact(m, k).map(|r| r.to_f64())
}

/// `(1 + s) / (1 + k s^2 / (m-1))` with integral `s = c - 1` and
/// `m = k(c^2-1) + 1`.
pub fn divisible_ratio_exact(c: u64, k: u64) -> Result<Rational> {
    if c < 2 || k == 0 {
        return Err(Error::Domain("need c >= 2 and k >= 1".into()));
    }
    let m = k * (c * c - 1) + 1;
    let s = c - 1;
    Ok(Rational::from(1 + s) / (Rational::one() + Rational::from(k * s * s) / Rational::from(m - 1)))
}

/// Single-category egalitarian price `max((m-n+1)/k, 1)`, or 1 when `m < n`.
pub fn poc_esw_single(m: u64, n: u64, k: u64) -> Result<Rational> {
    if k == 0 || n == 0 {
        return Err(Error::Domain("n and k must be positive".into()));
    }
    if n * k < m {
        return Err(infeasible(n, k, m));
    }
    if m < n {
        return Ok(Rational::one());
    }
    Ok((Rational::from(m - n + 1) / Rational::from(k)).max(Rational::one()))
}

fn effective_pairs(pairs: &[(usize, usize)]) -> Result<Vec<(u64, u64)>> {
    if pairs.is_empty() {
        return Err(Error::Domain("at least one category required".into()));
    }
    if pairs.iter().any(|&(m, k)| m == 0 || k == 0) {
        return Err(Error::Domain("category sizes and caps must be positive".into()));
    }
    Ok(canonical_pairs(pairs)
        .into_iter()
        .map(|(m, k)| (m as u64, k.min(m) as u64))
        .collect())
}

/// Two-agent utilitarian price `2 m1 m2 / (m2 k1 + m1 k2)` over the two
/// smallest `k/m` categories. Requires `2 k_j >= m_j` everywhere.
pub fn poc_usw_two(pairs: &[(usize, usize)]) -> Result<Rational> {
    if pairs.len() < 2 {
        return Err(Error::Domain("two-agent formula needs at least two categories".into()));
    }
    let eff = effective_pairs(pairs)?;
    for (j, &(m, k)) in pairs.iter().enumerate() {
        if 2 * k < m {
            return Err(Error::Infeasible {
                category: j,
                n: 2,
                cap: k,
                items: m,
            });
        }
    }
    let (m1, k1) = eff[0];
    let (m2, k2) = eff[1];
    Ok(Rational::from(2 * m1 * m2) / Rational::from(m2 * k1 + m1 * k2))
}

/// General-n utilitarian price `m1 / k1`. Tight for families with at least
/// `n` equal-ratio categories, an upper bound otherwise.
pub fn poc_usw_multi(pairs: &[(usize, usize)]) -> Result<Rational> {
    let eff = effective_pairs(pairs)?;
    let (m1, k1) = eff[0];
    Ok(Rational::from(m1) / Rational::from(k1))
}

/// Derived multi-category quantities in canonical order.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct MultiCatBoundParams {
    pub n: u64,
    /// `(m_j, min(k_j, m_j))` in canonical order.
    pub pairs: Vec<(u64, u64)>,
    /// `c_j = max(n - 1 - sum_{t != j} m_t, 0)`
    pub c_values: Vec<u64>,
}

impl MultiCatBoundParams {
    pub fn new(n: u64, pairs: &[(usize, usize)]) -> Result<Self> {
        if n == 0 {
            return Err(Error::Domain("n must be positive".into()));
        }
        for (j, &(m, k)) in pairs.iter().enumerate() {
            if (n as usize) * k < m {
                return Err(Error::Infeasible {
                    category: j,
                    n: n as usize,
                    cap: k,
                    items: m,
                });
            }
        }
        let pairs = effective_pairs(pairs)?;
        let total: u64 = pairs.iter().map(|p| p.0).sum();
        let c_values = pairs
            .iter()
            .map(|&(m, _)| (n - 1).saturating_sub(total - m))
            .collect();
        Ok(MultiCatBoundParams { n, pairs, c_values })
    }

    /// True when `n <= sum_{j >= 2} m_j + 1`.
    pub fn first_regime(&self) -> bool {
        let rest: u64 = self.pairs[1..].iter().map(|p| p.0).sum();
        self.n <= rest + 1
    }

    /// Index of the category attaining `max_j (m_j - c_j) / k_j`, lowest on ties.
    pub fn worst_category(&self) -> usize {
        let values: Vec<Rational> = (0..self.pairs.len()).map(|j| self.regime_two_value(j)).collect();
        let best = values.iter().max().expect("nonempty");
        values.iter().position(|v| v == best).expect("present")
    }

    fn regime_two_value(&self, j: usize) -> Rational {
        let (m, k) = self.pairs[j];
        let c = self.c_values[j];
        Rational::from(m as i64 - c as i64) / Rational::from(k)
    }
}

/// Multi-category egalitarian price.
pub fn poc_esw_multi(n: u64, pairs: &[(usize, usize)]) -> Result<Rational> {
    let params = MultiCatBoundParams::new(n, pairs)?;
    if params.first_regime() {
        let (m1, k1) = params.pairs[0];
        return Ok(Rational::from(m1) / Rational::from(k1));
    }
    let worst = params.worst_category();
    Ok(params.regime_two_value(worst).max(Rational::one()))
}

#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(untagged)]
pub enum BoundValue {
    Exact(Rational),
    Real(f64),
}

impl BoundValue {
    /// Whether an observed ratio stays within the bound: exact comparison
    /// for rational bounds, [`TOLERANCE`] slack for real ones.
    pub fn admits(&self, ratio: &Rational) -> bool {
        match self {
            BoundValue::Exact(b) => ratio <= b,
            BoundValue::Real(b) => ratio.to_f64() <= b + TOLERANCE,
        }
    }

    pub fn to_f64(&self) -> f64 {
        match self {
            BoundValue::Exact(b) => b.to_f64(),
            BoundValue::Real(b) => *b,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClosedFormBound {
    pub name: &'static str,
    pub objective: Objective,
    pub value: BoundValue,
    /// Whether the bound is attained for every parameter choice.
    pub tight: bool,
    pub note: &'static str,
}

/// All closed-form bounds whose hypotheses the instance's shape satisfies.
pub fn applicable_bounds(inst: &Instance) -> Result<Vec<ClosedFormBound>> {
    let n = inst.n() as u64;
    let pairs = inst.pairs();
    let mut out = Vec::new();
    if inst.h() == 1 {
        let (m, k) = (pairs[0].0 as u64, pairs[0].1 as u64);
        out.push(ClosedFormBound {
            name: "usw-single",
            objective: Objective::Usw,
            value: BoundValue::Real(poc_usw_single(m, k)?),
            tight: divisible_c(m, k).is_some() || m <= k,
            note: "attained when m = k(c^2-1)+1, within 1 of attained otherwise",
        });
        out.push(ClosedFormBound {
            name: "esw-single",
            objective: Objective::Esw,
            value: BoundValue::Exact(poc_esw_single(m, n, k)?),
            tight: true,
            note: "attained for all feasible parameters",
        });
    }
    if inst.h() >= 2 && n == 2 {
        out.push(ClosedFormBound {
            name: "usw-two",
            objective: Objective::Usw,
            value: BoundValue::Exact(poc_usw_two(&pairs)?),
            tight: true,
            note: "attained for all feasible parameters",
        });
    }
    out.push(ClosedFormBound {
        name: "usw-multi",
        objective: Objective::Usw,
        value: BoundValue::Exact(poc_usw_multi(&pairs)?),
        tight: false,
        note: "upper bound, tight for equal-ratio families",
    });
    out.push(ClosedFormBound {
        name: "esw-multi",
        objective: Objective::Esw,
        value: BoundValue::Exact(poc_esw_multi(n, &pairs)?),
        tight: true,
        note: "attained for all feasible parameters",
    });
    Ok(out)
}

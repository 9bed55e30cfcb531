//! Utility transformations that keep the set of utilitarian optima while
//! making the best cardinal allocation weakly worse.
//!
//! Each takes an unconstrained utilitarian optimum `opt` of the input and
//! rejects it if it is not one. All but [`preprocess_r_agents`] are limited
//! to two agents.

use serde::Serialize;

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::Rational;
use crate::solvers::opt_usw_unconstrained;
use crate::welfare::{bundle_value, classify_agents, usw};

/// A transformed instance with a short note on what changed.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct Reduced {
    pub instance: Instance,
    pub note: String,
}

impl Reduced {
    fn unchanged(inst: &Instance, why: &str) -> Self {
        Reduced {
            instance: inst.clone(),
            note: format!("unchanged: {why}"),
        }
    }
}

fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn check_optimal(inst: &Instance, opt: &Allocation) -> Result<()> {
    let (_, best) = opt_usw_unconstrained(inst);
    if usw(inst, opt)? != best {
        return Err(domain("allocation is not a utilitarian optimum"));
    }
    Ok(())
}

fn check_two_agents(inst: &Instance) -> Result<()> {
    if inst.n() != 2 {
        return Err(domain("only defined for two agents"));
    }
    Ok(())
}

/// Categories in which `agent` holds more than the cap.
fn exceeded(inst: &Instance, opt: &Allocation, agent: usize) -> Vec<usize> {
    (0..inst.h())
        .filter(|&j| opt.counts_in(inst, j)[agent] > inst.categories()[j].cap)
        .collect()
}

/// Moves every agent's utility on `from` uniformly onto `onto`, leaving
/// `from` worthless to everyone.
fn fold(rows: &mut [Vec<Rational>], from: &[usize], onto: &[usize]) {
    let width = Rational::from(onto.len());
    for row in rows.iter_mut() {
        let moved: Rational = from.iter().map(|&g| &row[g]).sum();
        for &g in from {
            row[g] = Rational::zero();
        }
        let share = &moved / &width;
        for &g in onto {
            row[g] += &share;
        }
    }
}

/// Single category: lowers each under-cap agent's utility on the items held
/// by over-cap agents, proportionally per item, until that total equals
/// `1 - sum of utilities of agents at or under the cap`.
///
/// The result is marked non-normalized when anything changed.
pub fn preprocess_r_agents(inst: &Instance, opt: &Allocation) -> Result<Reduced> {
    if inst.h() != 1 {
        return Err(domain("only defined for a single category"));
    }
    check_optimal(inst, opt)?;
    let cls = classify_agents(inst, opt, 0)?;
    if cls.above.is_empty() {
        return Err(domain("no agent holds more than the cap"));
    }
    let kept: Rational = cls
        .below
        .iter()
        .chain(&cls.exact)
        .map(|&i| bundle_value(inst, i, &opt.bundle(i)))
        .sum();
    let target = Rational::one() - kept;
    if !target.is_positive() {
        return Err(domain("agents at or below the cap already hold total utility 1"));
    }
    let pool: Vec<usize> = cls.above.iter().flat_map(|&i| opt.bundle(i)).collect();
    let mut rows = inst.utilities().to_vec();
    let mut scaled = Vec::new();
    for &j in &cls.below {
        let current = bundle_value(inst, j, &pool);
        if current < target {
            return Err(domain(format!("agent {j} values the pool below the target")));
        }
        if current == target {
            continue;
        }
        let factor = &target / &current;
        for &g in &pool {
            rows[j][g] = &rows[j][g] * &factor;
        }
        scaled.push(j);
    }
    if scaled.is_empty() {
        return Ok(Reduced::unchanged(inst, "every under-cap agent already meets the target"));
    }
    Ok(Reduced {
        instance: inst.with_utilities(rows, false)?,
        note: format!("scaled agents {scaled:?} on {} pooled items to {target}", pool.len()),
    })
}

/// Two agents: for an agent over the cap in two or more categories `H`,
/// picks `p` minimizing `k_p / |A_p|` (lowest index on ties) and folds both
/// agents' utility on the agent's bundles in `H \ {p}` onto its bundle in `p`.
/// Agent 0 is handled first, then agent 1.
pub fn reduce_merge_exceeded(inst: &Instance, opt: &Allocation) -> Result<Reduced> {
    check_two_agents(inst)?;
    check_optimal(inst, opt)?;
    let mut rows = inst.utilities().to_vec();
    let mut notes = Vec::new();
    for agent in 0..2 {
        let h = exceeded(inst, opt, agent);
        if h.len() < 2 {
            continue;
        }
        let size = |j: usize| opt.bundle_in(inst, agent, j).len();
        let key = |j: usize| Rational::from(inst.categories()[j].cap) / Rational::from(size(j));
        let p = h
            .iter()
            .copied()
            .min_by(|&a, &b| key(a).cmp(&key(b)).then(a.cmp(&b)))
            .expect("nonempty");
        let from: Vec<usize> = h
            .iter()
            .filter(|&&j| j != p)
            .flat_map(|&j| opt.bundle_in(inst, agent, j))
            .collect();
        fold(&mut rows, &from, &opt.bundle_in(inst, agent, p));
        notes.push(format!("agent {agent}: merged categories {h:?} into {p}"));
    }
    if notes.is_empty() {
        return Ok(Reduced::unchanged(inst, "no agent exceeds two or more caps"));
    }
    Ok(Reduced {
        instance: inst.with_utilities(rows, inst.is_normalized())?,
        note: notes.join("; "),
    })
}

/// Two agents, each over the cap in at most one category: for an agent over
/// the cap in `e`, folds both agents' utility on the agent's bundle in every
/// other category it values onto its bundle in `e`.
pub fn reduce_zero_nonexceeded(inst: &Instance, opt: &Allocation) -> Result<Reduced> {
    check_two_agents(inst)?;
    check_optimal(inst, opt)?;
    let hs: Vec<Vec<usize>> = (0..2).map(|a| exceeded(inst, opt, a)).collect();
    if hs.iter().any(|h| h.len() > 1) {
        return Err(domain("an agent exceeds more than one cap"));
    }
    if hs.iter().all(|h| h.is_empty()) {
        return Err(domain("no agent exceeds a cap"));
    }
    let mut rows = inst.utilities().to_vec();
    let mut notes = Vec::new();
    for agent in 0..2 {
        let Some(&e) = hs[agent].first() else {
            continue;
        };
        let onto = opt.bundle_in(inst, agent, e);
        for j in (0..inst.h()).filter(|&j| j != e) {
            let from = opt.bundle_in(inst, agent, j);
            if bundle_value(inst, agent, &from).is_zero() {
                continue;
            }
            fold(&mut rows, &from, &onto);
            notes.push(format!("agent {agent}: folded category {j} into {e}"));
        }
    }
    if notes.is_empty() {
        return Ok(Reduced::unchanged(inst, "over-cap agents earn nothing elsewhere"));
    }
    Ok(Reduced {
        instance: inst.with_utilities(rows, inst.is_normalized())?,
        note: notes.join("; "),
    })
}

/// Half the smallest positive utility, divided by `m + 1`.
pub fn default_epsilon(inst: &Instance) -> Option<Rational> {
    let min = inst
        .utilities()
        .iter()
        .flatten()
        .filter(|u| u.is_positive())
        .min()?
        .clone();
    Some(min / Rational::from(2 * (inst.m() + 1)))
}

/// Two agents, exactly one of them (`x`) over a cap: lets the other agent
/// `y` take `epsilon` of its utility from its item `g*` with the largest
/// margin `u_y - u_x` and spread it over `x`'s bundle `Z` in another
/// category `j2`, so that `y` now wants all of `C_{j2}`.
///
/// `j2` is the lowest category other than the exceeded one with
/// `m_j2 > k_j2` where `Z` is nonempty and worthless to `x`. Requires
/// `0 < epsilon < u_y(g*)` and `epsilon <= u_y(g*) - u_x(g*)`.
pub fn reduce_force_exceed(inst: &Instance, opt: &Allocation, epsilon: &Rational) -> Result<Reduced> {
    check_two_agents(inst)?;
    check_optimal(inst, opt)?;
    let hs: Vec<Vec<usize>> = (0..2).map(|a| exceeded(inst, opt, a)).collect();
    let x = match (hs[0].is_empty(), hs[1].is_empty()) {
        (false, true) => 0,
        (true, false) => 1,
        (true, true) => return Err(domain("no agent exceeds a cap")),
        (false, false) => return Err(domain("both agents exceed a cap")),
    };
    let y = 1 - x;
    let j2 = (0..inst.h())
        .filter(|j| !hs[x].contains(j))
        .find(|&j| {
            let cat = &inst.categories()[j];
            let z = opt.bundle_in(inst, x, j);
            cat.len() > cat.cap && !z.is_empty() && bundle_value(inst, x, &z).is_zero()
        })
        .ok_or_else(|| domain("no category with a worthless bundle for the over-cap agent"))?;
    let z = opt.bundle_in(inst, x, j2);
    let margin = |g: usize| inst.utility(y, g) - inst.utility(x, g);
    let g_star = opt
        .bundle(y)
        .into_iter()
        .min_by(|&a, &b| margin(b).cmp(&margin(a)).then(a.cmp(&b)))
        .ok_or_else(|| domain("the other agent holds no items"))?;
    let gap = margin(g_star);
    if !gap.is_positive() {
        return Err(domain("the other agent has no item it values strictly more"));
    }
    if !epsilon.is_positive() || epsilon >= inst.utility(y, g_star) {
        return Err(domain("epsilon must lie strictly between 0 and u_y(g*)"));
    }
    if *epsilon > gap {
        return Err(domain("epsilon must not exceed u_y(g*) - u_x(g*)"));
    }
    let mut rows = inst.utilities().to_vec();
    rows[y][g_star] -= epsilon;
    let share = epsilon / &Rational::from(z.len());
    for &g in &z {
        rows[y][g] += &share;
    }
    Ok(Reduced {
        instance: inst.with_utilities(rows, inst.is_normalized())?,
        note: format!("agent {y}: moved {epsilon} from item {g_star} onto category {j2}"),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CategorySpec;
    use crate::rational::ratio;

    fn preprocess_example(u3: [i64; 4]) -> (Instance, Allocation) {
        let rows = vec![
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3), ratio(0, 1)],
            vec![ratio(1, 10), ratio(1, 10), ratio(1, 10), ratio(7, 10)],
            u3.iter().map(|&p| ratio(p, 10)).collect(),
        ];
        // cap 2 keeps 4 items feasible for 3 agents
        let inst = Instance::single_category(3, 2, rows).unwrap();
        let opt = Allocation::from_owners(3, vec![0, 0, 0, 1]).unwrap();
        (inst, opt)
    }

    #[test]
    fn preprocess_leaves_target_met() {
        let (inst, opt) = preprocess_example([1, 1, 1, 7]);
        let out = preprocess_r_agents(&inst, &opt).unwrap();
        assert_eq!(out.instance, inst);
    }

    #[test]
    fn preprocess_scales_pool() {
        let (inst, opt) = preprocess_example([2, 2, 2, 4]);
        let out = preprocess_r_agents(&inst, &opt).unwrap().instance;
        assert_eq!(out.utilities()[2], vec![ratio(1, 10), ratio(1, 10), ratio(1, 10), ratio(2, 5)]);
        assert_eq!(out.utilities()[..2], inst.utilities()[..2]);
        assert!(!out.is_normalized());
    }

    #[test]
    fn preprocess_rejects_bad_inputs() {
        let (inst, _) = preprocess_example([1, 1, 1, 7]);
        let not_opt = Allocation::from_owners(3, vec![0, 0, 1, 0]).unwrap();
        assert!(preprocess_r_agents(&inst, &not_opt).is_err());
    }

    fn merge_example() -> (Instance, Allocation) {
        let cats = vec![
            CategorySpec::contiguous(0, 0, 3, 2),
            CategorySpec::contiguous(1, 3, 3, 2),
            CategorySpec::contiguous(2, 6, 2, 1),
        ];
        let mut a0 = vec![ratio(1, 6); 6];
        a0.extend([ratio(0, 1), ratio(0, 1)]);
        let mut a1 = vec![ratio(0, 1); 8];
        a1[0] = ratio(1, 12);
        a1[3] = ratio(1, 12);
        a1[6] = ratio(5, 12);
        a1[7] = ratio(5, 12);
        let inst = Instance::new(2, cats, vec![a0, a1], true).unwrap();
        let opt = Allocation::from_owners(2, vec![0, 0, 0, 0, 0, 0, 1, 1]).unwrap();
        (inst, opt)
    }

    #[test]
    fn merge_moves_second_category_onto_first() {
        let (inst, opt) = merge_example();
        let out = reduce_merge_exceeded(&inst, &opt).unwrap().instance;
        // ties on k/|A| pick category 0
        assert_eq!(out.utilities()[0][..3], [ratio(1, 3), ratio(1, 3), ratio(1, 3)]);
        assert!(out.utilities()[0][3..6].iter().all(|u| u.is_zero()));
        assert_eq!(out.utilities()[1][..3], [ratio(1, 9), ratio(1, 36), ratio(1, 36)]);
        assert!(out.is_normalized());
    }

    #[test]
    fn merge_is_noop_for_single_exceedance() {
        let cats = vec![CategorySpec::contiguous(0, 0, 2, 1), CategorySpec::contiguous(1, 2, 2, 2)];
        let rows = vec![
            vec![ratio(1, 2), ratio(1, 2), ratio(0, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(0, 1), ratio(1, 2), ratio(1, 2)],
        ];
        let inst = Instance::new(2, cats, rows, true).unwrap();
        let opt = Allocation::from_owners(2, vec![0, 0, 1, 1]).unwrap();
        assert_eq!(reduce_merge_exceeded(&inst, &opt).unwrap().instance, inst);
    }

    #[test]
    fn zero_fold_and_force() {
        // agent 0 over cap in C0 and earning 1/5 in C1; agent 1 on C1 and C2
        let cats = vec![
            CategorySpec::contiguous(0, 0, 3, 2),
            CategorySpec::contiguous(1, 3, 3, 2),
        ];
        let rows = vec![
            vec![ratio(4, 15), ratio(4, 15), ratio(4, 15), ratio(1, 5), ratio(0, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(1, 2), ratio(1, 2)],
        ];
        let inst = Instance::new(2, cats, rows, true).unwrap();
        let opt = Allocation::from_owners(2, vec![0, 0, 0, 0, 1, 1]).unwrap();
        let zeroed = reduce_zero_nonexceeded(&inst, &opt).unwrap().instance;
        assert_eq!(zeroed.utilities()[0][..4], [ratio(1, 3), ratio(1, 3), ratio(1, 3), ratio(0, 1)]);
        assert_eq!(zeroed.utilities()[1], inst.utilities()[1]);

        let eps = default_epsilon(&zeroed).unwrap();
        assert_eq!(eps, ratio(1, 42));
        let forced = reduce_force_exceed(&zeroed, &opt, &eps).unwrap().instance;
        assert_eq!(forced.utility(1, 3), &ratio(1, 42));
        assert_eq!(forced.utility(1, 4), &(ratio(1, 2) - ratio(1, 42)));
        assert!(reduce_force_exceed(&zeroed, &opt, &ratio(0, 1)).is_err());
        assert!(reduce_force_exceed(&zeroed, &opt, &ratio(1, 2)).is_err());
    }
}

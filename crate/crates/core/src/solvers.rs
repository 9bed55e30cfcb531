//! Constructive allocation procedures.

use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::matching::max_weight_perfect_matching;
use crate::rational::Rational;
use crate::welfare::usw;

/// One item transfer made by [`greedy_reassign`].
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReassignStep {
    pub item: usize,
    #[serde(rename = "from")]
    pub from_agent: usize,
    #[serde(rename = "to")]
    pub to_agent: usize,
    /// `u_from(item) - u_to(item)`.
    #[serde(rename = "loss")]
    pub welfare_loss: Rational,
}

fn check_feasible(inst: &Instance) -> Result<()> {
    for (j, cat) in inst.categories().iter().enumerate() {
        if inst.n() * cat.cap < cat.len() {
            return Err(Error::Infeasible {
                category: j,
                n: inst.n(),
                cap: cat.cap,
                items: cat.len(),
            });
        }
    }
    Ok(())
}

/// Utilitarian optimum without cardinality constraints: every item goes to
/// an agent valuing it most.
///
/// Ties are resolved per category. First, tied items are piled onto the
/// tied agent currently holding the most items; if that leaves every
/// item-holding agent strictly above the cap, it is kept. Otherwise tied
/// items go to the lowest-index tied agent still below the cap, or the
/// lowest-index tied agent if none is.
pub fn opt_usw_unconstrained(inst: &Instance) -> (Allocation, Rational) {
    let n = inst.n();
    let mut owner = vec![0usize; inst.m()];
    for cat in inst.categories() {
        let mut items = cat.items.clone();
        items.sort_unstable();
        let mut forced = vec![0usize; n];
        let mut ties: Vec<(usize, Vec<usize>)> = Vec::new();
        for &g in &items {
            let best = (0..n).map(|i| inst.utility(i, g)).max().expect("n >= 1");
            let tied: Vec<usize> = (0..n).filter(|&i| inst.utility(i, g) == best).collect();
            if tied.len() == 1 {
                forced[tied[0]] += 1;
                owner[g] = tied[0];
            } else {
                ties.push((g, tied));
            }
        }
        if ties.is_empty() {
            continue;
        }

        let mut counts = forced.clone();
        let mut piled = Vec::with_capacity(ties.len());
        for (g, tied) in &ties {
            let a = *tied
                .iter()
                .max_by(|&&a, &&b| counts[a].cmp(&counts[b]).then(b.cmp(&a)))
                .expect("nonempty");
            counts[a] += 1;
            piled.push((*g, a));
        }
        if counts.iter().all(|&c| c == 0 || c > cat.cap) {
            for (g, a) in piled {
                owner[g] = a;
            }
            continue;
        }

        let mut counts = forced;
        for (g, tied) in &ties {
            let a = tied
                .iter()
                .copied()
                .find(|&a| counts[a] < cat.cap)
                .unwrap_or(tied[0]);
            counts[a] += 1;
            owner[*g] = a;
        }
    }
    let alloc = Allocation::from_owners(n, owner).expect("owners are agent indices");
    let welfare = usw(inst, &alloc).expect("dimensions match");
    (alloc, welfare)
}

/// Utilitarian optimum over cardinal allocations, one max-weight perfect
/// matching per category between `k_j` copies of each agent and the
/// category's items padded with zero-valued dummies.
///
/// Among optimal matchings the lexicographically smallest assignment of
/// (agent copy, item) is returned, with items taken in ascending index.
pub fn opt_usw_cardinal_matching(inst: &Instance) -> Result<(Allocation, Rational)> {
    check_feasible(inst)?;
    let n = inst.n();
    let mut owner = vec![0usize; inst.m()];
    let mut welfare = Rational::zero();
    for cat in inst.categories() {
        let mut items = cat.items.clone();
        items.sort_unstable();
        let size = n * cat.cap;
        let weights: Vec<Vec<Rational>> = (0..size)
            .map(|copy| {
                let agent = copy / cat.cap;
                (0..size)
                    .map(|c| match items.get(c) {
                        Some(&g) => inst.utility(agent, g).clone(),
                        None => Rational::zero(),
                    })
                    .collect()
            })
            .collect();
        let matching = max_weight_perfect_matching(&weights);
        for (copy, &c) in matching.assignment.iter().enumerate() {
            if let Some(&g) = items.get(c) {
                owner[g] = copy / cat.cap;
            }
        }
        welfare += matching.total;
    }
    Ok((Allocation::from_owners(n, owner)?, welfare))
}

/// Repeatedly moves the single item, from an agent above the cap of
/// `category` to an agent below it, whose transfer loses the least
/// utilitarian welfare, until no agent is above the cap.
///
/// Ties go to the lowest item index, then the lowest destination agent.
pub fn greedy_reassign(
    inst: &Instance,
    start: &Allocation,
    category: usize,
) -> Result<(Allocation, Vec<ReassignStep>)> {
    start.check(inst)?;
    let cat = inst.category(category)?;
    if inst.n() * cat.cap < cat.len() {
        return Err(Error::Infeasible {
            category,
            n: inst.n(),
            cap: cat.cap,
            items: cat.len(),
        });
    }
    let mut items = cat.items.clone();
    items.sort_unstable();
    let mut alloc = start.clone();
    let mut counts = alloc.counts_in(inst, category);
    let mut steps = Vec::new();
    loop {
        if counts.iter().all(|&c| c <= cat.cap) {
            break;
        }
        let active: Vec<usize> = (0..inst.n()).filter(|&a| counts[a] < cat.cap).collect();
        let mut best: Option<ReassignStep> = None;
        for &g in &items {
            let from = alloc.owner(g);
            if counts[from] <= cat.cap {
                continue;
            }
            for &to in &active {
                let loss = inst.utility(from, g) - inst.utility(to, g);
                if best.as_ref().is_none_or(|b| loss < b.welfare_loss) {
                    best = Some(ReassignStep {
                        item: g,
                        from_agent: from,
                        to_agent: to,
                        welfare_loss: loss,
                    });
                }
            }
        }
        let step = best.expect("an agent above the cap implies one below it");
        counts[step.from_agent] -= 1;
        counts[step.to_agent] += 1;
        alloc.set_owner(step.item, step.to_agent);
        steps.push(step);
    }
    Ok((alloc, steps))
}

/// [`greedy_reassign`] applied to each category in turn.
pub fn greedy_reassign_all(inst: &Instance, start: &Allocation) -> Result<(Allocation, Vec<ReassignStep>)> {
    let mut alloc = start.clone();
    let mut steps = Vec::new();
    for j in 0..inst.h() {
        let (next, mut s) = greedy_reassign(inst, &alloc, j)?;
        alloc = next;
        steps.append(&mut s);
    }
    Ok((alloc, steps))
}

/// Cardinalizes `start`: in every category, each agent above the cap keeps
/// its `k_j` most valued items (ties by lower item index) and the surplus,
/// in ascending item order, fills agents below the cap in ascending agent
/// order.
pub fn keep_top_k(inst: &Instance, start: &Allocation) -> Result<Allocation> {
    start.check(inst)?;
    check_feasible(inst)?;
    let mut alloc = start.clone();
    for j in 0..inst.h() {
        let cap = inst.categories()[j].cap;
        let mut counts = alloc.counts_in(inst, j);
        let mut surplus = Vec::new();
        for agent in 0..inst.n() {
            if counts[agent] <= cap {
                continue;
            }
            let mut bundle = alloc.bundle_in(inst, agent, j);
            bundle.sort_by(|&a, &b| inst.utility(agent, b).cmp(inst.utility(agent, a)).then(a.cmp(&b)));
            surplus.extend_from_slice(&bundle[cap..]);
            counts[agent] = cap;
        }
        surplus.sort_unstable();
        let mut surplus = surplus.into_iter();
        'fill: for agent in 0..inst.n() {
            while counts[agent] < cap {
                match surplus.next() {
                    Some(g) => {
                        alloc.set_owner(g, agent);
                        counts[agent] += 1;
                    }
                    None => break 'fill,
                }
            }
        }
        debug_assert!(surplus.next().is_none());
    }
    Ok(alloc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::instance::CategorySpec;
    use crate::rational::ratio;
    use crate::welfare::{esw, is_cardinal};

    fn lower_bound_instance() -> Instance {
        // agent 0 values g0..g2 at 1/3, agents 1..3 value g3 at 1
        let mut rows = vec![vec![ratio(1, 3), ratio(1, 3), ratio(1, 3), ratio(0, 1)]];
        for _ in 1..4 {
            rows.push(vec![ratio(0, 1), ratio(0, 1), ratio(0, 1), ratio(1, 1)]);
        }
        Instance::single_category(4, 1, rows).unwrap()
    }

    #[test]
    fn unconstrained_identity() {
        let rows = (0..3)
            .map(|i| (0..3).map(|g| ratio((i == g) as i64, 1)).collect())
            .collect();
        let inst = Instance::single_category(3, 1, rows).unwrap();
        let (alloc, w) = opt_usw_unconstrained(&inst);
        assert_eq!(w, ratio(3, 1));
        assert_eq!(alloc.owners(), &[0, 1, 2]);
    }

    #[test]
    fn lower_bound_instance_values() {
        let inst = lower_bound_instance();
        let (opt, w) = opt_usw_unconstrained(&inst);
        assert_eq!(w, ratio(2, 1));
        assert!(!is_cardinal(&inst, &opt).unwrap());
        let (card, cw) = opt_usw_cardinal_matching(&inst).unwrap();
        assert_eq!(cw, ratio(4, 3));
        assert!(is_cardinal(&inst, &card).unwrap());
        assert_eq!(usw(&inst, &card).unwrap(), cw);
    }

    #[test]
    fn tie_break_prefers_below_cap() {
        // g0 tied between agents 0 and 1; agent 0 already holds g1 and g2.
        let rows = vec![
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
        ];
        let inst = Instance::single_category(2, 2, rows).unwrap();
        let (alloc, _) = opt_usw_unconstrained(&inst);
        // piling all three on agent 0 saturates (3 > 2), so that is chosen
        assert_eq!(alloc.owners(), &[0, 0, 0]);

        let rows = vec![
            vec![ratio(1, 2), ratio(1, 2), ratio(0, 1)],
            vec![ratio(1, 2), ratio(0, 1), ratio(1, 2)],
        ];
        let inst = Instance::single_category(2, 2, rows).unwrap();
        let (alloc, _) = opt_usw_unconstrained(&inst);
        // piling leaves agent 1 with one item (not above cap 2): fall back
        assert_eq!(alloc.owners(), &[0, 0, 1]);
    }

    #[test]
    fn vacuous_caps_match_unconstrained() {
        let rows = vec![
            vec![ratio(1, 2), ratio(1, 4), ratio(1, 4)],
            vec![ratio(1, 3), ratio(1, 3), ratio(1, 3)],
        ];
        let inst = Instance::single_category(2, 3, rows).unwrap();
        let (_, a) = opt_usw_unconstrained(&inst);
        let (_, b) = opt_usw_cardinal_matching(&inst).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn greedy_on_cardinal_start_is_noop() {
        let inst = lower_bound_instance();
        let start = Allocation::from_owners(4, vec![0, 1, 2, 3]).unwrap();
        let (out, steps) = greedy_reassign(&inst, &start, 0).unwrap();
        assert_eq!(out, start);
        assert!(steps.is_empty());
    }

    #[test]
    fn greedy_single_step_example() {
        let rows = vec![
            vec![ratio(1, 2), ratio(3, 10), ratio(1, 5)],
            vec![ratio(0, 1), ratio(0, 1), ratio(1, 1)],
        ];
        let inst = Instance::single_category(2, 2, rows).unwrap();
        let start = Allocation::all_to(2, 3, 0).unwrap();
        let (out, steps) = greedy_reassign(&inst, &start, 0).unwrap();
        assert_eq!(
            steps,
            vec![ReassignStep {
                item: 2,
                from_agent: 0,
                to_agent: 1,
                welfare_loss: ratio(-4, 5),
            }]
        );
        assert_eq!(usw(&inst, &out).unwrap(), ratio(9, 5));
        let json = serde_json::to_string(&steps).unwrap();
        assert_eq!(json, r#"[{"item":2,"from":0,"to":1,"loss":"-4/5"}]"#);
    }

    #[test]
    fn greedy_rejects_unknown_category() {
        let inst = lower_bound_instance();
        let start = Allocation::all_to(4, 4, 0).unwrap();
        assert_eq!(greedy_reassign(&inst, &start, 3), Err(Error::UnknownCategory(3)));
    }

    #[test]
    fn keep_top_k_on_egalitarian_lower_bound() {
        // agent 0 wants g0; agent 1 spreads over g1..g3
        let rows = vec![
            vec![ratio(1, 1), ratio(0, 1), ratio(0, 1), ratio(0, 1)],
            vec![ratio(0, 1), ratio(1, 3), ratio(1, 3), ratio(1, 3)],
        ];
        let inst = Instance::single_category(2, 2, rows).unwrap();
        let start = Allocation::from_owners(2, vec![0, 1, 1, 1]).unwrap();
        let out = keep_top_k(&inst, &start).unwrap();
        assert_eq!(out.owners(), &[0, 1, 1, 0]);
        assert_eq!(esw(&inst, &out).unwrap(), ratio(2, 3));

        let cardinal = Allocation::from_owners(2, vec![0, 1, 1, 0]).unwrap();
        assert_eq!(keep_top_k(&inst, &cardinal).unwrap(), cardinal);
    }

    #[test]
    fn keep_top_k_multi_category() {
        let cats = vec![CategorySpec::contiguous(0, 0, 3, 2), CategorySpec::contiguous(1, 3, 2, 1)];
        let rows = vec![
            vec![ratio(1, 10), ratio(3, 10), ratio(2, 10), ratio(3, 10), ratio(1, 10)],
            vec![ratio(1, 5); 5],
        ];
        let inst = Instance::new(2, cats, rows, true).unwrap();
        let start = Allocation::all_to(2, 5, 0).unwrap();
        let out = keep_top_k(&inst, &start).unwrap();
        // category 0 keeps g1, g2; category 1 keeps g3
        assert_eq!(out.owners(), &[1, 0, 0, 0, 1]);
        assert!(is_cardinal(&inst, &out).unwrap());
    }
}

//! Welfare objectives, cardinality checks and agent classification.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::allocation::Allocation;
use crate::error::{Error, Result};
use crate::instance::Instance;
use crate::rational::Rational;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    Usw,
    Esw,
}

impl Objective {
    pub fn evaluate(self, inst: &Instance, alloc: &Allocation) -> Result<Rational> {
        match self {
            Objective::Usw => usw(inst, alloc),
            Objective::Esw => esw(inst, alloc),
        }
    }
}

/// Value of `items` to `agent`.
pub fn bundle_value(inst: &Instance, agent: usize, items: &[usize]) -> Rational {
    items.iter().map(|&g| inst.utility(agent, g)).sum()
}

/// Utility each agent derives from its own bundle.
pub fn agent_utilities(inst: &Instance, alloc: &Allocation) -> Result<Vec<Rational>> {
    alloc.check(inst)?;
    let mut out = vec![Rational::zero(); inst.n()];
    for (g, &a) in alloc.owners().iter().enumerate() {
        out[a] += inst.utility(a, g);
    }
    Ok(out)
}

/// Utilitarian welfare: the sum of agents' utilities.
pub fn usw(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(agent_utilities(inst, alloc)?.into_iter().sum())
}

/// Egalitarian welfare: the utility of the worst-off agent.
pub fn esw(inst: &Instance, alloc: &Allocation) -> Result<Rational> {
    Ok(agent_utilities(inst, alloc)?
        .into_iter()
        .min()
        .expect("instances have at least one agent"))
}

/// True iff no agent holds more than `k_j` items of any category `j`.
pub fn is_cardinal(inst: &Instance, alloc: &Allocation) -> Result<bool> {
    alloc.check(inst)?;
    Ok((0..inst.h()).all(|j| {
        let cap = inst.categories()[j].cap;
        alloc.counts_in(inst, j).into_iter().all(|c| c <= cap)
    }))
}

/// Agents split by how many items of one category they hold relative to its cap.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AgentClassification {
    pub below: BTreeSet<usize>,
    pub exact: BTreeSet<usize>,
    pub above: BTreeSet<usize>,
}

pub fn classify_agents(inst: &Instance, alloc: &Allocation, category: usize) -> Result<AgentClassification> {
    alloc.check(inst)?;
    let cap = inst.category(category)?.cap;
    let mut out = AgentClassification::default();
    for (agent, count) in alloc.counts_in(inst, category).into_iter().enumerate() {
        let set = match count.cmp(&cap) {
            std::cmp::Ordering::Less => &mut out.below,
            std::cmp::Ordering::Equal => &mut out.exact,
            std::cmp::Ordering::Greater => &mut out.above,
        };
        set.insert(agent);
    }
    Ok(out)
}

/// `opt / best`, with `0/0 = 1`.
pub fn poc_ratio(opt: &Rational, best: &Rational) -> Result<Rational> {
    if opt.is_negative() || best.is_negative() {
        return Err(Error::Domain("welfare values must be nonnegative".into()));
    }
    match (opt.is_zero(), best.is_zero()) {
        (true, true) => Ok(Rational::one()),
        (false, true) => Err(Error::InfiniteRatio {
            opt: opt.to_fraction_string(),
        }),
        _ => Ok(opt / best),
    }
}

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};
use crate::instance::Instance;

/// A complete assignment of items to agents, stored as the owner of each
/// item. Bundles are derived on demand.
#[derive(Clone, Debug, PartialEq, Eq, Hash)]
pub struct Allocation {
    n: usize,
    owner: Vec<usize>,
}

impl Allocation {
    pub fn from_owners(n: usize, owner: Vec<usize>) -> Result<Self> {
        if let Some(g) = owner.iter().position(|&a| a >= n) {
            return Err(Error::InvalidAllocation(format!(
                "item {g} assigned to agent {} but there are {n} agents",
                owner[g]
            )));
        }
        Ok(Allocation { n, owner })
    }

    /// Builds an allocation from explicit bundles, which must partition
    /// `0..m` for the implied `m`.
    pub fn from_bundles(bundles: &[Vec<usize>]) -> Result<Self> {
        let m: usize = bundles.iter().map(Vec::len).sum();
        let mut owner = vec![usize::MAX; m];
        for (i, bundle) in bundles.iter().enumerate() {
            for &g in bundle {
                if g >= m {
                    return Err(Error::InvalidAllocation(format!("item {g} out of range")));
                }
                if owner[g] != usize::MAX {
                    return Err(Error::InvalidAllocation(format!("item {g} assigned twice")));
                }
                owner[g] = i;
            }
        }
        Ok(Allocation {
            n: bundles.len(),
            owner,
        })
    }

    /// Every item to `agent`.
    pub fn all_to(n: usize, m: usize, agent: usize) -> Result<Self> {
        Allocation::from_owners(n, vec![agent; m])
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.owner.len()
    }

    pub fn owner(&self, item: usize) -> usize {
        self.owner[item]
    }

    pub fn owners(&self) -> &[usize] {
        &self.owner
    }

    pub(crate) fn set_owner(&mut self, item: usize, agent: usize) {
        self.owner[item] = agent;
    }

    /// Items held by `agent`, ascending.
    pub fn bundle(&self, agent: usize) -> Vec<usize> {
        (0..self.owner.len()).filter(|&g| self.owner[g] == agent).collect()
    }

    pub fn bundles(&self) -> Vec<Vec<usize>> {
        let mut out = vec![Vec::new(); self.n];
        for (g, &a) in self.owner.iter().enumerate() {
            out[a].push(g);
        }
        out
    }

    /// Items of `agent` inside category position `j`, ascending.
    pub fn bundle_in(&self, inst: &Instance, agent: usize, j: usize) -> Vec<usize> {
        let mut items: Vec<usize> = inst.categories()[j]
            .items
            .iter()
            .copied()
            .filter(|&g| self.owner[g] == agent)
            .collect();
        items.sort_unstable();
        items
    }

    /// Number of items each agent holds in category position `j`.
    pub fn counts_in(&self, inst: &Instance, j: usize) -> Vec<usize> {
        let mut counts = vec![0; self.n];
        for &g in &inst.categories()[j].items {
            counts[self.owner[g]] += 1;
        }
        counts
    }

    /// Checks dimensions against `inst`.
    pub fn check(&self, inst: &Instance) -> Result<()> {
        if self.n != inst.n() || self.owner.len() != inst.m() {
            return Err(Error::InvalidAllocation(format!(
                "allocation is {}x{} but instance has {} agents and {} items",
                self.n,
                self.owner.len(),
                inst.n(),
                inst.m()
            )));
        }
        Ok(())
    }
}

impl Serialize for Allocation {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.bundles().serialize(serializer)
    }
}

impl<'de> Deserialize<'de> for Allocation {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let bundles = Vec::<Vec<usize>>::deserialize(deserializer)?;
        Allocation::from_bundles(&bundles).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bundles_round_trip() {
        let a = Allocation::from_owners(3, vec![2, 0, 2, 1]).unwrap();
        assert_eq!(a.bundles(), vec![vec![1], vec![3], vec![0, 2]]);
        assert_eq!(Allocation::from_bundles(&a.bundles()).unwrap(), a);
        assert_eq!(serde_json::to_string(&a).unwrap(), "[[1],[3],[0,2]]");
    }

    #[test]
    fn rejects_bad_partitions() {
        assert!(Allocation::from_bundles(&[vec![0, 1], vec![1]]).is_err());
        assert!(Allocation::from_bundles(&[vec![0, 5]]).is_err());
        assert!(Allocation::from_owners(2, vec![0, 2]).is_err());
    }
}

//! Allocation instances: agents, categorized items and additive utilities.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rational::Rational;

/// One category of items together with its per-agent cardinality cap.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct CategorySpec {
    pub id: usize,
    pub items: Vec<usize>,
    pub cap: usize,
}

impl CategorySpec {
    pub fn new(id: usize, items: Vec<usize>, cap: usize) -> Self {
        CategorySpec { id, items, cap }
    }

    /// Category over the item range `start..start + len`.
    pub fn contiguous(id: usize, start: usize, len: usize, cap: usize) -> Self {
        CategorySpec::new(id, (start..start + len).collect(), cap)
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }
}

#[derive(Serialize, Deserialize)]
struct RawInstance {
    n: usize,
    categories: Vec<CategorySpec>,
    utilities: Vec<Vec<Rational>>,
    normalized: bool,
}

/// A validated instance. Construction checks that categories partition the
/// items, utilities are nonnegative, every category is feasible
/// (`n * cap >= items`), and that rows sum to one when `normalized` is set.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "RawInstance", into = "RawInstance")]
pub struct Instance {
    n: usize,
    categories: Vec<CategorySpec>,
    utilities: Vec<Vec<Rational>>,
    normalized: bool,
    category_of: Vec<usize>,
}

impl TryFrom<RawInstance> for Instance {
    type Error = Error;
    fn try_from(raw: RawInstance) -> Result<Self> {
        Instance::new(raw.n, raw.categories, raw.utilities, raw.normalized)
    }
}

impl From<Instance> for RawInstance {
    fn from(inst: Instance) -> Self {
        RawInstance {
            n: inst.n,
            categories: inst.categories,
            utilities: inst.utilities,
            normalized: inst.normalized,
        }
    }
}

impl Instance {
    /// Parses the JSON form, keeping validation failures as typed errors
    /// rather than folding them into a parse message.
    pub fn from_json(text: &str) -> Result<Self> {
        let raw: RawInstance = serde_json::from_str(text).map_err(|e| Error::Parse(e.to_string()))?;
        Instance::try_from(raw)
    }

    pub fn new(
        n: usize,
        categories: Vec<CategorySpec>,
        utilities: Vec<Vec<Rational>>,
        normalized: bool,
    ) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidInstance("at least one agent required".into()));
        }
        if categories.is_empty() {
            return Err(Error::InvalidInstance("at least one category required".into()));
        }
        let m: usize = categories.iter().map(CategorySpec::len).sum();
        let mut category_of = vec![usize::MAX; m];
        for (pos, cat) in categories.iter().enumerate() {
            if cat.is_empty() {
                return Err(Error::InvalidInstance(format!("category {} is empty", cat.id)));
            }
            if cat.cap == 0 {
                return Err(Error::InvalidInstance(format!("category {} has cap 0", cat.id)));
            }
            if categories[..pos].iter().any(|c| c.id == cat.id) {
                return Err(Error::InvalidInstance(format!("duplicate category id {}", cat.id)));
            }
            for &g in &cat.items {
                if g >= m {
                    return Err(Error::InvalidInstance(format!(
                        "item {g} out of range for {m} items"
                    )));
                }
                if category_of[g] != usize::MAX {
                    return Err(Error::InvalidInstance(format!(
                        "item {g} appears in more than one category"
                    )));
                }
                category_of[g] = pos;
            }
        }
        if utilities.len() != n {
            return Err(Error::InvalidInstance(format!(
                "expected {n} utility rows, got {}",
                utilities.len()
            )));
        }
        for (i, row) in utilities.iter().enumerate() {
            if row.len() != m {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has {} utilities, expected {m}",
                    row.len()
                )));
            }
            if let Some(g) = row.iter().position(Rational::is_negative) {
                return Err(Error::InvalidInstance(format!(
                    "agent {i} has negative utility for item {g}"
                )));
            }
            if normalized {
                let total: Rational = row.iter().sum();
                if total != Rational::one() {
                    return Err(Error::InvalidInstance(format!(
                        "agent {i} utilities sum to {total}, expected 1"
                    )));
                }
            }
        }
        for (pos, cat) in categories.iter().enumerate() {
            if n * cat.cap < cat.len() {
                return Err(Error::Infeasible {
                    category: pos,
                    n,
                    cap: cat.cap,
                    items: cat.len(),
                });
            }
        }
        Ok(Instance {
            n,
            categories,
            utilities,
            normalized,
            category_of,
        })
    }

    /// Single category holding every item, normalization checked.
    pub fn single_category(n: usize, cap: usize, utilities: Vec<Vec<Rational>>) -> Result<Self> {
        let m = utilities.first().map_or(0, Vec::len);
        Instance::new(n, vec![CategorySpec::contiguous(0, 0, m, cap)], utilities, true)
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.category_of.len()
    }

    /// Number of categories.
    pub fn h(&self) -> usize {
        self.categories.len()
    }

    pub fn categories(&self) -> &[CategorySpec] {
        &self.categories
    }

    pub fn category(&self, j: usize) -> Result<&CategorySpec> {
        self.categories.get(j).ok_or(Error::UnknownCategory(j))
    }

    /// Position (not id) of the category containing `item`.
    pub fn category_of(&self, item: usize) -> usize {
        self.category_of[item]
    }

    pub fn utilities(&self) -> &[Vec<Rational>] {
        &self.utilities
    }

    pub fn utility(&self, agent: usize, item: usize) -> &Rational {
        &self.utilities[agent][item]
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    /// `(m_j, k_j)` for every category in list order.
    pub fn pairs(&self) -> Vec<(usize, usize)> {
        self.categories.iter().map(|c| (c.len(), c.cap)).collect()
    }

    /// Copy of this instance with a different utility matrix.
    pub fn with_utilities(&self, utilities: Vec<Vec<Rational>>, normalized: bool) -> Result<Self> {
        Instance::new(self.n, self.categories.clone(), utilities, normalized)
    }

    /// Reorders categories so that `k_j / m_j` is nondecreasing, breaking
    /// ties by fewer items first. Items are renumbered so each category
    /// occupies a contiguous index range in the new order.
    pub fn canonical_category_order(&self) -> Instance {
        self.canonical_category_order_with_map().0
    }

    /// As [`Instance::canonical_category_order`], also returning the map
    /// from old item index to new item index.
    pub fn canonical_category_order_with_map(&self) -> (Instance, Vec<usize>) {
        let order = canonical_order(&self.pairs());
        let mut item_map = vec![0; self.m()];
        let mut categories = Vec::with_capacity(self.h());
        let mut next = 0;
        for (new_pos, &old_pos) in order.iter().enumerate() {
            let cat = &self.categories[old_pos];
            let items: Vec<usize> = (next..next + cat.len()).collect();
            for (&old, &new) in cat.items.iter().zip(&items) {
                item_map[old] = new;
            }
            next += cat.len();
            categories.push(CategorySpec::new(new_pos, items, cat.cap));
        }
        let utilities = self
            .utilities
            .iter()
            .map(|row| {
                let mut out = vec![Rational::zero(); row.len()];
                for (old, u) in row.iter().enumerate() {
                    out[item_map[old]] = u.clone();
                }
                out
            })
            .collect();
        let inst = Instance::new(self.n, categories, utilities, self.normalized)
            .expect("reordering preserves validity");
        (inst, item_map)
    }
}

/// Permutation of category positions sorting by `k/m` ascending, then `m`
/// ascending. Stable, so fully tied categories keep their relative order.
pub fn canonical_order(pairs: &[(usize, usize)]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..pairs.len()).collect();
    order.sort_by(|&a, &b| {
        let (ma, ka) = pairs[a];
        let (mb, kb) = pairs[b];
        // ka/ma vs kb/mb without division
        (ka * mb).cmp(&(kb * ma)).then(ma.cmp(&mb))
    });
    order
}

/// `pairs` rearranged into canonical order.
pub fn canonical_pairs(pairs: &[(usize, usize)]) -> Vec<(usize, usize)> {
    canonical_order(pairs).into_iter().map(|p| pairs[p]).collect()
}

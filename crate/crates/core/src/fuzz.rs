//! Seeded random instances for cross-checking solvers and bounds.
//!
//! Per-item weights are drawn uniformly from `0..=12`, rows of all zeros are
//! redrawn, and each row is divided by its sum.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::instance::{CategorySpec, Instance};
use crate::rational::Rational;

pub const MAX_WEIGHT: u64 = 12;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One normalized utility row over `m` items.
pub fn random_row<R: Rng>(rng: &mut R, m: usize) -> Vec<Rational> {
    loop {
        let w: Vec<u64> = (0..m).map(|_| rng.random_range(0..=MAX_WEIGHT)).collect();
        let total: u64 = w.iter().sum();
        if total > 0 {
            return w.into_iter().map(|x| Rational::from(x) / Rational::from(total)).collect();
        }
    }
}

/// A cap drawn uniformly from the feasible range `ceil(m/n)..=m`.
pub fn random_cap<R: Rng>(rng: &mut R, n: usize, m: usize) -> usize {
    rng.random_range(m.div_ceil(n)..=m)
}

/// Normalized instance with the given category sizes and random caps.
pub fn random_instance<R: Rng>(rng: &mut R, n: usize, sizes: &[usize]) -> Instance {
    let mut start = 0;
    let cats = sizes
        .iter()
        .enumerate()
        .map(|(id, &len)| {
            let cat = CategorySpec::contiguous(id, start, len, random_cap(rng, n, len));
            start += len;
            cat
        })
        .collect();
    let rows = (0..n).map(|_| random_row(rng, start)).collect();
    Instance::new(n, cats, rows, true).expect("random instances are valid by construction")
}

/// `count` instances with `n` in {2, 3} and at most 8 items, alternating
/// between one and two categories.
pub fn corpus(seed: u64, count: usize) -> Vec<Instance> {
    let mut rng = rng(seed);
    (0..count)
        .map(|i| {
            let n = rng.random_range(2..=3);
            if i % 2 == 0 {
                let m = rng.random_range(2..=8);
                random_instance(&mut rng, n, &[m])
            } else {
                let m1 = rng.random_range(1..=4);
                let m2 = rng.random_range(1..=8 - m1);
                random_instance(&mut rng, n, &[m1, m2])
            }
        })
        .collect()
}

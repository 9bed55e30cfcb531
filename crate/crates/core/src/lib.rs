//! Fair allocation of indivisible goods under per-category cardinality caps.
//!
//! Utilities and welfare are exact rationals. The crate computes optimal
//! utilitarian and egalitarian welfare with and without caps, builds the
//! worst-case instance families, and evaluates the closed-form prices of
//! cardinality against an exhaustive oracle.

pub mod allocation;
pub mod bounds;
pub mod error;
pub mod fuzz;
pub mod generators;
pub mod instance;
pub mod matching;
pub mod oracle;
pub mod rational;
pub mod reductions;
pub mod solvers;
pub mod sweep;
pub mod welfare;

pub use allocation::Allocation;
pub use error::{Error, Result};
pub use instance::{CategorySpec, Instance};
pub use rational::Rational;
pub use welfare::{esw, is_cardinal, usw, Objective};

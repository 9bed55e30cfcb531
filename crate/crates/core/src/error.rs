use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum Error {
    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid instance: {0}")]
    InvalidInstance(String),

    #[error("invalid allocation: {0}")]
    InvalidAllocation(String),

    /// `n * cap < items` for some category, so no cardinal allocation exists.
    #[error("infeasible category {category}: {n} agents x cap {cap} < {items} items")]
    Infeasible {
        category: usize,
        n: usize,
        cap: usize,
        items: usize,
    },

    #[error("unknown category index {0}")]
    UnknownCategory(usize),

    #[error("enumeration needs {required} assignments but the budget is {budget}")]
    BudgetExceeded { required: u128, budget: u128 },

    /// A violated precondition of a bound, generator or reduction.
    #[error("precondition violated: {0}")]
    Domain(String),

    /// The optimum is positive while the best cardinal welfare is zero.
    #[error("infinite price ratio: optimum {opt} against zero cardinal welfare")]
    InfiniteRatio { opt: String },
}

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid lattice: {0}")]
    InvalidLattice(String),

    #[error("rank mismatch: rank(M) = {m} must be at most {bound} for rank(L) = {n}")]
    RankMismatch { m: usize, n: usize, bound: usize },

    #[error("resource cap exceeded in {what} (cap {cap})")]
    Resource { what: &'static str, cap: u64 },

    #[error("p-adic precision exhausted in {what} at p = {p} (reached e = {e})")]
    Precision { what: &'static str, p: u64, e: u32 },

    #[error("Newton margin violated: {0}")]
    MarginViolated(String),

    #[error("not found within budget: {0}")]
    BudgetExhausted(String),

    #[error("input must have full row rank (computed rank {rank})")]
    RankDeficient { rank: usize },

    #[error("invalid input: {0}")]
    InvalidInput(String),

    #[error("spinor norm factorization unresolved: {0}")]
    SpinorUnresolved(String),
}

pub type Result<T> = std::result::Result<T, Error>;

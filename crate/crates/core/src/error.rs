use thiserror::Error;

/// Errors raised by the analysis routines.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    /// An argument violates a documented precondition.
    #[error("domain error: {0}")]
    Domain(String),

    /// The requested computation exceeds a fixed resource bound.
    #[error("capacity exceeded: {what} is {requested}, limit is {limit}")]
    Capacity {
        what: &'static str,
        requested: u128,
        limit: u128,
    },

    /// A level system had no unique solution.
    #[error("singular level system at {tokens} tokens (N = {n})")]
    Singular { n: usize, tokens: u32 },

    /// A generating-function style functional does not converge for the given base.
    #[error("E(a^T) diverges for base {base} at N = {n}: level {tokens} produced {value}")]
    Divergence {
        n: usize,
        base: f64,
        tokens: u32,
        value: f64,
    },

    /// Every Monte Carlo run hit the step cap.
    #[error("all {runs} runs were censored at t_max = {t_max}")]
    AllCensored { runs: u64, t_max: u64 },
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

pub(crate) fn domain(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("domain error: {0}")]
    Domain(String),

    #[error("dimension mismatch: {what} (expected {expected}, got {got})")]
    DimensionMismatch {
        what: &'static str,
        expected: usize,
        got: usize,
    },

    #[error("invalid group partition: {0}")]
    InvalidPartition(String),

    #[error("group {0} has zero rank")]
    ZeroRankGroup(usize),

    #[error("design is not orthogonal at group level (max cross inner product {0:.3e})")]
    NotOrthogonal(f64),

    #[error(
        "no convergence after {iterations} iterations (gap {gap:.3e}, infeasibility {infeas:.3e})"
    )]
    NonConvergence {
        iterations: usize,
        gap: f64,
        infeas: f64,
    },

    #[error("support too large for sigma estimation ({support} variables, n = {n})")]
    SupportTooLarge { support: usize, n: usize },

    #[error("invalid configuration: {0}")]
    Config(String),
}

impl Error {
    pub(crate) fn domain(msg: impl Into<String>) -> Self {
        Error::Domain(msg.into())
    }
}

pub(crate) fn check_len(what: &'static str, expected: usize, got: usize) -> Result<()> {
    if expected == got {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            what,
            expected,
            got,
        })
    }
}

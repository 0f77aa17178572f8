use thiserror::Error;

pub type Result<T> = std::result::Result<T, Error>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    /// An argument lies outside the domain of the operation.
    #[error("domain error: {0}")]
    Domain(String),

    /// A configuration violates one of its invariants.
    #[error("invalid configuration: {0}")]
    Config(String),

    /// The integrand or a sampled quantity became non-finite.
    #[error("non-finite value at x = {abscissa:e}: {context}")]
    NonFinite { abscissa: f64, context: String },

    /// An iterative or sampled computation failed to converge.
    #[error("numerical non-convergence: {0}")]
    Convergence(String),

    /// The sampling grid does not hold the probability it should.
    #[error("grid coverage error: {0}")]
    Coverage(String),

    /// Two objects that must share a grid do not.
    #[error("grid mismatch: {0}")]
    GridMismatch(String),

    /// A physical or algebraic invariant was violated beyond tolerance.
    #[error("invariant violation: {0}")]
    Invariant(String),

    #[error("fringe visibility undefined: {0}")]
    VisibilityUndefined(String),

    /// The filter transmits no probability at all.
    #[error("filter blocks all probability: {0}")]
    FilterBlocked(String),

    #[error("unsupported state: {0}")]
    Unsupported(String),
}

pub(crate) fn ensure(cond: bool, err: impl FnOnce() -> Error) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(err())
    }
}

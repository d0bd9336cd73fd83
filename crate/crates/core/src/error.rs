//! Shared error type for the whole crate.

use thiserror::Error;

/// Errors produced by the probability engines and their supporting modules.
#[derive(Debug, Error)]
pub enum Error {
    /// Matrix or permutation dimensions do not satisfy an operation's
    /// preconditions.
    #[error("invalid dimension: {0}")]
    InvalidDimension(String),

    /// An outcome pattern references modes outside the interferometer or
    /// repeats a mode.
    #[error("invalid pattern: {0}")]
    InvalidPattern(String),

    /// A parameter is outside its documented domain.
    #[error("invalid input: {0}")]
    InvalidInput(String),

    /// The requested computation exceeds the configured cost budget.
    #[error("cost guard: {0}")]
    CostGuard(String),

    /// A quantity that must be real (or nonnegative) came out otherwise by
    /// more than the documented tolerance.
    #[error("numerical inconsistency: {0}")]
    NumericalInconsistency(String),

    /// The Markov chain could not find a state with positive target weight
    /// within its retry budget.
    #[error("chain stuck: {0}")]
    ChainStuck(String),

    /// A combinatorial count does not fit in 64 bits.
    #[error("integer overflow computing {0}")]
    Overflow(&'static str),
}

pub type Result<T> = std::result::Result<T, Error>;

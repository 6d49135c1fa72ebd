use thiserror::Error;

use crate::numerics::NumericsError;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    ShapeMismatch(String),
    #[error("user {user} has zero effective signal gain")]
    ZeroSignalGain { user: usize },
    #[error("user {user} has zero level gain")]
    ZeroGain { user: usize },
    #[error("block diagonalization needs M > {required} for user {user}, have M = {available}")]
    DimensionInfeasible {
        user: usize,
        required: usize,
        available: usize,
    },
    #[error("null space for user {user} has {available} dimensions, {needed} streams requested")]
    InsufficientNullSpace {
        user: usize,
        available: usize,
        needed: usize,
    },
    #[error("no nonnegative power allocation meets the targets")]
    Infeasible,
    #[error("numerics failure at iteration {iteration}: {source}")]
    AtIteration {
        iteration: usize,
        #[source]
        source: Box<Error>,
    },
    #[error(transparent)]
    Numerics(#[from] NumericsError),
}

impl Error {
    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        match self {
            e @ Error::AtIteration { .. } => e,
            e => Error::AtIteration {
                iteration,
                source: Box::new(e),
            },
        }
    }

    /// The underlying error with any iteration context stripped.
    pub fn root(&self) -> &Error {
        match self {
            Error::AtIteration { source, .. } => source.root(),
            e => e,
        }
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;

use alloc::boxed::Box;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("input point has a non-finite coordinate at index {index}")]
    NonFiniteInput { index: usize },

    #[error("objective {objective} produced a non-finite value or gradient")]
    EvaluationFailed { objective: usize },

    #[error("invalid parameter: {0}")]
    InvalidParameter(&'static str),

    #[error("LP solver failure: {0}")]
    SolverFailure(&'static str),

    #[error("block {index}: {source}")]
    Block { index: usize, source: Box<Error> },

    #[error("iteration {iteration}: {source}")]
    Iteration { iteration: usize, source: Box<Error> },
}

impl Error {
    pub(crate) fn in_block(self, index: usize) -> Self {
        Error::Block { index, source: Box::new(self) }
    }

    pub(crate) fn at_iteration(self, iteration: usize) -> Self {
        Error::Iteration { iteration, source: Box::new(self) }
    }
}

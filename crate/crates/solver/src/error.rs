use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum SolverError {
    #[error("row {row} references variable {var} but the model has {num_vars} variables")]
    UnknownVariable { row: usize, var: usize, num_vars: usize },
    #[error("non-finite coefficient in {0}")]
    NonFinite(String),
    #[error("variable {var} has lower bound {lower} above upper bound {upper}")]
    InvertedBounds { var: usize, lower: f64, upper: f64 },
    #[error("bound vectors have length {got}, expected {expected}")]
    BoundLength { got: usize, expected: usize },
    #[error("variable {0} is marked binary but its bounds are not within [0, 1]")]
    NotBinary(usize),
    #[error("{got} binaries exceed the enumeration limit of {limit}")]
    TooManyBinaries { got: usize, limit: usize },
    #[error("simplex exceeded its iteration limit of {0}")]
    IterationLimit(usize),
}

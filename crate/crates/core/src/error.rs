use flexbid_solver::SolverError;
use thiserror::Error;

use crate::bidding::Infeasibility;

#[derive(Debug, Error)]
pub enum CoreError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("day {day} out of range for a series of {n_days} days")]
    DayOutOfRange { day: usize, n_days: usize },
    #[error("infeasible bidding model: {0}")]
    Infeasible(Infeasibility),
    #[error("bidding model is unbounded; set a finite bid upper bound")]
    Unbounded,
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("i/o error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("json error: {0}")]
    Json(#[from] serde_json::Error),
    #[error("{}: {source}", path.display())]
    File {
        path: std::path::PathBuf,
        #[source]
        source: Box<CoreError>,
    },
}

impl CoreError {
    /// Strips any file context.
    pub fn root(&self) -> &CoreError {
        match self {
            CoreError::File { source, .. } => source.root(),
            other => other,
        }
    }
}

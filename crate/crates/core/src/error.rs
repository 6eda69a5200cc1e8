use thiserror::Error;

/// Errors raised across the crate.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("matrix of size {rows}x{cols} exceeds the configured limit of {limit}")]
    DimensionTooLarge {
        rows: usize,
        cols: usize,
        limit: usize,
    },

    #[error("matrix is not Hermitian (max deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },

    #[error("eigensolver did not converge after {sweeps} sweeps")]
    NoConvergence { sweeps: usize },

    #[error("dimension {0} is not prime")]
    NotPrime(usize),

    #[error("dimension {d} is not supported: {reason}")]
    UnsupportedDimension { d: usize, reason: String },

    #[error("{what} out of range: {value}")]
    OutOfRange { what: &'static str, value: String },

    #[error("invalid state: {0}")]
    InvalidState(String),

    #[error("invalid measurement: {0}")]
    InvalidPovm(String),

    #[error("invalid channel: {0}")]
    InvalidChannel(String),

    #[error("invalid model: {0}")]
    InvalidModel(String),

    #[error("invalid game: {0}")]
    InvalidGame(String),

    #[error("invalid configuration: {0}")]
    InvalidConfig(String),

    #[error("SDP infeasible: {0}")]
    Infeasible(String),

    #[error("SDP solver failed after {iterations} iterations: {reason}")]
    SolverFailure { iterations: usize, reason: String },

    #[error("see-saw restart {restart} failed: {source}")]
    Restart {
        restart: usize,
        #[source]
        source: Box<Error>,
    },
}

impl Error {
    /// True for errors that originate in a numerical solver rather than in bad input.
    pub fn is_solver_failure(&self) -> bool {
        match self {
            Error::NoConvergence { .. } | Error::Infeasible(_) | Error::SolverFailure { .. } => {
                true
            }
            Error::Restart { source, .. } => source.is_solver_failure(),
            _ => false,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

//! Error taxonomy shared by the library and the command-line tool.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum Error {
    /// An argument violates a precondition (range, dimension, normalization).
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    /// The request is well-formed but outside the supported model
    /// (for example a detuned polariton map).
    #[error("unsupported configuration: {0}")]
    UnsupportedConfiguration(String),
    /// A dimension or memory guard tripped.
    #[error("resource limit exceeded: {0}")]
    ResourceLimit(String),
    /// An iterative scheme failed to converge or a numerical postcondition
    /// (trace, hermiticity, positivity) was violated.
    #[error("numerical failure: {0}")]
    NumericalFailure(String),
    /// Eigenvector identification in the effective-coupling fit was ambiguous.
    #[error("fit failure: {0}")]
    FitFailure(String),
    /// A forced measurement outcome selected a branch with (near) zero norm.
    #[error("degenerate branch: {0}")]
    DegenerateBranch(String),
    /// Malformed circuit or schedule text.
    #[error("parse error: {0}")]
    Parse(String),
}

impl Error {
    /// Process exit code for the CLI: 1 usage/config, 2 numerical, 3 resources.
    pub fn exit_code(&self) -> i32 {
        match self {
            Error::InvalidParameter(_) | Error::UnsupportedConfiguration(_) | Error::Parse(_) => 1,
            Error::NumericalFailure(_) | Error::FitFailure(_) | Error::DegenerateBranch(_) => 2,
            Error::ResourceLimit(_) => 3,
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

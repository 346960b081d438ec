use thiserror::Error;

use crate::assembly::AssemblyError;
use crate::eigensolve::SolverError;
use crate::geometry::GeometryError;
use crate::profiles::ProfileError;
use crate::sparse::SparseError;

/// Any failure of the toolkit.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Geometry(#[from] GeometryError),
    #[error(transparent)]
    Profile(#[from] ProfileError),
    #[error(transparent)]
    Assembly(#[from] AssemblyError),
    #[error(transparent)]
    Solver(#[from] SolverError),
    #[error("invalid input: {0}")]
    Invalid(String),
    #[error("degenerate data: {0}")]
    Degenerate(String),
}

impl From<SparseError> for Error {
    fn from(e: SparseError) -> Self {
        Error::Assembly(AssemblyError::Solver(e))
    }
}

impl Error {
    /// True for failures of the numerics (factorization, non-convergence)
    /// rather than of the input.
    pub fn is_numerical(&self) -> bool {
        matches!(
            self,
            Error::Solver(SolverError::NotConverged { .. } | SolverError::Factorization(_)) | Error::Assembly(AssemblyError::Solver(_))
        )
    }
}

pub type Result<T> = std::result::Result<T, Error>;

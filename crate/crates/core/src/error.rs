use thiserror::Error;

/// Errors raised by the matrix kernel, map constructors and solvers.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("matrix is not square: {0}x{1}")]
    NonSquare(usize, usize),

    #[error("matrix is not Hermitian (asymmetry {0:.3e})")]
    NonHermitian(f64),

    #[error("matrix is not positive semidefinite (min eigenvalue {0:.6e})")]
    NotPsd(f64),

    #[error("matrix has non-finite entries")]
    NonFinite,

    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),

    #[error("map is zero")]
    ZeroMap,

    #[error("operator is not a contraction (norm {0:.6e})")]
    NotContraction(f64),

    #[error("matrix is not unitary (residual {0:.3e})")]
    NotUnitary(f64),

    #[error("not a probability vector: {0}")]
    NotProbability(String),

    #[error("domain and codomain differ: M_{0} -> M_{1}")]
    NotSquareMap(usize, usize),

    #[error("central vector has non-scalar Gram matrix (deviation {0:.3e})")]
    CenterNotScalarGram(f64),

    #[error("residual map is not completely positive (min Choi eigenvalue {0:.6e})")]
    ResidualNotCp(f64),

    #[error("solver failure: {0}")]
    SolverFailure(String),

    #[error("parse error: {0}")]
    Parse(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

pub type Result<T> = std::result::Result<T, Error>;

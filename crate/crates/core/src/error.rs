use thiserror::Error;

use crate::field::FieldKind;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("invalid grid: {0}")]
    InvalidGrid(String),
    #[error("invalid model: {0}")]
    InvalidModel(String),
    #[error("operator is not Hermitian under the weighted inner product (residual {0:e})")]
    NotHermitian(f64),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("field kind mismatch: expected {expected:?}, got {got:?}")]
    KindMismatch { expected: FieldKind, got: FieldKind },
    #[error("non-finite value in {0}")]
    NonFinite(String),
    #[error("finite-difference step underflow")]
    StepUnderflow,
    #[error("inconsistent scalar derivatives: {0}")]
    InconsistentDerivatives(String),
    #[error("zero norm: {0}")]
    ZeroNorm(String),
    #[error("basis is not orthonormal (Gram residual {0:e})")]
    BasisNotOrthonormal(f64),
    #[error("inverse constraint function undefined for argument {0}")]
    InverseDomain(f64),
    #[error("invalid constraint: {0}")]
    InvalidConstraint(String),
    #[error("constraint violated at base point (residual {0:e})")]
    ConstraintViolated(f64),
    #[error("analytic and numeric derivatives disagree (relative deviation {0:e})")]
    MethodDisagreement(f64),
    #[error("point is not stationary (residual {0:e})")]
    NotStationary(f64),
    #[error("assembled matrix is not symmetric (residual {0:e})")]
    Asymmetric(f64),
    #[error("symmetric eigensolver did not converge")]
    EigenNonConvergence,
    #[error("odd number of negative eigenvalues ({0}) in a complex problem")]
    OddNegativeCount(usize),
    #[error("Taylor probe slope {slope} outside [{lo}, {hi}]")]
    SlopeOutOfWindow { slope: f64, lo: f64, hi: f64 },
    #[error("state {state} out of range for dimension {dim}")]
    StateOutOfRange { state: usize, dim: usize },
    #[error("state {0} lies in the projected-out span")]
    Annihilated(usize),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("parse error: {0}")]
    Parse(String),
}

//! Error type shared by every module.

use thiserror::Error;

/// Errors raised by the numerical pipeline.
#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("integrator failure at theta = {theta}: {reason}")]
    IntegratorFailure { theta: f64, reason: String },
    #[error("zero resolution failed near theta = {theta}: |f| = {value:e}, |f'| = {slope:e}")]
    ZeroResolution { theta: f64, value: f64, slope: f64 },
    #[error("regularization mode does not match the zero structure: {0}")]
    RegularizationMismatch(String),
    #[error("invariant drift {drift:e} exceeds tolerance")]
    NotInvariant { drift: f64 },
    #[error("stabilizer has I = 0 and cannot be rescaled")]
    ZeroInvariant,
    #[error("parameter out of range: {0}")]
    ParameterOutOfRange(String),
    #[error("not a diffeomorphism: min phi' = {min_slope:e}")]
    NotADiffeomorphism { min_slope: f64 },
    #[error("grid overflow: clipped mass fraction {clipped:e}")]
    GridOverflow { clipped: f64 },
    #[error("boundary class: {0}")]
    BoundaryClass(String),
    #[error("operator is resonant")]
    ResonantOperator,
    #[error("operator is not generic: {0}")]
    NonGenericOperator(String),
    #[error("constraint violated: {0}")]
    ConstraintViolation(String),
    #[error("inconsistent invariant: {0}")]
    InconsistentInvariant(String),
    #[error("branch cut crossed at {0}")]
    BranchCut(String),
    #[error("label out of domain: {0}")]
    LabelOutOfDomain(String),
    #[error("boundary leak: mass fraction {0:e} near the box edge")]
    BoundaryLeak(f64),
    #[error("state is not eigen-like: overlap modulus {0}")]
    NotEigenlike(f64),
    #[error("invalid input: {0}")]
    InvalidInput(String),
}

impl Error {
    /// Stable machine-readable name, used in CLI reports.
    pub fn name(&self) -> &'static str {
        match self {
            Error::IntegratorFailure { .. } => "IntegratorFailure",
            Error::ZeroResolution { .. } => "ZeroResolutionError",
            Error::RegularizationMismatch(_) => "RegularizationMismatch",
            Error::NotInvariant { .. } => "NotInvariant",
            Error::ZeroInvariant => "ZeroInvariant",
            Error::ParameterOutOfRange(_) => "ParameterOutOfRange",
            Error::NotADiffeomorphism { .. } => "NotADiffeomorphism",
            Error::GridOverflow { .. } => "GridOverflow",
            Error::BoundaryClass(_) => "BoundaryClass",
            Error::ResonantOperator => "ResonantOperator",
            Error::NonGenericOperator(_) => "NonGenericOperator",
            Error::ConstraintViolation(_) => "ConstraintViolation",
            Error::InconsistentInvariant(_) => "InconsistentInvariant",
            Error::BranchCut(_) => "BranchCut",
            Error::LabelOutOfDomain(_) => "LabelOutOfDomain",
            Error::BoundaryLeak(_) => "BoundaryLeak",
            Error::NotEigenlike(_) => "NotEigenlike",
            Error::InvalidInput(_) => "InvalidInput",
        }
    }
}

pub type Result<T> = std::result::Result<T, Error>;

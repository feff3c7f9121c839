use thiserror::Error;

use crate::matkernel::LinalgError;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error("dimension mismatch: expected {expected}, got {got}")]
    DimMismatch { expected: usize, got: usize },
    #[error("shape mismatch: expected {expected:?}, got {got:?}")]
    ShapeMismatch {
        expected: (usize, usize),
        got: (usize, usize),
    },
    #[error("the annulus map is undefined at the origin")]
    AnnulusOrigin,
    #[error("point lies outside the domain (margin {margin:e})")]
    OutsideDomain { margin: f64 },
    #[error("point lies outside the open unit disk (|z| = {0})")]
    OutsideDisk(f64),
    #[error("argument {value} outside the admissible range {range}")]
    OutOfRange { value: f64, range: &'static str },
    #[error("matrix is not a strict contraction (norm {0})")]
    NotStrictContraction(f64),
    #[error("eigenvectors are linearly dependent (|det P| = {0:e})")]
    DependentVectors(f64),
    #[error("coordinate matrices do not commute (commutator norm {0:e})")]
    NotCommuting(f64),
    #[error("kernel matrix is rank deficient")]
    RankDeficient,
    #[error("function value has modulus {0} >= 1")]
    ModulusViolation(f64),
    #[error("unsupported: {0}")]
    Unsupported(String),
    #[error("sampler exhausted after {0} rejections")]
    Exhausted(usize),
    #[error("bisection failed: {0}")]
    BisectionFailed(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error("invalid domain spec: {0}")]
    Validation(String),
    #[error("invalid configuration: {0}")]
    Config(String),
}

pub type Result<T> = std::result::Result<T, Error>;

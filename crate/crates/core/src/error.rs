use thiserror::Error;

pub type Result<T, E = Error> = core::result::Result<T, E>;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum Error {
    #[error("dimension mismatch: expected {expected}, found {found}")]
    DimensionMismatch { expected: usize, found: usize },

    #[error("malformed sparse structure: {0}")]
    MalformedMatrix(&'static str),

    #[error("matrix is not square ({rows}x{cols})")]
    NotSquare { rows: usize, cols: usize },

    #[error("matrix is not symmetric: A[{row},{col}] != A[{col},{row}]")]
    Asymmetric { row: usize, col: usize },

    #[error("zero diagonal entry in row {row}")]
    ZeroDiagonal { row: usize },

    #[error("non-positive pivot {value} in row {row}; matrix is not positive definite")]
    NotPositiveDefinite { row: usize, value: f64 },

    #[error("CG breakdown at iteration {iteration}: p^T A p = {curvature} is not positive")]
    Breakdown { iteration: usize, curvature: f64 },

    #[error("non-finite sample point ({x}, {y}, {z})")]
    NonFinitePoint { x: f64, y: f64, z: f64 },

    #[error("invalid configuration: {0}")]
    InvalidConfig(&'static str),
}

//! Dense linear-algebra kernels: Hermitian (generalized) eigensolver,
//! Perron eigenpair extraction, linear solve, pivoted QR and a small
//! two-phase simplex.

mod eig;
mod linear;
mod matrix;
mod perron;
mod qr;
mod simplex;

use thiserror::Error;

pub use eig::{hermitian_eig, hermitian_generalized_eig, EigResult};
pub use linear::solve_linear;
pub use matrix::{dot_h, norm_inf, norm_sqr, ComplexMatrix, RealMatrix};
pub use perron::{dominant_nonneg_eigpair, PerronPair};
pub use qr::{null_space, PivotedQr};
pub use simplex::lp_min_sum;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum NumericsError {
    #[error("dimension mismatch: expected {expected:?}, found {found:?}")]
    DimensionMismatch {
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("matrix contains non-finite entries")]
    NonFinite,
    #[error("matrix is not positive definite (pivot {pivot:.3e} at index {index})")]
    NotPositiveDefinite { index: usize, pivot: f64 },
    #[error("requested {requested} eigenpairs of a {dim}x{dim} pencil")]
    InvalidCount { requested: usize, dim: usize },
    #[error("iteration did not converge after {iterations} steps (residual {residual:.3e})")]
    NonConvergence { iterations: usize, residual: f64 },
    #[error("dominant eigenvector has a vanishing last component")]
    DegenerateVector,
    #[error("matrix is numerically singular (pivot {pivot:.3e} at column {column})")]
    Singular { column: usize, pivot: f64 },
    #[error("linear program is infeasible (phase-one residual {residual:.3e})")]
    Infeasible { residual: f64 },
    #[error("linear program is unbounded")]
    Unbounded,
    #[error("linear program right-hand side must be positive")]
    NonPositiveRhs,
}

//! Dense numerical kernel sized for matrices up to a few dozen rows.
//!
//! Everything here is a pure function of its inputs. Matrices are small,
//! so the algorithms favour robustness (Householder/Francis QR, one-sided
//! Jacobi SVD, partial-pivot LU) over asymptotic speed.

mod eigen;
mod fd;
mod lu;
mod matrix;
mod newton;
mod ode;
mod svd;

use thiserror::Error;

pub use eigen::{eigenvalues, Spectrum};
pub use fd::{fd_jacobian, fd_mixed_directional, fd_second_directional, fd_step};
pub use lu::{determinant, solve, Lu};
pub use matrix::{kron_i2, DenseMatrix};
pub use newton::{newton_root, newton_root_with_jacobian, NewtonOptions, NewtonReport};
pub use ode::{integrate_ode, OdeMethod, OdeOptions, Trajectory};
pub use svd::{left_nullspace, lstsq, null_space, rank_tol, singular_values, Svd};

/// Relative cutoff used by rank-based predicates unless a caller overrides it.
pub const DEFAULT_RANK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Error, PartialEq)]
pub enum NumError {
    #[error("dimension mismatch in {op}: {detail}")]
    Dimension { op: &'static str, detail: String },
    #[error("{op} did not converge after {iterations} iterations")]
    Convergence { op: &'static str, iterations: usize },
    #[error("newton iteration did not converge after {iterations} iterations (residual {residual:e})")]
    NoConvergence {
        last_iterate: Vec<f64>,
        iterations: usize,
        residual: f64,
    },
    #[error("state became non-finite at t = {time}")]
    BlowUp { time: f64 },
    #[error("matrix is singular")]
    Singular,
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
}

impl NumError {
    pub(crate) fn dim(op: &'static str, detail: impl Into<String>) -> Self {
        NumError::Dimension {
            op,
            detail: detail.into(),
        }
    }
}

/// Infinity norm of a vector.
pub fn norm_inf<T: crate::Scalar>(v: &[T]) -> T {
    v.iter().fold(T::zero(), |acc, x| acc.max(x.abs()))
}

/// Euclidean norm of a vector.
pub fn norm2<T: crate::Scalar>(v: &[T]) -> T {
    v.iter().map(|x| *x * *x).sum::<T>().sqrt()
}

pub fn dot<T: crate::Scalar>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).map(|(x, y)| *x * *y).sum()
}

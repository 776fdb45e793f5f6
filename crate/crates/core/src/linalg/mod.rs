//! Small dense linear algebra for observer design and verification.
//!
//! Everything here targets matrices with n ≤ ~10: Lyapunov solves go
//! through the Kronecker (vectorized) linear system, symmetric spectra
//! through cyclic Jacobi, and general spectra through the characteristic
//! polynomial. All functions are pure.

mod eigen;
mod expm;
mod lyapunov;
mod matrix;
mod poles;
mod solve;

pub use eigen::{
    characteristic_polynomial, eigenvalues, induced_norm, is_hurwitz, is_schur, poly_roots,
    spectrum_distance, symmetric_eigenvalues, symmetric_extremal_eigs,
    symmetric_extremal_eigs_with,
};
pub use expm::expm;
pub use lyapunov::{lyapunov_residual, solve_lyapunov, solve_lyapunov_with};
pub use matrix::{dot, norm, Matrix, Vector};
pub use num_complex::Complex64;
pub use poles::{
    observability_matrix, place_poles_continuous, place_poles_discrete, place_poles_discrete_with,
    place_poles_with, poly_from_roots,
};
pub use solve::{rank, solve_linear};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum LinalgError {
    #[error("empty matrix or vector")]
    Empty,
    #[error("non-finite entry")]
    NonFinite,
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("matrix must be square, got {rows}x{cols}")]
    NotSquare { rows: usize, cols: usize },
    #[error("matrix is not Hurwitz (largest eigenvalue real part {max_real:e})")]
    NotHurwitz { max_real: f64 },
    #[error("pair is not observable (observability rank {rank} < {n})")]
    NotObservable { rank: usize, n: usize },
    #[error("matrix is not symmetric (asymmetry {asymmetry:e})")]
    NotSymmetric { asymmetry: f64 },
    #[error("matrix is not positive definite (smallest eigenvalue {min_eig:e})")]
    NotPositiveDefinite { min_eig: f64 },
    #[error("singular linear system")]
    Singular,
    #[error("overflow in matrix exponential")]
    Overflow,
    #[error("invalid pole targets: {0}")]
    InvalidTargets(String),
}

/// Numerical tolerances shared by the kernels; override per call with the
/// `*_with` variants.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tolerances {
    /// An eigenvalue with real part ≥ `-hurwitz_margin` fails the Hurwitz check.
    pub hurwitz_margin: f64,
    /// Allowed `|s_ij - s_ji|`, relative to `max(1, max |s_ij|)`.
    pub symmetry: f64,
    /// Relative pivot threshold for rank decisions.
    pub rank: f64,
    /// Slack for semidefiniteness checks on eigenvalues.
    pub eig: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            hurwitz_margin: 1e-12,
            symmetry: 1e-12,
            rank: 1e-10,
            eig: 1e-9,
        }
    }
}

pub(crate) fn require_square(m: &Matrix) -> Result<usize, LinalgError> {
    if m.is_square() {
        Ok(m.rows())
    } else {
        Err(LinalgError::NotSquare {
            rows: m.rows(),
            cols: m.cols(),
        })
    }
}

pub(crate) fn require_symmetric(m: &Matrix, tol: f64) -> Result<(), LinalgError> {
    require_square(m)?;
    let asymmetry = m.asymmetry();
    if asymmetry > tol * m.max_abs().max(1.0) {
        return Err(LinalgError::NotSymmetric { asymmetry });
    }
    Ok(())
}

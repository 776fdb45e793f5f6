use super::eigen::is_hurwitz;
use super::{require_square, require_symmetric, solve_linear, LinalgError, Matrix, Tolerances};

/// Solves `P·A + Aᵀ·P = −Q` for Hurwitz `A` and symmetric positive definite `Q`.
///
/// The n²×n² Kronecker system is solved directly; fine for the n ≤ 10
/// matrices this crate deals with.
pub fn solve_lyapunov(a_cl: &Matrix, q: &Matrix) -> Result<Matrix, LinalgError> {
    solve_lyapunov_with(a_cl, q, &Tolerances::default())
}

pub fn solve_lyapunov_with(
    a_cl: &Matrix,
    q: &Matrix,
    tol: &Tolerances,
) -> Result<Matrix, LinalgError> {
    let n = require_square(a_cl)?;
    if q.rows() != n || q.cols() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "Q is {}x{}, A is {n}x{n}",
            q.rows(),
            q.cols()
        )));
    }
    require_symmetric(q, tol.symmetry)?;
    is_hurwitz(a_cl, tol.hurwitz_margin)?;

    // Row-major vec(P): index (i, j) -> i*n + j.
    let nn = n * n;
    let mut kron = Matrix::zeros(nn, nn);
    for i in 0..n {
        for j in 0..n {
            let row = i * n + j;
            for k in 0..n {
                // (P A)_ij = Σ_k P_ik A_kj
                kron[(row, i * n + k)] += a_cl[(k, j)];
                // (Aᵀ P)_ij = Σ_k A_ki P_kj
                kron[(row, k * n + j)] += a_cl[(k, i)];
            }
        }
    }
    let rhs: Vec<f64> = q.as_slice().iter().map(|v| -v).collect();
    let vec_p = solve_linear(&kron, &rhs)?;
    let p = Matrix::new(n, n, vec_p)?;
    Ok(p.symmetrized())
}

/// Frobenius norm of `P·A + Aᵀ·P + Q`.
pub fn lyapunov_residual(p: &Matrix, a_cl: &Matrix, q: &Matrix) -> f64 {
    p.matmul(a_cl)
        .add(&a_cl.transpose().matmul(p))
        .add(q)
        .frobenius_norm()
}

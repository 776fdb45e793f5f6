use super::{require_square, LinalgError, Matrix};

const MAX_TAYLOR_TERMS: usize = 40;

/// `exp(a·t)` by scaling and squaring around a truncated Taylor series.
pub fn expm(a: &Matrix, t: f64) -> Result<Matrix, LinalgError> {
    let n = require_square(a)?;
    if !t.is_finite() {
        return Err(LinalgError::NonFinite);
    }
    let at = a.scale(t);
    let norm = at.norm_1();
    let squarings = if norm > 0.5 {
        (norm / 0.5).log2().ceil() as i32
    } else {
        0
    };
    let scaled = at.scale(0.5f64.powi(squarings));

    let mut sum = Matrix::identity(n);
    let mut term = Matrix::identity(n);
    for k in 1..=MAX_TAYLOR_TERMS {
        term = term.matmul(&scaled).scale(1.0 / k as f64);
        sum = sum.add(&term);
        if term.max_abs() <= f64::EPSILON * 1e-2 * sum.max_abs() {
            break;
        }
    }
    for _ in 0..squarings {
        sum = sum.matmul(&sum);
        if !sum.is_finite() {
            return Err(LinalgError::Overflow);
        }
    }
    if !sum.is_finite() {
        return Err(LinalgError::Overflow);
    }
    Ok(sum)
}

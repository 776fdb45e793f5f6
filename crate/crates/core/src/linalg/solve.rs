use super::{require_square, LinalgError, Matrix};

/// Solves `a · x = b` by Gaussian elimination with partial pivoting,
/// followed by one step of iterative refinement.
pub fn solve_linear(a: &Matrix, b: &[f64]) -> Result<Vec<f64>, LinalgError> {
    let n = require_square(a)?;
    if b.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "right-hand side has {} entries, expected {n}",
            b.len()
        )));
    }
    let lu = Lu::factor(a)?;
    let mut x = lu.solve(b);
    let ax = a.mul_vec(&x);
    let residual: Vec<f64> = b.iter().zip(&ax).map(|(bi, axi)| bi - axi).collect();
    let correction = lu.solve(&residual);
    for (xi, ci) in x.iter_mut().zip(correction) {
        *xi += ci;
    }
    Ok(x)
}

struct Lu {
    n: usize,
    lu: Vec<f64>,
    perm: Vec<usize>,
}

impl Lu {
    fn factor(a: &Matrix) -> Result<Self, LinalgError> {
        let n = a.rows();
        let mut lu = a.as_slice().to_vec();
        let mut perm: Vec<usize> = (0..n).collect();
        let threshold = a.max_abs() * f64::EPSILON * n as f64;
        for col in 0..n {
            let (pivot_row, pivot) =
                (col..n)
                    .map(|r| (r, lu[r * n + col].abs()))
                    .fold(
                        (col, -1.0),
                        |best, cur| if cur.1 > best.1 { cur } else { best },
                    );
            if pivot <= threshold || pivot == 0.0 {
                return Err(LinalgError::Singular);
            }
            if pivot_row != col {
                for j in 0..n {
                    lu.swap(col * n + j, pivot_row * n + j);
                }
                perm.swap(col, pivot_row);
            }
            let d = lu[col * n + col];
            for r in (col + 1)..n {
                let factor = lu[r * n + col] / d;
                lu[r * n + col] = factor;
                if factor != 0.0 {
                    for j in (col + 1)..n {
                        lu[r * n + j] -= factor * lu[col * n + j];
                    }
                }
            }
        }
        Ok(Self { n, lu, perm })
    }

    fn solve(&self, b: &[f64]) -> Vec<f64> {
        let n = self.n;
        let mut y: Vec<f64> = self.perm.iter().map(|&p| b[p]).collect();
        for i in 0..n {
            for j in 0..i {
                y[i] -= self.lu[i * n + j] * y[j];
            }
        }
        for i in (0..n).rev() {
            for j in (i + 1)..n {
                y[i] -= self.lu[i * n + j] * y[j];
            }
            y[i] /= self.lu[i * n + i];
        }
        y
    }
}

/// Numerical rank by Gaussian elimination with complete pivoting; a pivot
/// counts when it exceeds `rel_tol · max |m_ij|`.
pub fn rank(m: &Matrix, rel_tol: f64) -> usize {
    let (rows, cols) = (m.rows(), m.cols());
    let mut a = m.to_rows();
    let scale = m.max_abs();
    if scale == 0.0 {
        return 0;
    }
    let mut r = 0;
    while r < rows.min(cols) {
        let mut best = (r, r, 0.0f64);
        for (i, row) in a.iter().enumerate().skip(r) {
            for (j, v) in row.iter().enumerate().skip(r) {
                if v.abs() > best.2 {
                    best = (i, j, v.abs());
                }
            }
        }
        if best.2 <= rel_tol * scale {
            break;
        }
        a.swap(r, best.0);
        for row in a.iter_mut() {
            row.swap(r, best.1);
        }
        for i in (r + 1)..rows {
            let factor = a[i][r] / a[r][r];
            for j in r..cols {
                a[i][j] -= factor * a[r][j];
            }
        }
        r += 1;
    }
    r
}

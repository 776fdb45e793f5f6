use num_complex::Complex64;

use super::{require_square, require_symmetric, LinalgError, Matrix, Tolerances};

const JACOBI_MAX_SWEEPS: usize = 100;
const ABERTH_MAX_ITERS: usize = 2000;

/// All eigenvalues of a symmetric matrix, ascending, by cyclic Jacobi.
pub fn symmetric_eigenvalues(s: &Matrix) -> Result<Vec<f64>, LinalgError> {
    require_symmetric(s, Tolerances::default().symmetry)?;
    Ok(jacobi_eigenvalues(s))
}

/// `(λ_min, λ_max)` of a symmetric matrix.
pub fn symmetric_extremal_eigs(s: &Matrix) -> Result<(f64, f64), LinalgError> {
    symmetric_extremal_eigs_with(s, &Tolerances::default())
}

pub fn symmetric_extremal_eigs_with(
    s: &Matrix,
    tol: &Tolerances,
) -> Result<(f64, f64), LinalgError> {
    require_symmetric(s, tol.symmetry)?;
    let eigs = jacobi_eigenvalues(s);
    Ok((eigs[0], eigs[eigs.len() - 1]))
}

fn jacobi_eigenvalues(s: &Matrix) -> Vec<f64> {
    let n = s.rows();
    // Work on the exactly symmetric part.
    let mut a = s.symmetrized().to_rows();
    let frob = s.frobenius_norm();
    for _ in 0..JACOBI_MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| a[i][j] * a[i][j])
            .sum::<f64>()
            .sqrt();
        if off == 0.0 || off <= f64::EPSILON * 1e-2 * frob {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p][q];
                if apq == 0.0 {
                    continue;
                }
                let theta = (a[q][q] - a[p][p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for row in a.iter_mut() {
                    let (akp, akq) = (row[p], row[q]);
                    row[p] = c * akp - s * akq;
                    row[q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let (apk, aqk) = (a[p][k], a[q][k]);
                    a[p][k] = c * apk - s * aqk;
                    a[q][k] = s * apk + c * aqk;
                }
                a[p][q] = 0.0;
                a[q][p] = 0.0;
            }
        }
    }
    let mut eigs: Vec<f64> = (0..n).map(|i| a[i][i]).collect();
    eigs.sort_by(f64::total_cmp);
    eigs
}

/// Spectral norm `sup_{|x|=1} |m x|`.
pub fn induced_norm(m: &Matrix) -> f64 {
    let mt = m.transpose();
    let gram = if m.rows() < m.cols() {
        m.matmul(&mt)
    } else {
        mt.matmul(m)
    };
    let eigs = jacobi_eigenvalues(&gram);
    eigs[eigs.len() - 1].max(0.0).sqrt()
}

/// Coefficients of `det(λI − a)`, ascending, with the leading 1 last.
pub fn characteristic_polynomial(a: &Matrix) -> Result<Vec<f64>, LinalgError> {
    let n = require_square(a)?;
    // Faddeev–LeVerrier recursion.
    let mut coeffs = vec![0.0; n + 1];
    coeffs[n] = 1.0;
    let mut m = Matrix::identity(n);
    for k in 1..=n {
        let am = a.matmul(&m);
        let c = -am.trace() / k as f64;
        coeffs[n - k] = c;
        m = am;
        for i in 0..n {
            m[(i, i)] += c;
        }
    }
    Ok(coeffs)
}

/// Roots of a real polynomial given ascending coefficients (leading last).
pub fn poly_roots(coeffs: &[f64]) -> Vec<Complex64> {
    let mut coeffs = coeffs.to_vec();
    while coeffs.len() > 1 && coeffs[coeffs.len() - 1] == 0.0 {
        coeffs.pop();
    }
    let deg = coeffs.len() - 1;
    let lead = coeffs[deg];
    let monic: Vec<f64> = coeffs.iter().map(|c| c / lead).collect();
    match deg {
        0 => Vec::new(),
        1 => vec![Complex64::new(-monic[0], 0.0)],
        2 => quadratic_roots(monic[1], monic[0]),
        _ => aberth(&monic),
    }
}

/// Roots of `λ² + b λ + c`.
fn quadratic_roots(b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = -0.5 * (b + b.signum() * sq);
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0), Complex64::new(0.0, 0.0)];
        }
        let (r1, r2) = (q, c / q);
        let (lo, hi) = if r1 <= r2 { (r1, r2) } else { (r2, r1) };
        vec![Complex64::new(lo, 0.0), Complex64::new(hi, 0.0)]
    } else {
        let re = -0.5 * b;
        let im = 0.5 * (-disc).sqrt();
        vec![Complex64::new(re, -im), Complex64::new(re, im)]
    }
}

fn horner(monic: &[f64], z: Complex64) -> (Complex64, Complex64) {
    let mut p = Complex64::new(1.0, 0.0);
    let mut dp = Complex64::new(0.0, 0.0);
    for c in monic.iter().rev().skip(1) {
        dp = dp * z + p;
        p = p * z + c;
    }
    (p, dp)
}

/// Aberth–Ehrlich simultaneous iteration on a monic polynomial.
fn aberth(monic: &[f64]) -> Vec<Complex64> {
    let deg = monic.len() - 1;
    let radius = (0..deg)
        .map(|i| (monic[i].abs()).powf(1.0 / (deg - i) as f64))
        .fold(0.0, f64::max)
        .max(1e-3)
        * 2.0;
    let mut z: Vec<Complex64> = (0..deg)
        .map(|j| {
            Complex64::from_polar(
                radius,
                2.0 * std::f64::consts::PI * j as f64 / deg as f64 + 0.4,
            )
        })
        .collect();
    for _ in 0..ABERTH_MAX_ITERS {
        let mut largest = 0.0f64;
        for j in 0..deg {
            let (p, dp) = horner(monic, z[j]);
            if p.norm() == 0.0 {
                continue;
            }
            let ratio = p / dp;
            let repulsion: Complex64 = (0..deg)
                .filter(|&i| i != j)
                .map(|i| {
                    let d = z[j] - z[i];
                    if d.norm() == 0.0 {
                        Complex64::new(0.0, 0.0)
                    } else {
                        d.inv()
                    }
                })
                .sum();
            let w = ratio / (Complex64::new(1.0, 0.0) - ratio * repulsion);
            if w.is_finite() {
                z[j] -= w;
                largest = largest.max(w.norm() / z[j].norm().max(1.0));
            }
        }
        if largest <= 4.0 * f64::EPSILON {
            break;
        }
    }
    for r in z.iter_mut() {
        if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    z.sort_by(|a, b| a.re.total_cmp(&b.re).then(a.im.total_cmp(&b.im)));
    z
}

/// Eigenvalues of a general square matrix via its characteristic polynomial.
pub fn eigenvalues(a: &Matrix) -> Result<Vec<Complex64>, LinalgError> {
    let n = require_square(a)?;
    if n == 1 {
        return Ok(vec![Complex64::new(a[(0, 0)], 0.0)]);
    }
    Ok(poly_roots(&characteristic_polynomial(a)?))
}

/// `Ok(max Re λ)` if every eigenvalue has real part below `-margin`,
/// `Err(NotHurwitz)` otherwise.
pub fn is_hurwitz(a: &Matrix, margin: f64) -> Result<f64, LinalgError> {
    let max_real = eigenvalues(a)?
        .iter()
        .map(|l| l.re)
        .fold(f64::NEG_INFINITY, f64::max);
    if max_real >= -margin {
        Err(LinalgError::NotHurwitz { max_real })
    } else {
        Ok(max_real)
    }
}

/// Spectral radius, and whether it is below `1 - margin`.
pub fn is_schur(a: &Matrix, margin: f64) -> Result<(bool, f64), LinalgError> {
    let radius = eigenvalues(a)?.iter().map(|l| l.norm()).fold(0.0, f64::max);
    Ok((radius < 1.0 - margin, radius))
}

/// Smallest achievable maximum pairing distance between two multisets of
/// complex numbers. Exact for up to 8 entries, greedy beyond.
pub fn spectrum_distance(a: &[Complex64], b: &[Complex64]) -> f64 {
    if a.len() != b.len() {
        return f64::INFINITY;
    }
    let n = a.len();
    if n == 0 {
        return 0.0;
    }
    if n <= 8 {
        let mut perm: Vec<usize> = (0..n).collect();
        let mut best = f64::INFINITY;
        permute(&mut perm, 0, &mut |p| {
            let worst = p
                .iter()
                .enumerate()
                .map(|(i, &j)| (a[i] - b[j]).norm())
                .fold(0.0, f64::max);
            best = best.min(worst);
        });
        best
    } else {
        let mut used = vec![false; n];
        let mut worst = 0.0f64;
        for ai in a {
            let (j, d) = b
                .iter()
                .enumerate()
                .filter(|(j, _)| !used[*j])
                .map(|(j, bj)| (j, (ai - bj).norm()))
                .fold((usize::MAX, f64::INFINITY), |best, cur| {
                    if cur.1 < best.1 {
                        cur
                    } else {
                        best
                    }
                });
            used[j] = true;
            worst = worst.max(d);
        }
        worst
    }
}

fn permute(p: &mut Vec<usize>, k: usize, visit: &mut dyn FnMut(&[usize])) {
    if k == p.len() {
        visit(p);
        return;
    }
    for i in k..p.len() {
        p.swap(k, i);
        permute(p, k + 1, visit);
        p.swap(k, i);
    }
}

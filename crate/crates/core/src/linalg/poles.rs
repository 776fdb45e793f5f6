use num_complex::Complex64;

use super::{rank, require_square, solve_linear, LinalgError, Matrix, Tolerances, Vector};

/// Rows `cᵀ, cᵀA, …, cᵀAⁿ⁻¹`.
pub fn observability_matrix(a: &Matrix, c: &[f64]) -> Result<Matrix, LinalgError> {
    let n = require_square(a)?;
    if c.len() != n {
        return Err(LinalgError::DimensionMismatch(format!(
            "c has {} entries, A is {n}x{n}",
            c.len()
        )));
    }
    let mut rows = Vec::with_capacity(n);
    let mut row = c.to_vec();
    for _ in 0..n {
        let next = a.left_mul_vec(&row);
        rows.push(row);
        row = next;
    }
    Matrix::from_rows(&rows)
}

/// Real monic polynomial `Π (λ − r_i)`, ascending coefficients. Fails if the
/// roots are not closed under conjugation.
pub fn poly_from_roots(roots: &[Complex64]) -> Result<Vec<f64>, LinalgError> {
    if roots.iter().any(|r| !r.is_finite()) {
        return Err(LinalgError::InvalidTargets("non-finite target".into()));
    }
    let mut coeffs = vec![Complex64::new(1.0, 0.0)];
    for r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); coeffs.len() + 1];
        for (i, c) in coeffs.iter().enumerate() {
            next[i + 1] += c;
            next[i] -= c * r;
        }
        coeffs = next;
    }
    let scale = coeffs.iter().map(|c| c.norm()).fold(1.0, f64::max);
    if coeffs.iter().any(|c| c.im.abs() > 1e-9 * scale) {
        return Err(LinalgError::InvalidTargets(
            "targets are not closed under conjugation".into(),
        ));
    }
    Ok(coeffs.iter().map(|c| c.re).collect())
}

/// Gain `k` with `eig(a + k·cᵀ) = targets` (continuous-time observer form).
pub fn place_poles_continuous(
    a: &Matrix,
    c: &[f64],
    targets: &[Complex64],
) -> Result<Vector, LinalgError> {
    place_poles_with(a, c, targets, &Tolerances::default())
}

/// Gain `L` with `eig(ad + L·cᵀ) = targets`; every target must lie in the
/// open unit disk.
pub fn place_poles_discrete(
    ad: &Matrix,
    c: &[f64],
    targets: &[Complex64],
) -> Result<Vector, LinalgError> {
    place_poles_discrete_with(ad, c, targets, &Tolerances::default())
}

pub fn place_poles_discrete_with(
    ad: &Matrix,
    c: &[f64],
    targets: &[Complex64],
    tol: &Tolerances,
) -> Result<Vector, LinalgError> {
    if let Some(bad) = targets.iter().find(|t| t.norm() >= 1.0) {
        return Err(LinalgError::InvalidTargets(format!(
            "target {bad} is not inside the unit disk"
        )));
    }
    place_poles_with(ad, c, targets, tol)
}

/// Ackermann's formula in observer form: `k = −φ(A)·O⁻¹·eₙ`, where `φ` is the
/// target characteristic polynomial and `O` the observability matrix.
pub fn place_poles_with(
    a: &Matrix,
    c: &[f64],
    targets: &[Complex64],
    tol: &Tolerances,
) -> Result<Vector, LinalgError> {
    let n = require_square(a)?;
    if targets.len() != n {
        return Err(LinalgError::InvalidTargets(format!(
            "expected {n} targets, got {}",
            targets.len()
        )));
    }
    let obs = observability_matrix(a, c)?;
    let r = rank(&obs, tol.rank);
    if r < n {
        return Err(LinalgError::NotObservable { rank: r, n });
    }
    let phi = poly_from_roots(targets)?;

    // φ(A) by Horner.
    let mut phi_a = Matrix::identity(n).scale(phi[n]);
    for coeff in phi[..n].iter().rev() {
        phi_a = phi_a.matmul(a).add(&Matrix::identity(n).scale(*coeff));
    }
    let mut e_last = vec![0.0; n];
    e_last[n - 1] = 1.0;
    let q = solve_linear(&obs, &e_last).map_err(|_| LinalgError::NotObservable { rank: r, n })?;
    let k: Vec<f64> = phi_a.mul_vec(&q).into_iter().map(|v| -v).collect();
    Vector::new(k)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{eigenvalues, expm, spectrum_distance};

    fn real(values: &[f64]) -> Vec<Complex64> {
        values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    #[test]
    fn oscillator_double_pole() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.0, 0.0]]).unwrap();
        let k = place_poles_continuous(&a, &[1.0, 0.0], &real(&[-2.0, -2.0])).unwrap();
        assert!((k[0] + 4.0).abs() < 1e-14 && k[1].abs() < 1e-14, "{k:?}");
    }

    #[test]
    fn scalar_cases() {
        let a = Matrix::from_rows(&[[0.0]]).unwrap();
        let k = place_poles_continuous(&a, &[1.0], &real(&[-1.0])).unwrap();
        assert_eq!(k.as_slice(), &[-1.0]);
        let ad = Matrix::from_rows(&[[0.5]]).unwrap();
        let l = place_poles_discrete(&ad, &[1.0], &real(&[0.0])).unwrap();
        assert_eq!(l.as_slice(), &[-0.5]);
    }

    #[test]
    fn chain_integrator_three_states() {
        let a = Matrix::from_rows(&[[0.0, 1.0, 0.0], [0.0, 0.0, 1.0], [0.0, 0.0, 0.0]]).unwrap();
        let c = [1.0, 0.0, 0.0];
        let targets = real(&[-1.0, -2.0, -3.0]);
        let k = place_poles_continuous(&a, &c, &targets).unwrap();
        let closed = a.add(&Matrix::outer(&k, &c));
        assert!(spectrum_distance(&eigenvalues(&closed).unwrap(), &targets) < 1e-8);
    }

    #[test]
    fn discrete_oscillator_gain_matches_reference() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.0, 0.0]]).unwrap();
        let ad = expm(&a, 0.075).unwrap();
        let l = place_poles_discrete(&ad, &[1.0, 0.0], &real(&[0.8, 0.8])).unwrap();
        assert!(
            (l[0] + 0.37754).abs() < 1e-4 && (l[1] + 0.17804).abs() < 1e-4,
            "{l:?}"
        );
    }

    #[test]
    fn rejects_unobservable_and_bad_targets() {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.0, 0.0]]).unwrap();
        let ad = expm(&a, std::f64::consts::FRAC_PI_2).unwrap();
        assert!(matches!(
            place_poles_discrete(&ad, &[1.0, 0.0], &real(&[0.5, 0.5])),
            Err(LinalgError::NotObservable { rank: 1, n: 2 })
        ));
        assert!(matches!(
            place_poles_discrete(&ad, &[1.0, 0.0], &real(&[1.5, 0.5])),
            Err(LinalgError::InvalidTargets(_))
        ));
        let lonely = [Complex64::new(-1.0, 1.0), Complex64::new(-2.0, 0.0)];
        assert!(matches!(
            place_poles_continuous(&a, &[1.0, 0.0], &lonely),
            Err(LinalgError::InvalidTargets(_))
        ));
        assert!(matches!(
            place_poles_continuous(&a, &[1.0, 0.0], &real(&[-1.0])),
            Err(LinalgError::InvalidTargets(_))
        ));
    }
}

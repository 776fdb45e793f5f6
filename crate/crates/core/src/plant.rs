//! Continuous-time plants `ẋ = f(x)`, `y = h(x)` together with the output
//! rate `L_f h(x) = ∇h(x)·f(x)` used by the inter-sample predictor.

use std::fmt;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::linalg::{dot, expm, induced_norm, norm, LinalgError, Matrix, Vector};
use crate::sim::integrate::{integrate_segment, IntegrateError};

/// `ℝⁿ → ℝⁿ`.
pub type VectorField = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;
/// `ℝᵐ → ℝ`.
pub type ScalarMap = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

const ORIGIN_TOL: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum PlantError {
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("{what} does not vanish at the origin (value {value:e})")]
    NonZeroAtOrigin { what: String, value: f64 },
    #[error("component f{component} has sampled Lipschitz quotient {quotient} above declared L = {declared}")]
    LipschitzViolated {
        component: usize,
        quotient: f64,
        declared: f64,
    },
    #[error("invalid Lipschitz constant {0}")]
    InvalidLipschitz(f64),
    #[error("operation requires a {expected} plant")]
    WrongKind { expected: &'static str },
    #[error(transparent)]
    Linalg(#[from] LinalgError),
    #[error(transparent)]
    Integrate(#[from] IntegrateError),
}

/// Sampling parameters for the Lipschitz spot check.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LipschitzCheck {
    pub pairs: usize,
    /// Points are drawn from the box `|x_i| ≤ half_width`.
    pub half_width: f64,
    pub seed: u64,
}

impl Default for LipschitzCheck {
    fn default() -> Self {
        Self {
            pairs: 10_000,
            half_width: 1e3,
            seed: 0x5eed_0b5e,
        }
    }
}

#[derive(Clone)]
pub enum PlantKind {
    /// `ẋ_i = f_i(x_1..x_i) + x_{i+1}`, `y = x_1`.
    Triangular {
        lipschitz: f64,
        components: Vec<ScalarMap>,
    },
    /// `ẋ = A x`, `y = cᵀ x`.
    Linear { a: Matrix, c: Vector },
    /// Arbitrary maps; hypothesis (H) is assumed, not checked.
    Generic,
}

impl fmt::Debug for PlantKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Triangular {
                lipschitz,
                components,
            } => f
                .debug_struct("Triangular")
                .field("lipschitz", lipschitz)
                .field("components", &components.len())
                .finish(),
            Self::Linear { a, c } => f
                .debug_struct("Linear")
                .field("a", a)
                .field("c", c)
                .finish(),
            Self::Generic => f.write_str("Generic"),
        }
    }
}

/// An autonomous single-output plant. Immutable and cheap to clone.
#[derive(Clone)]
pub struct Plant {
    n: usize,
    f: VectorField,
    h: ScalarMap,
    output_rate: ScalarMap,
    kind: PlantKind,
}

impl fmt::Debug for Plant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("Plant")
            .field("n", &self.n)
            .field("kind", &self.kind)
            .finish()
    }
}

impl Plant {
    /// Triangular globally Lipschitz plant. `components[i]` receives the
    /// prefix `x_1..x_{i+1}`, so the triangular structure holds by construction.
    pub fn triangular(components: Vec<ScalarMap>, lipschitz: f64) -> Result<Self, PlantError> {
        Self::triangular_with(components, lipschitz, &LipschitzCheck::default())
    }

    pub fn triangular_with(
        components: Vec<ScalarMap>,
        lipschitz: f64,
        check: &LipschitzCheck,
    ) -> Result<Self, PlantError> {
        let n = components.len();
        if n == 0 {
            return Err(PlantError::DimensionMismatch(
                "triangular plant needs at least one component".into(),
            ));
        }
        if !(lipschitz >= 0.0) || !lipschitz.is_finite() {
            return Err(PlantError::InvalidLipschitz(lipschitz));
        }
        let origin = vec![0.0; n];
        for (i, fi) in components.iter().enumerate() {
            let value = fi(&origin[..=i]);
            if value.abs() > ORIGIN_TOL {
                return Err(PlantError::NonZeroAtOrigin {
                    what: format!("f{}", i + 1),
                    value,
                });
            }
        }
        check_lipschitz(&components, lipschitz, check)?;

        let comps = components.clone();
        let f: VectorField = Arc::new(move |x: &[f64]| {
            (0..n)
                .map(|i| comps[i](&x[..=i]) + if i + 1 < n { x[i + 1] } else { 0.0 })
                .collect()
        });
        let h: ScalarMap = Arc::new(|x: &[f64]| x[0]);
        let f1 = components[0].clone();
        let output_rate: ScalarMap =
            Arc::new(move |x: &[f64]| f1(&x[..1]) + if x.len() > 1 { x[1] } else { 0.0 });
        Ok(Self {
            n,
            f,
            h,
            output_rate,
            kind: PlantKind::Triangular {
                lipschitz,
                components,
            },
        })
    }

    pub fn linear(a: Matrix, c: Vector) -> Result<Self, PlantError> {
        if !a.is_square() || a.rows() != c.dim() {
            return Err(PlantError::DimensionMismatch(format!(
                "A is {}x{}, c has {} entries",
                a.rows(),
                a.cols(),
                c.dim()
            )));
        }
        let n = c.dim();
        let ca = a.left_mul_vec(&c);
        let (a_f, c_h) = (a.clone(), c.clone());
        let f: VectorField = Arc::new(move |x: &[f64]| a_f.mul_vec(x));
        let h: ScalarMap = Arc::new(move |x: &[f64]| dot(&c_h, x));
        let output_rate: ScalarMap = Arc::new(move |x: &[f64]| dot(&ca, x));
        Ok(Self {
            n,
            f,
            h,
            output_rate,
            kind: PlantKind::Linear { a, c },
        })
    }

    /// User-supplied maps. Only `f(0) = 0` and `h(0) = 0` are checked.
    pub fn generic(
        n: usize,
        f: VectorField,
        h: ScalarMap,
        output_rate: ScalarMap,
    ) -> Result<Self, PlantError> {
        if n == 0 {
            return Err(PlantError::DimensionMismatch(
                "plant dimension must be positive".into(),
            ));
        }
        let origin = vec![0.0; n];
        let f0 = f(&origin);
        if f0.len() != n {
            return Err(PlantError::DimensionMismatch(format!(
                "f returns {} entries, expected {n}",
                f0.len()
            )));
        }
        let worst = f0.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > ORIGIN_TOL {
            return Err(PlantError::NonZeroAtOrigin {
                what: "f".into(),
                value: worst,
            });
        }
        let h0 = h(&origin);
        if h0.abs() > ORIGIN_TOL {
            return Err(PlantError::NonZeroAtOrigin {
                what: "h".into(),
                value: h0,
            });
        }
        Ok(Self {
            n,
            f,
            h,
            output_rate,
            kind: PlantKind::Generic,
        })
    }

    /// `ẋ₁ = x₂`, `ẋ₂ = −4x₁`, `y = x₁`.
    pub fn oscillator() -> Self {
        let a = Matrix::from_rows(&[[0.0, 1.0], [-4.0, 0.0]]).expect("static matrix");
        let c = Vector::new(vec![1.0, 0.0]).expect("static vector");
        Self::linear(a, c).expect("oscillator is well formed")
    }

    /// `ẋ₁ = x₂`, `ẋ₂ = 0`, as a triangular plant with `L = 0`.
    pub fn double_integrator() -> Self {
        let zero: ScalarMap = Arc::new(|_: &[f64]| 0.0);
        Self::triangular(vec![zero.clone(), zero], 0.0).expect("double integrator is well formed")
    }

    /// `ẋ₁ = sin(x₁) + x₂`, `ẋ₂ = −x₁`, `y = x₁`, with `L = 1`.
    pub fn sin_triangular() -> Self {
        let f1: ScalarMap = Arc::new(|x: &[f64]| x[0].sin());
        let f2: ScalarMap = Arc::new(|x: &[f64]| -x[0]);
        Self::triangular(vec![f1, f2], 1.0).expect("sin-triangular plant is well formed")
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn kind(&self) -> &PlantKind {
        &self.kind
    }

    pub fn f(&self, x: &[f64]) -> Vec<f64> {
        (self.f)(x)
    }

    pub fn h(&self, x: &[f64]) -> f64 {
        (self.h)(x)
    }

    /// `L_f h(x)`.
    pub fn output_rate(&self, x: &[f64]) -> f64 {
        (self.output_rate)(x)
    }

    pub fn vector_field(&self) -> &VectorField {
        &self.f
    }

    pub fn output_map(&self) -> &ScalarMap {
        &self.h
    }

    pub fn output_rate_map(&self) -> &ScalarMap {
        &self.output_rate
    }

    pub fn lipschitz(&self) -> Option<f64> {
        match &self.kind {
            PlantKind::Triangular { lipschitz, .. } => Some(*lipschitz),
            _ => None,
        }
    }

    pub fn linear_pair(&self) -> Option<(&Matrix, &Vector)> {
        match &self.kind {
            PlantKind::Linear { a, c } => Some((a, c)),
            _ => None,
        }
    }

    /// Triangular components `f_1..f_n`, if this is a triangular plant.
    pub fn components(&self) -> Option<&[ScalarMap]> {
        match &self.kind {
            PlantKind::Triangular { components, .. } => Some(components),
            _ => None,
        }
    }

    /// Growth rate `c = nL + n − 1` of the bound `|x(t)| ≤ exp(ct)|x₀|`.
    pub fn growth_rate(&self) -> Result<f64, PlantError> {
        let l = self.lipschitz().ok_or(PlantError::WrongKind {
            expected: "triangular",
        })?;
        let n = self.n as f64;
        Ok(n * l + n - 1.0)
    }

    /// Simulates from `x0` and checks `|x(t)| ≤ exp(ct)|x₀|·(1 + 1e−6)` at
    /// every step.
    pub fn growth_bound_check(
        &self,
        x0: &[f64],
        horizon: f64,
        step: f64,
    ) -> Result<bool, PlantError> {
        let c = self.growth_rate()?;
        if x0.len() != self.n {
            return Err(PlantError::DimensionMismatch(format!(
                "x0 has {} entries, expected {}",
                x0.len(),
                self.n
            )));
        }
        let seg = integrate_segment(|_, x| self.f(x), x0, 0.0, horizon, step)?;
        let x0_norm = norm(x0);
        Ok(seg
            .times
            .iter()
            .zip(&seg.states)
            .all(|(t, x)| norm(x) <= (c * t).exp() * x0_norm * (1.0 + 1e-6)))
    }

    /// `|exp(A t)|` for linear plants: the tight growth factor of `|x(t)|/|x₀|`.
    pub fn linear_growth_factor(&self, t: f64) -> Result<f64, PlantError> {
        let (a, _) = self
            .linear_pair()
            .ok_or(PlantError::WrongKind { expected: "linear" })?;
        Ok(induced_norm(&expm(a, t)?))
    }
}

fn check_lipschitz(
    components: &[ScalarMap],
    declared: f64,
    check: &LipschitzCheck,
) -> Result<(), PlantError> {
    let n = components.len();
    let mut rng = ChaCha8Rng::seed_from_u64(check.seed);
    let bound = declared * (1.0 + 1e-6);
    let mut x = vec![0.0; n];
    let mut z = vec![0.0; n];
    for _ in 0..check.pairs {
        // Separation spans six decades so both local slopes and far-apart
        // pairs are exercised.
        let separation = 10f64.powf(rng.random_range(-3.0..3.0));
        for i in 0..n {
            x[i] = rng.random_range(-check.half_width..=check.half_width);
            z[i] = x[i] + separation * rng.random_range(-1.0..=1.0);
        }
        for (i, fi) in components.iter().enumerate() {
            let dist = norm(
                &x[..=i]
                    .iter()
                    .zip(&z[..=i])
                    .map(|(a, b)| a - b)
                    .collect::<Vec<_>>(),
            );
            if dist == 0.0 {
                continue;
            }
            let quotient = (fi(&x[..=i]) - fi(&z[..=i])).abs() / dist;
            if quotient > bound {
                return Err(PlantError::LipschitzViolated {
                    component: i + 1,
                    quotient,
                    declared,
                });
            }
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::PI;

    #[test]
    fn sin_triangular_output_rate() {
        let p = Plant::sin_triangular();
        assert!((p.output_rate(&[PI, 2.0]) - 2.0).abs() < 1e-15);
        assert_eq!(p.f(&[0.0, 1.0]), vec![1.0, 0.0]);
        assert_eq!(p.h(&[0.3, 9.0]), 0.3);
        assert_eq!(p.lipschitz(), Some(1.0));
    }

    #[test]
    fn double_integrator_rate_is_second_state() {
        let p = Plant::double_integrator();
        assert_eq!(p.output_rate(&[5.0, -1.5]), -1.5);
        assert_eq!(p.growth_rate().unwrap(), 1.0);
    }

    #[test]
    fn square_nonlinearity_rejected() {
        let f1: ScalarMap = Arc::new(|x: &[f64]| x[0] * x[0]);
        let f2: ScalarMap = Arc::new(|_: &[f64]| 0.0);
        for l in [1.0, 100.0, 1e3] {
            let err = Plant::triangular(vec![f1.clone(), f2.clone()], l).unwrap_err();
            assert!(
                matches!(err, PlantError::LipschitzViolated { component: 1, .. }),
                "L = {l}: {err}"
            );
        }
    }

    #[test]
    fn origin_must_be_equilibrium() {
        let f1: ScalarMap = Arc::new(|x: &[f64]| x[0].cos());
        assert!(matches!(
            Plant::triangular(vec![f1], 1.0),
            Err(PlantError::NonZeroAtOrigin { .. })
        ));
        let f: VectorField = Arc::new(|x: &[f64]| x.to_vec());
        let h: ScalarMap = Arc::new(|x: &[f64]| x[0] + 1.0);
        let rate: ScalarMap = Arc::new(|x: &[f64]| x[0]);
        assert!(matches!(
            Plant::generic(1, f, h, rate),
            Err(PlantError::NonZeroAtOrigin { .. })
        ));
    }

    #[test]
    fn oscillator_maps() {
        let p = Plant::oscillator();
        assert_eq!(p.output_rate(&[0.7, -3.0]), -3.0);
        assert_eq!(p.h(&[0.0, 2.0]), 0.0);
        assert_eq!(p.f(&[1.0, 2.0]), vec![2.0, -4.0]);
        assert!(p.growth_rate().is_err());
        assert!((p.linear_growth_factor(0.0).unwrap() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn zero_linear_plant_has_zero_rate() {
        let p = Plant::linear(Matrix::zeros(2, 2), Vector::new(vec![1.0, 0.0]).unwrap()).unwrap();
        assert_eq!(p.output_rate(&[3.0, 4.0]), 0.0);
    }

    #[test]
    fn linear_dimension_mismatch() {
        let err =
            Plant::linear(Matrix::identity(3), Vector::new(vec![1.0, 0.0]).unwrap()).unwrap_err();
        assert!(matches!(err, PlantError::DimensionMismatch(_)));
    }

    #[test]
    fn growth_bound_examples() {
        let di = Plant::double_integrator();
        assert!(di.growth_bound_check(&[1.0, 1.0], 2.0, 1e-3).unwrap());
        assert!(di.growth_bound_check(&[0.0, 0.0], 2.0, 1e-3).unwrap());
        let s = Plant::sin_triangular();
        assert!(s.growth_bound_check(&[3.0, -1.0], 5.0, 1e-3).unwrap());
        assert!(Plant::oscillator()
            .growth_bound_check(&[1.0, 0.0], 1.0, 0.01)
            .is_err());
    }
}

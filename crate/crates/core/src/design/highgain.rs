use std::sync::Arc;

use crate::linalg::{
    induced_norm, is_hurwitz, place_poles_continuous, solve_lyapunov, symmetric_eigenvalues,
    symmetric_extremal_eigs, Complex64, LinalgError, Matrix, Tolerances, Vector,
};
use crate::plant::{Plant, ScalarMap};

use super::{ContinuousObserver, DesignError, EstimateMap, ObserverFlow, SamplingBound};

/// Inputs of the high-gain design.
#[derive(Debug, Clone, PartialEq)]
pub struct HighGainSpec {
    /// Target spectrum of `A + k cᵀ`.
    pub poles: Vec<Complex64>,
    pub mu: f64,
    /// Defaults to the smallest certified value.
    pub theta: Option<f64>,
}

#[derive(Debug, Clone)]
pub struct HighGainDesign {
    pub observer: ContinuousObserver,
    pub gain: Vector,
    pub theta: f64,
    pub theta_bound: f64,
    pub p: Matrix,
    pub p_norm: f64,
    pub mu: f64,
    pub k1: f64,
    pub k2: f64,
    pub lipschitz: f64,
    pub mismatch: f64,
    /// λ_max of `P(A + kcᵀ) + (A + kcᵀ)ᵀP + 2μI`.
    pub lyapunov_margin: f64,
}

impl HighGainDesign {
    pub fn n(&self) -> usize {
        self.gain.dim()
    }

    pub fn max_sampling_period(&self) -> SamplingBound {
        SamplingBound::from_mismatch(self.mismatch)
    }

    /// `V(e) = eᵀ Δ⁻¹ P Δ⁻¹ e` with `Δ = diag(θ, θ², …, θⁿ)`.
    pub fn lyapunov_value(&self, e: &[f64]) -> f64 {
        let scaled: Vec<f64> = e
            .iter()
            .enumerate()
            .map(|(i, v)| v / self.theta.powi(i as i32 + 1))
            .collect();
        let pe = self.p.mul_vec(&scaled);
        scaled.iter().zip(&pe).map(|(a, b)| a * b).sum()
    }

    /// Guaranteed exponential decay rate `θμ/|P|` of `V` without noise.
    pub fn decay_rate(&self) -> f64 {
        self.theta * self.mu / self.p_norm
    }

    /// `2θⁿ⁻¹ |P||k|/μ · √(K₂/K₁)`.
    pub fn noise_gain(&self) -> f64 {
        2.0 * self.theta.powi(self.n() as i32 - 1) * self.p_norm * self.gain.norm() / self.mu
            * (self.k2 / self.k1).sqrt()
    }
}

/// The chain-of-integrators pair: ones on the superdiagonal and `c = e₁`.
pub fn chain_pair(n: usize) -> (Matrix, Vector) {
    let mut a = Matrix::zeros(n, n);
    for i in 0..n.saturating_sub(1) {
        a[(i, i + 1)] = 1.0;
    }
    (a, Vector::unit(n, 0))
}

pub fn design_highgain(plant: &Plant, spec: &HighGainSpec) -> Result<HighGainDesign, DesignError> {
    let components = plant
        .components()
        .ok_or(DesignError::WrongPlantKind {
            expected: "triangular",
        })?
        .to_vec();
    let lipschitz = plant.lipschitz().unwrap_or_default();
    if !(spec.mu > 0.0) || !spec.mu.is_finite() {
        return Err(DesignError::InvalidParameter(format!(
            "mu must be positive, got {}",
            spec.mu
        )));
    }
    let n = plant.dim();
    if let Some(bad) = spec
        .poles
        .iter()
        .find(|p| p.re >= -Tolerances::default().hurwitz_margin)
    {
        return Err(DesignError::Linalg(LinalgError::NotHurwitz {
            max_real: bad.re,
        }));
    }
    let (a, c) = chain_pair(n);
    let gain = place_poles_continuous(&a, &c, &spec.poles)?;
    let a_cl = a.add(&Matrix::outer(&gain, &c));
    is_hurwitz(&a_cl, Tolerances::default().hurwitz_margin)?;
    let q = Matrix::identity(n).scale(2.0 * spec.mu);
    let p = solve_lyapunov(&a_cl, &q)?;
    let (k1, k2) = symmetric_extremal_eigs(&p)?;
    if k1 <= 0.0 {
        return Err(DesignError::Linalg(LinalgError::NotPositiveDefinite {
            min_eig: k1,
        }));
    }
    let p_norm = induced_norm(&p);

    let residual = p
        .matmul(&a_cl)
        .add(&a_cl.transpose().matmul(&p))
        .add(&q)
        .symmetrized();
    let lyapunov_margin = *symmetric_eigenvalues(&residual)?
        .last()
        .expect("nonempty spectrum");
    if lyapunov_margin > Tolerances::default().eig * p_norm.max(1.0) {
        return Err(DesignError::DissipationFailed {
            mu: spec.mu,
            gamma: f64::NAN,
            max_eig: lyapunov_margin,
        });
    }

    let theta_bound = (2.0 * p_norm * lipschitz * (n as f64).sqrt() / spec.mu).max(1.0);
    let theta = match spec.theta {
        Some(t) if !(t >= theta_bound) => {
            return Err(DesignError::ThetaTooSmall {
                theta: t,
                bound: theta_bound,
            })
        }
        Some(t) => t,
        None => theta_bound,
    };
    let mismatch = 2.0 * (lipschitz + theta) * (p_norm * gain.norm() / spec.mu) * (k2 / k1).sqrt();

    let scaled_gain: Vec<f64> = gain
        .iter()
        .enumerate()
        .map(|(i, k)| theta.powi(i as i32 + 1) * k)
        .collect();
    let comps = components.clone();
    let flow: ObserverFlow = Arc::new(move |z: &[f64], y: f64| {
        let innovation = z[0] - y;
        (0..n)
            .map(|i| {
                comps[i](&z[..=i])
                    + if i + 1 < n { z[i + 1] } else { 0.0 }
                    + scaled_gain[i] * innovation
            })
            .collect()
    });
    let psi: EstimateMap = Arc::new(|z: &[f64]| z.to_vec());
    let rate = plant.output_rate_map().clone();
    let predictor: ScalarMap = Arc::new(move |z: &[f64]| rate(z));
    let observer = ContinuousObserver::new(n, n, flow, psi, predictor)?;

    Ok(HighGainDesign {
        observer,
        gain,
        theta,
        theta_bound,
        p,
        p_norm,
        mu: spec.mu,
        k1,
        k2,
        lipschitz,
        mismatch,
        lyapunov_margin,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn real(values: &[f64]) -> Vec<Complex64> {
        values.iter().map(|&v| Complex64::new(v, 0.0)).collect()
    }

    #[test]
    fn double_integrator_has_unit_theta() {
        let spec = HighGainSpec {
            poles: real(&[-1.0, -1.0]),
            mu: 1.0,
            theta: None,
        };
        let d = design_highgain(&Plant::double_integrator(), &spec).unwrap();
        assert!((d.gain[0] + 2.0).abs() < 1e-12 && (d.gain[1] + 1.0).abs() < 1e-12);
        assert_eq!(d.theta, 1.0);
        let expected = 2.0 * d.p_norm * d.gain.norm() * (d.k2 / d.k1).sqrt();
        assert!((d.mismatch - expected).abs() < 1e-12 * expected);
    }

    #[test]
    fn sin_triangular_reference_values() {
        let spec = HighGainSpec {
            poles: real(&[-2.0, -2.0]),
            mu: 1.0,
            theta: None,
        };
        let d = design_highgain(&Plant::sin_triangular(), &spec).unwrap();
        assert!((d.gain[0] + 4.0).abs() < 1e-12 && (d.gain[1] + 4.0).abs() < 1e-12);
        let want_p = Matrix::from_rows(&[[1.25, -1.0], [-1.0, 1.3125]]).unwrap();
        assert!(d.p.sub(&want_p).max_abs() < 1e-12);
        assert!((d.theta - 2.0 * d.p_norm * 2f64.sqrt()).abs() < 1e-12);
        assert!(d.lyapunov_margin <= 1e-9);
    }

    #[test]
    fn theta_override_checks() {
        let spec = HighGainSpec {
            poles: real(&[-1.0, -1.0]),
            mu: 1.0,
            theta: Some(0.5),
        };
        assert!(matches!(
            design_highgain(&Plant::double_integrator(), &spec),
            Err(DesignError::ThetaTooSmall { .. })
        ));
        let spec = HighGainSpec {
            theta: Some(3.0),
            ..spec
        };
        let hi = design_highgain(&Plant::double_integrator(), &spec).unwrap();
        let lo = design_highgain(
            &Plant::double_integrator(),
            &HighGainSpec {
                theta: None,
                ..spec
            },
        )
        .unwrap();
        assert!(hi.mismatch > lo.mismatch);
    }

    #[test]
    fn rejects_linear_plant_and_unstable_poles() {
        let spec = HighGainSpec {
            poles: real(&[-1.0, -1.0]),
            mu: 1.0,
            theta: None,
        };
        assert!(matches!(
            design_highgain(&Plant::oscillator(), &spec),
            Err(DesignError::WrongPlantKind { .. })
        ));
        let spec = HighGainSpec {
            poles: real(&[1.0, -1.0]),
            ..spec
        };
        assert!(matches!(
            design_highgain(&Plant::double_integrator(), &spec),
            Err(DesignError::Linalg(LinalgError::NotHurwitz { .. }))
        ));
    }

    #[test]
    fn observer_uses_scaled_gains() {
        let spec = HighGainSpec {
            poles: real(&[-1.0, -1.0]),
            mu: 1.0,
            theta: Some(2.0),
        };
        let d = design_highgain(&Plant::double_integrator(), &spec).unwrap();
        // z = (1, 0), y = 0: innovation 1, gains θk = (−4, −4).
        let dz = d.observer.flow(&[1.0, 0.0], 0.0);
        assert!(
            (dz[0] + 4.0).abs() < 1e-12 && (dz[1] + 4.0).abs() < 1e-12,
            "{dz:?}"
        );
        assert_eq!(d.observer.predictor_rate(&[1.0, 0.5]), 0.5);
    }
}

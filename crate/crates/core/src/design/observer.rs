use std::fmt;
use std::sync::Arc;

use crate::plant::ScalarMap;

use super::DesignError;

/// `(z, y) ↦ ż`.
pub type ObserverFlow = Arc<dyn Fn(&[f64], f64) -> Vec<f64> + Send + Sync>;
/// `z ↦ x̂`.
pub type EstimateMap = Arc<dyn Fn(&[f64]) -> Vec<f64> + Send + Sync>;

const ORIGIN_TOL: f64 = 1e-12;

/// A continuous-time observer `ż = F(z, y)`, `x̂ = Ψ(z)` plus the rate
/// `z ↦ L_f h(Ψ(z))` that drives the inter-sample output predictor.
#[derive(Clone)]
pub struct ContinuousObserver {
    k_dim: usize,
    n: usize,
    flow: ObserverFlow,
    psi: EstimateMap,
    predictor_rate: ScalarMap,
}

impl fmt::Debug for ContinuousObserver {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("ContinuousObserver")
            .field("k_dim", &self.k_dim)
            .field("n", &self.n)
            .finish()
    }
}

impl ContinuousObserver {
    /// `n` is the plant dimension (length of `Ψ(z)`). Checks `F(0, 0) = 0` and
    /// `Ψ(0) = 0`.
    pub fn new(
        k_dim: usize,
        n: usize,
        flow: ObserverFlow,
        psi: EstimateMap,
        predictor_rate: ScalarMap,
    ) -> Result<Self, DesignError> {
        if k_dim == 0 || n == 0 {
            return Err(DesignError::InvalidParameter(
                "observer and plant dimensions must be positive".into(),
            ));
        }
        let origin = vec![0.0; k_dim];
        let f0 = flow(&origin, 0.0);
        let psi0 = psi(&origin);
        if f0.len() != k_dim || psi0.len() != n {
            return Err(DesignError::InvalidParameter(format!(
                "F returns {} entries (expected {k_dim}), Psi returns {} (expected {n})",
                f0.len(),
                psi0.len()
            )));
        }
        let worst = f0.iter().chain(&psi0).fold(0.0f64, |m, v| m.max(v.abs()));
        if worst > ORIGIN_TOL {
            return Err(DesignError::ObserverNotAtOrigin(worst));
        }
        Ok(Self {
            k_dim,
            n,
            flow,
            psi,
            predictor_rate,
        })
    }

    pub fn k_dim(&self) -> usize {
        self.k_dim
    }

    pub fn plant_dim(&self) -> usize {
        self.n
    }

    pub fn flow(&self, z: &[f64], y: f64) -> Vec<f64> {
        (self.flow)(z, y)
    }

    pub fn estimate(&self, z: &[f64]) -> Vec<f64> {
        (self.psi)(z)
    }

    pub fn predictor_rate(&self, z: &[f64]) -> f64 {
        (self.predictor_rate)(z)
    }

    /// The same observer with the predictor frozen between samples, which
    /// turns the sampled-data scheme into a zero-order hold.
    pub fn with_zero_predictor(&self) -> Self {
        Self {
            predictor_rate: Arc::new(|_: &[f64]| 0.0),
            ..self.clone()
        }
    }
}

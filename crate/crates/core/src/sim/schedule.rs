use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ScheduleError {
    #[error("upper diameter must be positive and finite, got {0}")]
    InvalidDiameter(f64),
    #[error("horizon must be positive and finite, got {0}")]
    InvalidHorizon(f64),
    #[error("perturbation must be finite and non-negative, got {0}")]
    InvalidPerturbation(f64),
}

/// Where the per-interval perturbation `d_i` comes from.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Perturbation {
    Zero,
    Constant(f64),
    /// Independent draws from `[0, max]`.
    Uniform {
        max: f64,
        seed: u64,
    },
}

/// Sampling instants `τ_0 = 0 < τ_1 < …` with `τ_{i+1} = τ_i + r·exp(−d_i)`.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplingSchedule {
    instants: Vec<f64>,
    upper_diameter: f64,
    perturbation: Vec<f64>,
}

impl SamplingSchedule {
    pub fn uniform(r: f64, t_end: f64) -> Result<Self, ScheduleError> {
        generate_schedule(r, Perturbation::Zero, t_end)
    }

    /// Builds a schedule from an explicit perturbation log.
    pub fn from_perturbations(r: f64, d: &[f64]) -> Result<Self, ScheduleError> {
        check_diameter(r)?;
        let mut instants = Vec::with_capacity(d.len() + 1);
        instants.push(0.0);
        let mut tau = 0.0;
        for &di in d {
            if !(di >= 0.0) || !di.is_finite() {
                return Err(ScheduleError::InvalidPerturbation(di));
            }
            tau += r * (-di).exp();
            instants.push(tau);
        }
        Ok(Self {
            instants,
            upper_diameter: r,
            perturbation: d.to_vec(),
        })
    }

    pub fn instants(&self) -> &[f64] {
        &self.instants
    }

    pub fn upper_diameter(&self) -> f64 {
        self.upper_diameter
    }

    /// `d_i` for each generated interval `[τ_i, τ_{i+1})`.
    pub fn perturbation(&self) -> &[f64] {
        &self.perturbation
    }

    pub fn intervals(&self) -> usize {
        self.perturbation.len()
    }

    pub fn gaps(&self) -> impl Iterator<Item = f64> + '_ {
        self.instants.windows(2).map(|w| w[1] - w[0])
    }

    pub fn min_gap(&self) -> f64 {
        self.gaps().fold(f64::INFINITY, f64::min)
    }

    pub fn max_gap(&self) -> f64 {
        self.gaps().fold(0.0, f64::max)
    }

    pub fn last(&self) -> f64 {
        *self
            .instants
            .last()
            .expect("schedule always contains τ₀ = 0")
    }
}

fn check_diameter(r: f64) -> Result<(), ScheduleError> {
    if !(r > 0.0) || !r.is_finite() {
        return Err(ScheduleError::InvalidDiameter(r));
    }
    Ok(())
}

/// Instants from 0 until the first one at or beyond `t_end`.
pub fn generate_schedule(
    r: f64,
    source: Perturbation,
    t_end: f64,
) -> Result<SamplingSchedule, ScheduleError> {
    check_diameter(r)?;
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(ScheduleError::InvalidHorizon(t_end));
    }
    let mut rng = match source {
        Perturbation::Zero => None,
        Perturbation::Constant(d) => {
            if !(d >= 0.0) || !d.is_finite() {
                return Err(ScheduleError::InvalidPerturbation(d));
            }
            None
        }
        Perturbation::Uniform { max, seed } => {
            if !(max >= 0.0) || !max.is_finite() {
                return Err(ScheduleError::InvalidPerturbation(max));
            }
            Some(ChaCha8Rng::seed_from_u64(seed))
        }
    };
    let mut d = Vec::new();
    let mut tau = 0.0;
    while tau < t_end {
        let di = match (source, rng.as_mut()) {
            (Perturbation::Constant(c), _) => c,
            (Perturbation::Uniform { max, .. }, Some(rng)) if max > 0.0 => {
                rng.random_range(0.0..=max)
            }
            _ => 0.0,
        };
        tau += r * (-di).exp();
        d.push(di);
    }
    SamplingSchedule::from_perturbations(r, &d)
}

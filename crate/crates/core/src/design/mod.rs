//! Continuous-time observer designs and their sampled-data certificates.
//!
//! Every design exposes the predictor-mismatch constant `K`: the gain from
//! sup |v| to the steady mismatch between the predicted output rate and the
//! true one. Sampling with upper diameter `r` is certified when `r·K < 1`.

mod highgain;
mod linear;
mod observer;

use std::fmt;

use serde::{Serialize, Serializer};

use crate::linalg::{LinalgError, Matrix, Vector};

pub use highgain::{chain_pair, design_highgain, HighGainDesign, HighGainSpec};
pub use linear::{design_linear, dissipation_matrix, verify_dissipation, LinearDesign, LinearSpec};
pub use observer::{ContinuousObserver, EstimateMap, ObserverFlow};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DesignError {
    #[error("design requires a {expected} plant")]
    WrongPlantKind { expected: &'static str },
    #[error("theta = {theta} is below the certified lower bound {bound}")]
    ThetaTooSmall { theta: f64, bound: f64 },
    #[error("dissipation inequality fails for mu = {mu}, gamma = {gamma} (largest eigenvalue {max_eig:e})")]
    DissipationFailed { mu: f64, gamma: f64, max_eig: f64 },
    #[error("observer does not vanish at the origin (value {0:e})")]
    ObserverNotAtOrigin(f64),
    #[error("invalid parameter: {0}")]
    InvalidParameter(String),
    #[error(transparent)]
    Linalg(#[from] LinalgError),
}

/// Maximum certified sampling period `1/K`; unbounded when `K = 0`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SamplingBound {
    Bounded(f64),
    Unbounded,
}

impl SamplingBound {
    pub fn from_mismatch(k: f64) -> Self {
        if k > 0.0 {
            Self::Bounded(1.0 / k)
        } else {
            Self::Unbounded
        }
    }

    /// `r < r_max`.
    pub fn certifies(&self, r: f64) -> bool {
        match self {
            Self::Bounded(r_max) => r < *r_max,
            Self::Unbounded => true,
        }
    }

    pub fn value(&self) -> Option<f64> {
        match self {
            Self::Bounded(v) => Some(*v),
            Self::Unbounded => None,
        }
    }
}

impl fmt::Display for SamplingBound {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Bounded(v) => write!(f, "{v}"),
            Self::Unbounded => f.write_str("unbounded"),
        }
    }
}

impl Serialize for SamplingBound {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Self::Bounded(v) => s.serialize_f64(*v),
            Self::Unbounded => s.serialize_str("unbounded"),
        }
    }
}

/// Either of the two certified designs.
#[derive(Debug, Clone)]
pub enum Design {
    HighGain(HighGainDesign),
    Linear(LinearDesign),
}

impl Design {
    pub fn observer(&self) -> &ContinuousObserver {
        match self {
            Self::HighGain(d) => &d.observer,
            Self::Linear(d) => &d.observer,
        }
    }

    pub fn gain(&self) -> &Vector {
        match self {
            Self::HighGain(d) => &d.gain,
            Self::Linear(d) => &d.gain,
        }
    }

    pub fn lyap(&self) -> &Matrix {
        match self {
            Self::HighGain(d) => &d.p,
            Self::Linear(d) => &d.p,
        }
    }

    pub fn mu(&self) -> f64 {
        match self {
            Self::HighGain(d) => d.mu,
            Self::Linear(d) => d.mu,
        }
    }

    pub fn gamma(&self) -> Option<f64> {
        match self {
            Self::HighGain(_) => None,
            Self::Linear(d) => Some(d.gamma),
        }
    }

    pub fn theta(&self) -> Option<f64> {
        match self {
            Self::HighGain(d) => Some(d.theta),
            Self::Linear(_) => None,
        }
    }

    /// `(K₁, K₂)`, the extreme eigenvalues of `P`.
    pub fn eig_bounds(&self) -> (f64, f64) {
        match self {
            Self::HighGain(d) => (d.k1, d.k2),
            Self::Linear(d) => (d.k1, d.k2),
        }
    }

    pub fn mismatch_constant(&self) -> f64 {
        match self {
            Self::HighGain(d) => d.mismatch,
            Self::Linear(d) => d.mismatch,
        }
    }

    pub fn max_sampling_period(&self) -> SamplingBound {
        SamplingBound::from_mismatch(self.mismatch_constant())
    }

    /// Gain from sup |v| to the asymptotic state-estimation error of the
    /// continuous observer.
    pub fn noise_gain(&self) -> f64 {
        match self {
            Self::HighGain(d) => d.noise_gain(),
            Self::Linear(d) => d.noise_gain(),
        }
    }

    pub fn kind_name(&self) -> &'static str {
        match self {
            Self::HighGain(_) => "highgain",
            Self::Linear(_) => "linear",
        }
    }
}

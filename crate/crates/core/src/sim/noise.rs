use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Measurement error `v`, evaluated at sample index `i` (the instant `τ_i`).
#[derive(Debug, Clone, PartialEq)]
pub enum NoiseSignal {
    Zero,
    Constant(f64),
    /// Independent uniform draws in `[−bound, bound]`; sample `i` depends only
    /// on `(seed, i)`.
    UniformRandom {
        bound: f64,
        seed: u64,
    },
    /// Explicit samples, repeated cyclically.
    Custom(Vec<f64>),
}

impl NoiseSignal {
    pub fn sample(&self, i: usize) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(v) => *v,
            Self::UniformRandom { bound, seed } => {
                if *bound == 0.0 {
                    return 0.0;
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                rng.set_stream(i as u64);
                rng.random_range(-*bound..=*bound)
            }
            Self::Custom(samples) if samples.is_empty() => 0.0,
            Self::Custom(samples) => samples[i % samples.len()],
        }
    }

    /// `sup |v|` when known.
    pub fn bound(&self) -> f64 {
        match self {
            Self::Zero => 0.0,
            Self::Constant(v) => v.abs(),
            Self::UniformRandom { bound, .. } => bound.abs(),
            Self::Custom(samples) => samples.iter().fold(0.0, |m, v| m.max(v.abs())),
        }
    }

    /// A continuous-time signal holding sample `⌊t/hold⌋` on each cell of
    /// width `hold`; constant kinds ignore `hold`.
    pub fn held(&self, hold: f64) -> impl Fn(f64) -> f64 + '_ {
        move |t: f64| match self {
            Self::Zero => 0.0,
            Self::Constant(v) => *v,
            _ => self.sample((t / hold).floor().max(0.0) as usize),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.bound() == 0.0
    }
}

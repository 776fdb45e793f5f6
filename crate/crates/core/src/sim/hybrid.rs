use crate::design::ContinuousObserver;
use crate::plant::Plant;

use super::integrate::{integrate_segment, IntegrateError};
use super::{NoiseSignal, SamplingSchedule, ScheduleError};

/// Any state component beyond this magnitude is treated as divergence.
pub const DIVERGENCE_BOUND: f64 = 1e12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum SimError {
    #[error("integration step {step} exceeds the smallest sampling gap {min_gap}")]
    StepTooLarge { step: f64, min_gap: f64 },
    #[error("state diverged at t = {t}")]
    NonFiniteState {
        t: f64,
        partial: Box<HybridTrajectory>,
    },
    #[error("dimension mismatch: {0}")]
    DimensionMismatch(String),
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("schedule ends at {last} before the horizon {t_end}")]
    ScheduleTooShort { last: f64, t_end: f64 },
    #[error(transparent)]
    Schedule(#[from] ScheduleError),
}

impl SimError {
    /// The trajectory computed before divergence, if any.
    pub fn partial(&self) -> Option<&HybridTrajectory> {
        match self {
            Self::NonFiniteState { partial, .. } => Some(partial),
            _ => None,
        }
    }
}

/// Which sample the predictor is reset to at `τ_{i+1}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResetRule {
    /// `w(τ_{i+1}) = y(τ_{i+1}) + v(τ_{i+1})`.
    #[default]
    Fresh,
    /// `w(τ_{i+1}) = y(τ_i) + v(τ_i)`: the previous sample, one period late.
    Stale,
}

/// One reset of the predictor.
#[derive(Debug, Clone, PartialEq)]
pub struct JumpRecord {
    pub i: usize,
    pub tau: f64,
    pub gap: f64,
    pub d: f64,
    /// `h(x(τ_i))`.
    pub y: f64,
    /// `v(τ_i)`.
    pub v: f64,
    pub w_before: f64,
    pub w_after: f64,
}

/// Samples of `(x, z, w)` on the integration grid. At each reset instant the
/// grid holds two rows with the same time: the flow's endpoint and the
/// post-jump state (flagged by `is_jump`).
#[derive(Debug, Clone, PartialEq, Default)]
pub struct HybridTrajectory {
    pub times: Vec<f64>,
    pub x: Vec<Vec<f64>>,
    pub z: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    /// `Ψ(z) − x`.
    pub e: Vec<Vec<f64>>,
    pub is_jump: Vec<bool>,
    pub jumps: Vec<JumpRecord>,
}

impl HybridTrajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn plant_dim(&self) -> usize {
        self.x.first().map_or(0, Vec::len)
    }

    pub fn observer_dim(&self) -> usize {
        self.z.first().map_or(0, Vec::len)
    }

    pub fn push(&mut self, t: f64, x: Vec<f64>, z: Vec<f64>, w: f64, e: Vec<f64>, is_jump: bool) {
        self.times.push(t);
        self.x.push(x);
        self.z.push(z);
        self.w.push(w);
        self.e.push(e);
        self.is_jump.push(is_jump);
    }

    /// `e_j` over time, `j` zero-based.
    pub fn error_component(&self, j: usize) -> Vec<f64> {
        self.e.iter().map(|e| e[j]).collect()
    }

    pub fn error_norms(&self) -> Vec<f64> {
        self.e.iter().map(|e| crate::linalg::norm(e)).collect()
    }
}

/// Integration settings shared by all simulations.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimOptions {
    /// RK4 step; defaults to `min(r/20, 1e−3)`.
    pub step: Option<f64>,
    pub reset: ResetRule,
}

impl Default for SimOptions {
    fn default() -> Self {
        Self {
            step: None,
            reset: ResetRule::Fresh,
        }
    }
}

pub fn default_step(r: f64) -> f64 {
    (r / 20.0).min(1e-3)
}

/// Initial conditions of a simulation run.
#[derive(Debug, Clone, PartialEq)]
pub struct InitialState {
    pub x0: Vec<f64>,
    pub z0: Vec<f64>,
    pub w0: f64,
}

pub(crate) fn check_dims(
    plant: &Plant,
    observer: &ContinuousObserver,
    init: &InitialState,
) -> Result<(), SimError> {
    if observer.plant_dim() != plant.dim()
        || init.x0.len() != plant.dim()
        || init.z0.len() != observer.k_dim()
    {
        return Err(SimError::DimensionMismatch(format!(
            "plant n = {}, observer estimates {} states from {}, x0 has {}, z0 has {}",
            plant.dim(),
            observer.plant_dim(),
            observer.k_dim(),
            init.x0.len(),
            init.z0.len()
        )));
    }
    if init.x0.iter().chain(&init.z0).any(|v| !v.is_finite()) || !init.w0.is_finite() {
        return Err(SimError::InvalidArgument(
            "initial conditions must be finite".into(),
        ));
    }
    Ok(())
}

pub(crate) fn check_horizon(t_end: f64) -> Result<(), SimError> {
    if !(t_end > 0.0) || !t_end.is_finite() {
        return Err(SimError::InvalidArgument(format!(
            "horizon must be positive, got {t_end}"
        )));
    }
    Ok(())
}

pub(crate) fn check_step(step: f64) -> Result<(), SimError> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(SimError::InvalidArgument(format!(
            "step must be positive, got {step}"
        )));
    }
    Ok(())
}

/// Splits the stacked state `[x, z, w]`.
fn split(s: &[f64], n: usize, k: usize) -> (&[f64], &[f64], f64) {
    (&s[..n], &s[n..n + k], s[n + k])
}

fn diverged(s: &[f64]) -> bool {
    s.iter()
        .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
}

/// Simulates plant and sampled-data observer:
///
/// ```text
/// ẋ = f(x),  ż = F(z, w),  ẇ = L_f h(Ψ(z))      on [τ_i, τ_{i+1})
/// w(τ_{i+1}) = h(x(τ_{i+1})) + v(τ_{i+1})
/// ```
///
/// Each interval is integrated with fixed-step RK4 landing exactly on
/// `τ_{i+1}`. The run stops at `t_end`; a reset at `t_end` itself is applied.
pub fn simulate_sampled_data(
    plant: &Plant,
    observer: &ContinuousObserver,
    schedule: &SamplingSchedule,
    noise: &NoiseSignal,
    init: &InitialState,
    t_end: f64,
    options: &SimOptions,
) -> Result<HybridTrajectory, SimError> {
    check_dims(plant, observer, init)?;
    check_horizon(t_end)?;
    if schedule.last() < t_end {
        return Err(SimError::ScheduleTooShort {
            last: schedule.last(),
            t_end,
        });
    }
    let step = options
        .step
        .unwrap_or_else(|| default_step(schedule.upper_diameter()));
    check_step(step)?;
    let taus = schedule.instants();
    // Only gaps that are actually integrated matter; the last one may be cut
    // short by the horizon.
    let used = taus
        .iter()
        .position(|&t| t >= t_end)
        .unwrap_or(taus.len() - 1);
    let min_gap = taus[..=used]
        .windows(2)
        .map(|w| w[1] - w[0])
        .fold(f64::INFINITY, f64::min);
    if step > min_gap {
        return Err(SimError::StepTooLarge { step, min_gap });
    }

    let (n, k) = (plant.dim(), observer.k_dim());
    let rate = |_: f64, s: &[f64]| {
        let (x, z, w) = split(s, n, k);
        let mut out = plant.f(x);
        out.extend(observer.flow(z, w));
        out.push(observer.predictor_rate(z));
        out
    };
    let error = |x: &[f64], z: &[f64]| -> Vec<f64> {
        observer
            .estimate(z)
            .iter()
            .zip(x)
            .map(|(a, b)| a - b)
            .collect()
    };

    let mut traj = HybridTrajectory::default();
    let mut state: Vec<f64> = init
        .x0
        .iter()
        .chain(&init.z0)
        .copied()
        .chain([init.w0])
        .collect();
    traj.push(
        0.0,
        init.x0.clone(),
        init.z0.clone(),
        init.w0,
        error(&init.x0, &init.z0),
        false,
    );
    let mut previous_sample = (plant.h(&init.x0), noise.sample(0));

    for i in 0..taus.len() - 1 {
        let (t0, tau_next) = (taus[i], taus[i + 1]);
        let t1 = tau_next.min(t_end);
        let seg = match integrate_segment(rate, &state, t0, t1, step) {
            Ok(seg) => seg,
            Err(IntegrateError::NonFiniteState { t }) => {
                return Err(SimError::NonFiniteState {
                    t,
                    partial: Box::new(traj),
                })
            }
            Err(other) => return Err(SimError::InvalidArgument(other.to_string())),
        };
        for (t, s) in seg.times.iter().zip(&seg.states).skip(1) {
            if diverged(s) {
                return Err(SimError::NonFiniteState {
                    t: *t,
                    partial: Box::new(traj),
                });
            }
            let (x, z, w) = split(s, n, k);
            traj.push(*t, x.to_vec(), z.to_vec(), w, error(x, z), false);
        }
        state = seg.last().to_vec();
        if t1 < tau_next {
            break;
        }

        let (x, z, w_before) = split(&state, n, k);
        let y = plant.h(x);
        let v = noise.sample(i + 1);
        let w_after = match options.reset {
            ResetRule::Fresh => y + v,
            ResetRule::Stale => previous_sample.0 + previous_sample.1,
        };
        traj.jumps.push(JumpRecord {
            i: i + 1,
            tau: tau_next,
            gap: tau_next - t0,
            d: schedule.perturbation()[i],
            y,
            v,
            w_before,
            w_after,
        });
        traj.push(tau_next, x.to_vec(), z.to_vec(), w_after, error(x, z), true);
        previous_sample = (y, v);
        state[n + k] = w_after;
        if tau_next >= t_end {
            break;
        }
    }
    Ok(traj)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::design::{design_linear, LinearSpec};
    use crate::linalg::{Matrix, Vector};

    fn oscillator_observer() -> ContinuousObserver {
        let spec = LinearSpec {
            k: Vector::new(vec![-4.0, 0.0]).unwrap(),
            mu: Some(1.0),
            gamma: Some(64.0 / 3.0),
            p: Some(Matrix::from_rows(&[[2.5, -1.0], [-1.0, 0.5]]).unwrap()),
        };
        design_linear(&Plant::oscillator(), &spec).unwrap().observer
    }

    fn paper_init() -> InitialState {
        InitialState {
            x0: vec![0.0, 2.0],
            z0: vec![1.0, 1.0],
            w0: 0.0,
        }
    }

    #[test]
    fn jumps_apply_fresh_samples() {
        let plant = Plant::oscillator();
        let schedule = SamplingSchedule::uniform(0.081, 2.0).unwrap();
        let noise = NoiseSignal::UniformRandom {
            bound: 0.05,
            seed: 3,
        };
        let traj = simulate_sampled_data(
            &plant,
            &oscillator_observer(),
            &schedule,
            &noise,
            &paper_init(),
            2.0,
            &SimOptions::default(),
        )
        .unwrap();
        assert_eq!(traj.jumps.len(), 24);
        for j in &traj.jumps {
            assert_eq!(j.w_after, j.y + j.v);
            assert_eq!(j.v, noise.sample(j.i));
        }
        assert_eq!(*traj.times.last().unwrap(), 2.0);
        assert_eq!(traj.is_jump.iter().filter(|b| **b).count(), 24);
    }

    #[test]
    fn stale_reset_uses_previous_sample() {
        let plant = Plant::oscillator();
        let schedule = SamplingSchedule::uniform(0.1, 1.0).unwrap();
        let opts = SimOptions {
            reset: ResetRule::Stale,
            ..SimOptions::default()
        };
        let traj = simulate_sampled_data(
            &plant,
            &oscillator_observer(),
            &schedule,
            &NoiseSignal::Zero,
            &paper_init(),
            1.0,
            &opts,
        )
        .unwrap();
        assert_eq!(traj.jumps[0].w_after, plant.h(&[0.0, 2.0]));
        for pair in traj.jumps.windows(2) {
            assert_eq!(pair[1].w_after, pair[0].y);
        }
    }

    #[test]
    fn step_larger_than_gap_is_rejected() {
        let schedule = SamplingSchedule::uniform(0.01, 1.0).unwrap();
        let opts = SimOptions {
            step: Some(0.02),
            ..SimOptions::default()
        };
        let err = simulate_sampled_data(
            &Plant::oscillator(),
            &oscillator_observer(),
            &schedule,
            &NoiseSignal::Zero,
            &paper_init(),
            1.0,
            &opts,
        )
        .unwrap_err();
        assert!(matches!(err, SimError::StepTooLarge { .. }));
    }

    #[test]
    fn divergence_returns_partial_trajectory() {
        // ẋ = x grows past the divergence bound near t = 28.
        let plant = Plant::linear(Matrix::identity(1), Vector::new(vec![1.0]).unwrap()).unwrap();
        let spec = LinearSpec {
            k: Vector::new(vec![-2.0]).unwrap(),
            mu: None,
            gamma: None,
            p: None,
        };
        let observer = design_linear(&plant, &spec).unwrap().observer;
        let schedule = SamplingSchedule::uniform(0.1, 40.0).unwrap();
        let init = InitialState {
            x0: vec![1.0],
            z0: vec![0.0],
            w0: 0.0,
        };
        let err = simulate_sampled_data(
            &plant,
            &observer,
            &schedule,
            &NoiseSignal::Zero,
            &init,
            40.0,
            &SimOptions::default(),
        )
        .unwrap_err();
        let SimError::NonFiniteState { t, .. } = &err else {
            panic!("{err}")
        };
        assert!((27.0..29.0).contains(t), "{t}");
        let partial = err.partial().expect("partial trajectory");
        assert!(partial.x.iter().all(|x| x[0].abs() <= DIVERGENCE_BOUND));
        assert!(partial.len() > 1000);
    }

    #[test]
    fn rejects_dimension_mismatch() {
        let schedule = SamplingSchedule::uniform(0.1, 1.0).unwrap();
        let init = InitialState {
            x0: vec![0.0],
            z0: vec![1.0, 1.0],
            w0: 0.0,
        };
        assert!(matches!(
            simulate_sampled_data(
                &Plant::oscillator(),
                &oscillator_observer(),
                &schedule,
                &NoiseSignal::Zero,
                &init,
                1.0,
                &SimOptions::default()
            ),
            Err(SimError::DimensionMismatch(_))
        ));
    }
}

//! Comparison observers: the ideal continuous-time observer, its
//! zero-order-hold implementation, and a discrete-time observer designed for
//! a fixed sampling period.

use std::io::Write;

use crate::design::ContinuousObserver;
use crate::linalg::{dot, expm, place_poles_discrete, Complex64, LinalgError, Matrix, Vector};
use crate::plant::Plant;
use crate::sim::integrate::substep_count;
use crate::sim::{
    check_dims, check_horizon, check_step, rk4_step, simulate_sampled_data, HybridTrajectory,
    InitialState, NoiseSignal, ResetRule, SamplingSchedule, SimError, SimOptions, DIVERGENCE_BOUND,
};

/// Plant with the observer fed the continuous measurement `y(t) + v(t)`.
/// The `w` column of the result holds that measurement; there are no jumps.
pub fn simulate_continuous(
    plant: &Plant,
    observer: &ContinuousObserver,
    v: &dyn Fn(f64) -> f64,
    x0: &[f64],
    z0: &[f64],
    step: f64,
    t_end: f64,
) -> Result<HybridTrajectory, SimError> {
    let init = InitialState {
        x0: x0.to_vec(),
        z0: z0.to_vec(),
        w0: 0.0,
    };
    check_dims(plant, observer, &init)?;
    check_horizon(t_end)?;
    check_step(step)?;
    let n = plant.dim();
    let mut rate = |t: f64, s: &[f64]| {
        let (x, z) = s.split_at(n);
        let mut out = plant.f(x);
        out.extend(observer.flow(z, plant.h(x) + v(t)));
        out
    };
    let record = |traj: &mut HybridTrajectory, t: f64, s: &[f64]| {
        let (x, z) = s.split_at(n);
        let e = observer
            .estimate(z)
            .iter()
            .zip(x)
            .map(|(a, b)| a - b)
            .collect();
        traj.push(t, x.to_vec(), z.to_vec(), plant.h(x) + v(t), e, false);
    };

    let mut traj = HybridTrajectory::default();
    let mut state: Vec<f64> = x0.iter().chain(z0).copied().collect();
    record(&mut traj, 0.0, &state);
    let m = substep_count(t_end, step);
    for j in 0..m {
        let t = j as f64 * step;
        let (t_next, h) = if j + 1 == m {
            (t_end, t_end - t)
        } else {
            (t + step, step)
        };
        state = rk4_step(&mut rate, t, &state, h);
        if state
            .iter()
            .any(|s| !s.is_finite() || s.abs() > DIVERGENCE_BOUND)
        {
            return Err(SimError::NonFiniteState {
                t: t_next,
                partial: Box::new(traj),
            });
        }
        record(&mut traj, t_next, &state);
    }
    Ok(traj)
}

/// Zero-order hold: the observer sees the most recent sample
/// `y(τ_i) + v(τ_i)` held constant on `[τ_i, τ_{i+1})`. Runs on the hybrid
/// simulator with the predictor frozen and `w(0) = y(0) + v(0)`.
#[allow(clippy::too_many_arguments)]
pub fn simulate_zoh(
    plant: &Plant,
    observer: &ContinuousObserver,
    schedule: &SamplingSchedule,
    noise: &NoiseSignal,
    x0: &[f64],
    z0: &[f64],
    t_end: f64,
    step: Option<f64>,
) -> Result<HybridTrajectory, SimError> {
    let held = observer.with_zero_predictor();
    let init = InitialState {
        x0: x0.to_vec(),
        z0: z0.to_vec(),
        w0: plant.h(x0) + noise.sample(0),
    };
    let options = SimOptions {
        step,
        reset: ResetRule::Fresh,
    };
    simulate_sampled_data(plant, &held, schedule, noise, &init, t_end, &options)
}

/// `z_{k+1} = A(T) z_k + L (cᵀz_k − y_k)` with `A(T) = exp(A T)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteObserverDesign {
    pub period: f64,
    pub ad: Matrix,
    pub c: Vector,
    pub gain: Vector,
    pub targets: Vec<Complex64>,
}

impl DiscreteObserverDesign {
    /// `A(T) + L cᵀ`.
    pub fn closed_loop(&self) -> Matrix {
        self.ad.add(&Matrix::outer(&self.gain, &self.c))
    }
}

pub fn design_discrete_observer(
    a: &Matrix,
    c: &Vector,
    period: f64,
    targets: &[Complex64],
) -> Result<DiscreteObserverDesign, LinalgError> {
    if !(period > 0.0) || !period.is_finite() {
        return Err(LinalgError::InvalidTargets(format!(
            "sampling period must be positive, got {period}"
        )));
    }
    let ad = expm(a, period)?;
    let gain = place_poles_discrete(&ad, c, targets)?;
    let design = DiscreteObserverDesign {
        period,
        ad,
        c: c.clone(),
        gain,
        targets: targets.to_vec(),
    };
    Ok(design)
}

/// Errors `e_k = z_k − x(τ_k)` of the discrete observer at the sampling
/// instants.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SampledErrorSeries {
    pub k: Vec<usize>,
    pub tau: Vec<f64>,
    pub e: Vec<Vec<f64>>,
}

impl SampledErrorSeries {
    pub fn len(&self) -> usize {
        self.k.len()
    }

    pub fn is_empty(&self) -> bool {
        self.k.is_empty()
    }

    pub fn error_component(&self, j: usize) -> Vec<f64> {
        self.e.iter().map(|e| e[j]).collect()
    }

    pub fn error_norms(&self) -> Vec<f64> {
        self.e.iter().map(|e| crate::linalg::norm(e)).collect()
    }

    /// Writes `k,tau_k,e1..en`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let n = self.e.first().map_or(0, Vec::len);
        let mut wtr = csv::Writer::from_writer(out);
        let mut head = vec!["k".to_string(), "tau_k".to_string()];
        head.extend((1..=n).map(|i| format!("e{i}")));
        wtr.write_record(&head)?;
        for ((k, tau), e) in self.k.iter().zip(&self.tau).zip(&self.e) {
            let mut rec = vec![k.to_string(), format!("{tau}")];
            rec.extend(e.iter().map(|v| format!("{v}")));
            wtr.write_record(&rec)?;
        }
        wtr.flush()?;
        Ok(())
    }
}

/// Runs the discrete observer on the instants of `schedule` up to `t_end`.
/// The plant is propagated exactly, `x(τ_{k+1}) = exp(A(τ_{k+1} − τ_k)) x(τ_k)`,
/// so a mismatch between the actual gaps and the design period is the only
/// disturbance.
pub fn simulate_discrete_observer(
    plant: &Plant,
    design: &DiscreteObserverDesign,
    schedule: &SamplingSchedule,
    x0: &[f64],
    z0: &[f64],
    t_end: f64,
) -> Result<SampledErrorSeries, SimError> {
    let (a, c) = plant.linear_pair().ok_or_else(|| {
        SimError::InvalidArgument("the discrete observer needs a linear plant".into())
    })?;
    let n = plant.dim();
    if x0.len() != n || z0.len() != n || design.ad.rows() != n {
        return Err(SimError::DimensionMismatch(format!(
            "plant n = {n}, x0 has {}, z0 has {}, design is {}x{}",
            x0.len(),
            z0.len(),
            design.ad.rows(),
            design.ad.cols()
        )));
    }
    check_horizon(t_end)?;
    let closed = design.closed_loop();
    let mut series = SampledErrorSeries::default();
    let (mut x, mut z) = (x0.to_vec(), z0.to_vec());
    let taus = schedule.instants();
    for (k, &tau) in taus.iter().enumerate() {
        if tau > t_end {
            break;
        }
        let e: Vec<f64> = z.iter().zip(&x).map(|(a, b)| a - b).collect();
        if e.iter()
            .chain(&x)
            .any(|v| !v.is_finite() || v.abs() > DIVERGENCE_BOUND)
        {
            return Err(SimError::NonFiniteState {
                t: tau,
                partial: Box::default(),
            });
        }
        series.k.push(k);
        series.tau.push(tau);
        series.e.push(e);
        let Some(&next) = taus.get(k + 1) else { break };
        let y = dot(c, &x);
        let lz = closed.mul_vec(&z);
        z = lz
            .iter()
            .zip(design.gain.iter())
            .map(|(v, l)| v - l * y)
            .collect();
        let flow = expm(a, next - tau).map_err(|err| SimError::InvalidArgument(err.to_string()))?;
        x = flow.mul_vec(&x);
    }
    Ok(series)
}

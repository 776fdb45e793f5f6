//! Fixed-step classical Runge–Kutta shared by every simulation.

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum IntegrateError {
    #[error("non-finite state at t = {t}")]
    NonFiniteState { t: f64 },
    #[error("invalid interval [{t0}, {t1}]")]
    InvalidInterval { t0: f64, t1: f64 },
    #[error("step must be positive and finite, got {0}")]
    InvalidStep(f64),
}

/// Output of [`integrate_segment`]: the state at `t0` followed by the state
/// after every substep, the last one exactly at `t1`.
#[derive(Debug, Clone, PartialEq)]
pub struct Segment {
    pub times: Vec<f64>,
    pub states: Vec<Vec<f64>>,
}

impl Segment {
    pub fn last(&self) -> &[f64] {
        self.states
            .last()
            .expect("segment always holds the initial state")
    }
}

/// One classical RK4 step of size `h` from `(t, y)`.
pub fn rk4_step<F>(rate: &mut F, t: f64, y: &[f64], h: f64) -> Vec<f64>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    let n = y.len();
    let k1 = rate(t, y);
    let mut tmp: Vec<f64> = (0..n).map(|i| y[i] + 0.5 * h * k1[i]).collect();
    let k2 = rate(t + 0.5 * h, &tmp);
    for i in 0..n {
        tmp[i] = y[i] + 0.5 * h * k2[i];
    }
    let k3 = rate(t + 0.5 * h, &tmp);
    for i in 0..n {
        tmp[i] = y[i] + h * k3[i];
    }
    let k4 = rate(t + h, &tmp);
    (0..n)
        .map(|i| y[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]))
        .collect()
}

/// Number of substeps covering `span` with steps of at most `step`. The
/// relative slack keeps a span that is a multiple of `step` up to rounding
/// from producing a spurious sliver step at the end.
pub(crate) fn substep_count(span: f64, step: f64) -> usize {
    ((span / step) * (1.0 - 1e-9)).ceil().max(1.0) as usize
}

/// Integrates from `t0` to `t1` with uniform substeps of `step`; the final
/// substep is shortened so that the last state lands exactly on `t1`.
pub fn integrate_segment<F>(
    mut rate: F,
    state0: &[f64],
    t0: f64,
    t1: f64,
    step: f64,
) -> Result<Segment, IntegrateError>
where
    F: FnMut(f64, &[f64]) -> Vec<f64>,
{
    if !(t1 > t0) || !t0.is_finite() || !t1.is_finite() {
        return Err(IntegrateError::InvalidInterval { t0, t1 });
    }
    if !(step > 0.0) || !step.is_finite() {
        return Err(IntegrateError::InvalidStep(step));
    }
    let m = substep_count(t1 - t0, step);
    let mut times = Vec::with_capacity(m + 1);
    let mut states = Vec::with_capacity(m + 1);
    times.push(t0);
    states.push(state0.to_vec());
    let mut y = state0.to_vec();
    for j in 0..m {
        let t = t0 + j as f64 * step;
        let (t_next, h) = if j + 1 == m {
            (t1, t1 - t)
        } else {
            (t + step, step)
        };
        y = rk4_step(&mut rate, t, &y, h);
        if y.iter().any(|v| !v.is_finite()) {
            return Err(IntegrateError::NonFiniteState { t: t_next });
        }
        times.push(t_next);
        states.push(y.clone());
    }
    Ok(Segment { times, states })
}

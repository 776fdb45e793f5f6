use serde::{Serialize, Serializer};

use crate::linalg::norm;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum MetricsError {
    #[error("empty error series")]
    EmptySeries,
    #[error("times and errors differ in length ({times} vs {errors})")]
    LengthMismatch { times: usize, errors: usize },
}

/// Summary of an error series `e(t)`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Metrics {
    /// `(max − min)/2` of each component over the tail window.
    pub tail_amplitude: Vec<f64>,
    /// First time after which `|e|` stays within the tolerance.
    #[serde(serialize_with = "serialize_time")]
    pub convergence_time: Option<f64>,
    /// `sup |e|` over the whole run.
    pub sup_error: f64,
    /// `sup |e|` over the tail window.
    pub tail_sup_error: f64,
    pub window_start: f64,
    pub tolerance: f64,
}

fn serialize_time<S: Serializer>(t: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match t {
        Some(v) => s.serialize_f64(*v),
        None => s.serialize_str("never"),
    }
}

impl Metrics {
    /// The tail stays within the tolerance.
    pub fn converged(&self) -> bool {
        self.tail_sup_error <= self.tolerance
    }

    pub fn max_tail_amplitude(&self) -> f64 {
        self.tail_amplitude.iter().fold(0.0, |m, v| m.max(*v))
    }

    pub fn convergence_label(&self) -> String {
        self.convergence_time
            .map_or_else(|| "never".to_string(), |t| format!("{t}"))
    }
}

/// Metrics over the final `window` fraction of the time span of `times`.
pub fn compute_metrics(
    times: &[f64],
    errors: &[Vec<f64>],
    window: f64,
    tolerance: f64,
) -> Result<Metrics, MetricsError> {
    if times.len() != errors.len() {
        return Err(MetricsError::LengthMismatch {
            times: times.len(),
            errors: errors.len(),
        });
    }
    let (Some(&first), Some(&last)) = (times.first(), times.last()) else {
        return Err(MetricsError::EmptySeries);
    };
    let dim = errors[0].len();
    let window_start = last - window * (last - first);
    let norms: Vec<f64> = errors.iter().map(|e| norm(e)).collect();

    let mut lo = vec![f64::INFINITY; dim];
    let mut hi = vec![f64::NEG_INFINITY; dim];
    let mut tail_sup = 0.0f64;
    for ((t, e), n) in times.iter().zip(errors).zip(&norms) {
        if *t < window_start {
            continue;
        }
        for j in 0..dim {
            lo[j] = lo[j].min(e[j]);
            hi[j] = hi[j].max(e[j]);
        }
        tail_sup = tail_sup.max(*n);
    }
    let tail_amplitude = lo.iter().zip(&hi).map(|(l, h)| 0.5 * (h - l)).collect();
    let sup_error = norms.iter().fold(0.0f64, |m, v| m.max(*v));
    let convergence_time = match norms.iter().rposition(|n| *n > tolerance) {
        None => Some(first),
        Some(i) if i + 1 < times.len() => Some(times[i + 1]),
        Some(_) => None,
    };
    Ok(Metrics {
        tail_amplitude,
        convergence_time,
        sup_error,
        tail_sup_error: tail_sup,
        window_start,
        tolerance,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_series() {
        let times: Vec<f64> = (0..100).map(|i| i as f64 * 0.1).collect();
        let errors = vec![vec![5e-4]; 100];
        let m = compute_metrics(&times, &errors, 0.25, 1e-3).unwrap();
        assert_eq!(m.tail_amplitude, vec![0.0]);
        assert_eq!(m.convergence_time, Some(0.0));
        assert!(m.converged());
    }

    #[test]
    fn sinusoid_amplitude() {
        let times: Vec<f64> = (0..=60_000).map(|i| i as f64 * 1e-3).collect();
        let errors: Vec<Vec<f64>> = times
            .iter()
            .map(|t| vec![0.0, 0.15 * (2.0 * t).sin()])
            .collect();
        let m = compute_metrics(&times, &errors, 0.25, 1e-3).unwrap();
        assert!((m.tail_amplitude[1] - 0.15).abs() < 1e-6);
        assert_eq!(m.tail_amplitude[0], 0.0);
        assert_eq!(m.convergence_time, None);
        assert!(!m.converged());
        assert_eq!(m.window_start, 45.0);
        assert_eq!(
            serde_json::to_value(&m).unwrap()["convergence_time"],
            "never"
        );
    }

    #[test]
    fn convergence_time_is_last_exit() {
        let times = [0.0, 1.0, 2.0, 3.0, 4.0];
        let errors = [vec![1.0], vec![0.0], vec![0.5], vec![1e-4], vec![0.0]];
        let m = compute_metrics(&times, &errors, 0.5, 1e-3).unwrap();
        assert_eq!(m.convergence_time, Some(3.0));
        assert_eq!(m.sup_error, 1.0);
        assert_eq!(m.tail_sup_error, 0.5);
    }

    #[test]
    fn empty_series() {
        assert_eq!(
            compute_metrics(&[], &[], 0.25, 1e-3),
            Err(MetricsError::EmptySeries)
        );
    }
}

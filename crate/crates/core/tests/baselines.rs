use std::f64::consts::FRAC_PI_2;

use sdobs::baseline::{
    design_discrete_observer, simulate_continuous, simulate_discrete_observer, simulate_zoh,
};
use sdobs::design::{design_linear, LinearDesign, LinearSpec};
use sdobs::harness::compute_metrics;
use sdobs::linalg::{
    eigenvalues, expm, induced_norm, norm, spectrum_distance, Complex64, LinalgError, Matrix,
    Vector,
};
use sdobs::plant::Plant;
use sdobs::sim::{generate_schedule, NoiseSignal, Perturbation, SamplingSchedule};

const X0: [f64; 2] = [0.0, 2.0];
const Z0: [f64; 2] = [1.0, 1.0];

fn paper_design(plant: &Plant) -> LinearDesign {
    let spec = LinearSpec {
        k: Vector::new(vec![-4.0, 0.0]).unwrap(),
        mu: Some(1.0),
        gamma: Some(64.0 / 3.0),
        p: Some(Matrix::from_rows(&[[2.5, -1.0], [-1.0, 0.5]]).unwrap()),
    };
    design_linear(plant, &spec).unwrap()
}

fn uniform(r: f64, t_end: f64) -> SamplingSchedule {
    generate_schedule(r, Perturbation::Zero, t_end).unwrap()
}

fn tail_amplitude_e2(times: &[f64], e: &[Vec<f64>]) -> f64 {
    compute_metrics(times, e, 0.25, 1e-3)
        .unwrap()
        .tail_amplitude[1]
}

fn quad(p: &Matrix, e: &[f64]) -> f64 {
    e.iter().zip(p.mul_vec(e)).map(|(a, b)| a * b).sum()
}

#[test]
fn continuous_observer_error_vanishes() {
    let plant = Plant::oscillator();
    let d = paper_design(&plant);
    let zero = |_: f64| 0.0;
    let traj = simulate_continuous(&plant, &d.observer, &zero, &X0, &Z0, 1e-3, 12.0).unwrap();
    for (t, e) in traj.times.iter().zip(&traj.e) {
        if *t >= 10.0 {
            assert!(e[1].abs() < 1e-4);
        }
    }
    // eᵀPe decays at rate 2μ between consecutive samples.
    for w in traj.e.windows(2).zip(traj.times.windows(2)) {
        let (e, t) = w;
        let (v0, v1) = (quad(&d.p, &e[0]), quad(&d.p, &e[1]));
        if v0 > 1e-24 {
            assert!(v1 <= v0 * (-2.0 * d.mu * (1.0 - 1e-3) * (t[1] - t[0])).exp());
        }
    }
}

#[test]
fn continuous_observer_noise_bound() {
    let plant = Plant::oscillator();
    let d = paper_design(&plant);
    let level = 0.1;
    let v = |_: f64| level;
    let traj = simulate_continuous(&plant, &d.observer, &v, &X0, &Z0, 1e-3, 30.0).unwrap();
    let tail = compute_metrics(&traj.times, &traj.e, 0.25, 1e-3)
        .unwrap()
        .tail_sup_error;
    assert!(tail <= d.noise_gain() * level * 1.1);
}

#[test]
fn zoh_amplitude_grows_with_diameter() {
    let plant = Plant::oscillator();
    let d = paper_design(&plant);
    let amp = |r: f64| {
        let traj = simulate_zoh(
            &plant,
            &d.observer,
            &uniform(r, 60.0),
            &NoiseSignal::Zero,
            &X0,
            &Z0,
            60.0,
            None,
        )
        .unwrap();
        tail_amplitude_e2(&traj.times, &traj.e)
    };
    let small = amp(0.081);
    assert!((0.10..=0.20).contains(&small), "{small}");
    assert!(amp(0.45) >= 5.0 * small);
}

#[test]
fn zoh_error_vanishes_with_fast_sampling() {
    let plant = Plant::oscillator();
    let d = paper_design(&plant);
    let traj = simulate_zoh(
        &plant,
        &d.observer,
        &uniform(1e-3, 10.0),
        &NoiseSignal::Zero,
        &X0,
        &X0,
        10.0,
        None,
    )
    .unwrap();
    assert!(tail_amplitude_e2(&traj.times, &traj.e) < 5e-3);
}

#[test]
fn baselines_keep_exact_initialisation() {
    let plant = Plant::oscillator();
    let d = paper_design(&plant);
    let zero = |_: f64| 0.0;
    let cont = simulate_continuous(&plant, &d.observer, &zero, &X0, &X0, 1e-3, 10.0).unwrap();
    assert!(cont.error_norms().iter().all(|e| *e <= 1e-8));
    let (a, c) = plant.linear_pair().unwrap();
    let disc = design_discrete_observer(a, c, 0.075, &[Complex64::new(0.8, 0.0); 2]).unwrap();
    let series =
        simulate_discrete_observer(&plant, &disc, &uniform(0.075, 10.0), &X0, &X0, 10.0).unwrap();
    assert!(series.error_norms().iter().all(|e| *e <= 1e-8));
}

#[test]
fn discrete_design_examples() {
    let plant = Plant::oscillator();
    let (a, c) = plant.linear_pair().unwrap();
    let d = design_discrete_observer(a, c, 0.075, &[Complex64::new(0.8, 0.0); 2]).unwrap();
    assert!((d.gain[0] + 0.37754).abs() < 1e-4);
    assert!((d.gain[1] + 0.17804).abs() < 1e-4);
    let err =
        design_discrete_observer(a, c, FRAC_PI_2, &[Complex64::new(0.5, 0.0); 2]).unwrap_err();
    assert!(matches!(err, LinalgError::NotObservable { .. }));
    let dead = design_discrete_observer(a, c, 0.075, &[Complex64::new(0.0, 0.0); 2]).unwrap();
    let eig = eigenvalues(&dead.closed_loop()).unwrap();
    assert!(spectrum_distance(&eig, &[Complex64::new(0.0, 0.0); 2]) < 1e-6);
    let other = design_discrete_observer(
        a,
        c,
        0.3,
        &[Complex64::new(0.5, 0.0), Complex64::new(0.6, 0.0)],
    )
    .unwrap();
    let eig = eigenvalues(&other.closed_loop()).unwrap();
    assert!(spectrum_distance(&eig, &other.targets) < 1e-6);
}

/// `κ` with `‖Φᵏ‖ ≤ κρᵏ` over the first `steps` powers.
fn fitted_kappa(phi: &Matrix, rho: f64, steps: usize) -> f64 {
    let mut power = Matrix::identity(phi.rows());
    let mut kappa = 1.0f64;
    for k in 1..=steps {
        power = power.matmul(phi);
        kappa = kappa.max(induced_norm(&power) / rho.powi(k as i32));
    }
    kappa
}

#[test]
fn discrete_observer_matched_and_mismatched_schedules() {
    let plant = Plant::oscillator();
    let (a, c) = plant.linear_pair().unwrap();
    let d = design_discrete_observer(a, c, 0.075, &[Complex64::new(0.8, 0.0); 2]).unwrap();
    let phi = d.closed_loop();
    let rho = 0.8 + 1e-3;
    let kappa = fitted_kappa(&phi, rho, 400);

    let matched =
        simulate_discrete_observer(&plant, &d, &uniform(0.075, 20.0), &X0, &Z0, 20.0).unwrap();
    let norms = matched.error_norms();
    assert!(norms[100] < 1e-6, "{}", norms[100]);
    // Rounding of the accumulated instants leaves a floor near 1e−14.
    for (k, e) in norms.iter().enumerate() {
        assert!(
            *e <= norms[0] * kappa * rho.powi(k as i32) + 1e-12,
            "k = {k}: {e}"
        );
    }

    // Mismatch r = 0.081: geometric transient plus the forcing (A(T) − A(gap))x.
    let schedule = uniform(0.081, 60.0);
    let series = simulate_discrete_observer(&plant, &d, &schedule, &X0, &Z0, 60.0).unwrap();
    assert!(tail_amplitude_e2(&series.tau, &series.e) > 0.21);
    let gain = kappa / (1.0 - rho);
    let taus = schedule.instants();
    let forcing = (0..series.len().saturating_sub(1))
        .map(|j| {
            let x = expm(a, taus[j]).unwrap().mul_vec(&X0);
            let gap = taus[j + 1] - taus[j];
            norm(&d.ad.sub(&expm(a, gap).unwrap()).mul_vec(&x))
        })
        .fold(0.0f64, f64::max);
    let e0 = series.error_norms()[0];
    for (k, e) in series.error_norms().iter().enumerate() {
        let envelope = kappa * rho.powi(k as i32) * e0 + gain * forcing;
        assert!(*e <= envelope, "k = {k}");
    }
}

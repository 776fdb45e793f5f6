use std::f64::consts::{FRAC_PI_2, LN_2};

use proptest::prelude::*;
use sdobs::baseline::simulate_zoh;
use sdobs::design::{design_highgain, design_linear, Design, HighGainSpec, LinearSpec};
use sdobs::linalg::{expm, norm, Complex64, Matrix, Vector};
use sdobs::plant::Plant;
use sdobs::sim::output::{write_jumps, write_trajectory};
use sdobs::sim::{
    generate_schedule, integrate_segment, simulate_sampled_data, HybridTrajectory, InitialState,
    NoiseSignal, Perturbation, SamplingSchedule, SimOptions,
};

fn paper_design() -> Design {
    let spec = LinearSpec {
        k: Vector::new(vec![-4.0, 0.0]).unwrap(),
        mu: Some(1.0),
        gamma: Some(64.0 / 3.0),
        p: Some(Matrix::from_rows(&[[2.5, -1.0], [-1.0, 0.5]]).unwrap()),
    };
    Design::Linear(design_linear(&Plant::oscillator(), &spec).unwrap())
}

fn highgain(plant: &Plant, pole: f64) -> Design {
    let spec = HighGainSpec {
        poles: vec![Complex64::new(pole, 0.0); plant.dim()],
        mu: 1.0,
        theta: None,
    };
    Design::HighGain(design_highgain(plant, &spec).unwrap())
}

fn plant_flow(plant: &Plant) -> impl FnMut(f64, &[f64]) -> Vec<f64> + '_ {
    move |_, x| plant.f(x)
}

fn dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(x, y)| (x - y).powi(2))
        .sum::<f64>()
        .sqrt()
}

#[test]
fn rk4_matches_exact_oscillator_flow_at_fourth_order() {
    let plant = Plant::oscillator();
    let (a, _) = plant.linear_pair().unwrap();
    let exact = expm(a, 1.0).unwrap().mul_vec(&[0.0, 2.0]);
    let errs: Vec<f64> = [0.1, 0.05, 0.025]
        .iter()
        .map(|&h| {
            let seg = integrate_segment(plant_flow(&plant), &[0.0, 2.0], 0.0, 1.0, h).unwrap();
            dist(seg.last(), &exact)
        })
        .collect();
    for w in errs.windows(2) {
        let order = (w[0] / w[1]).log2();
        assert!(order >= 3.9, "observed order {order}");
    }
}

#[test]
fn rk4_richardson_order_on_nonlinear_problem() {
    // Pendulum with forcing: smooth, no closed form.
    let rate = |t: f64, y: &[f64]| vec![y[1], -y[0].sin() + 0.3 * (2.0 * t).cos()];
    let end = |h: f64| {
        integrate_segment(rate, &[1.0, 0.0], 0.0, 2.0, h)
            .unwrap()
            .last()
            .to_vec()
    };
    let (a, b, c) = (end(0.1), end(0.05), end(0.025));
    let order = (dist(&a, &b) / dist(&b, &c)).log2();
    assert!(order >= 3.5, "observed order {order}");
}

#[test]
fn oscillator_quarter_period_and_energy() {
    let plant = Plant::oscillator();
    let (a, _) = plant.linear_pair().unwrap();
    let x = expm(a, FRAC_PI_2).unwrap().mul_vec(&[0.0, 2.0]);
    assert!(dist(&x, &[0.0, -2.0]) < 1e-12);
    for i in 0..50 {
        let x = expm(a, 0.37 * i as f64).unwrap().mul_vec(&[0.0, 2.0]);
        assert!((4.0 * x[0] * x[0] + x[1] * x[1] - 4.0).abs() < 1e-10);
    }
}

#[test]
fn output_rate_matches_directional_derivative() {
    let random_linear = Plant::linear(
        Matrix::from_rows(&[[0.2, 1.0, -0.4], [-1.3, 0.1, 0.7], [0.5, -0.6, -0.9]]).unwrap(),
        Vector::new(vec![0.3, -1.0, 0.8]).unwrap(),
    )
    .unwrap();
    let plants = [
        Plant::oscillator(),
        Plant::double_integrator(),
        Plant::sin_triangular(),
        random_linear,
    ];
    let delta = 1e-6;
    for plant in &plants {
        let n = plant.dim();
        for i in 0..100 {
            let x: Vec<f64> = (0..n)
                .map(|j| 5.0 * ((i * 7 + j * 13) as f64 * 0.618_033_988_75).fract() - 2.5)
                .collect();
            let f = plant.f(&x);
            let shifted: Vec<f64> = x.iter().zip(&f).map(|(a, b)| a + delta * b).collect();
            let fd = (plant.h(&shifted) - plant.h(&x)) / delta;
            let k_x = 1.0 + norm(&x) + norm(&f).powi(2);
            assert!(
                (plant.output_rate(&x) - fd).abs() <= k_x * delta,
                "x = {x:?}"
            );
        }
    }
}

#[test]
fn output_rate_matches_derivative_along_exact_flow() {
    let a = Matrix::from_rows(&[[0.2, 1.0, -0.4], [-1.3, 0.1, 0.7], [0.5, -0.6, -0.9]]).unwrap();
    let plant = Plant::linear(a.clone(), Vector::new(vec![0.3, -1.0, 0.8]).unwrap()).unwrap();
    let x0 = [1.0, -0.5, 2.0];
    let h = 1e-3;
    for i in 1..20 {
        let t = 0.25 * i as f64;
        let at = |s: f64| expm(&a, s).unwrap().mul_vec(&x0);
        let fd = (plant.h(&at(t + h)) - plant.h(&at(t - h))) / (2.0 * h);
        assert!((plant.output_rate(&at(t)) - fd).abs() <= 1e-5);
    }
}

#[test]
fn schedule_examples() {
    let s = generate_schedule(0.081, Perturbation::Zero, 1.0).unwrap();
    assert_eq!(s.intervals(), 13);
    let s = generate_schedule(1.0, Perturbation::Constant(LN_2), 4.0).unwrap();
    assert!(s.gaps().all(|g| (g - 0.5).abs() < 1e-15));
    let s = generate_schedule(
        0.081,
        Perturbation::Uniform {
            max: LN_2,
            seed: 42,
        },
        60.0,
    )
    .unwrap();
    assert!(s.gaps().all(|g| (0.0405 - 1e-15..=0.081).contains(&g)));
}

fn run(
    design: &Design,
    plant: &Plant,
    schedule: &SamplingSchedule,
    noise: &NoiseSignal,
    init: InitialState,
    t_end: f64,
) -> HybridTrajectory {
    simulate_sampled_data(
        plant,
        design.observer(),
        schedule,
        noise,
        &init,
        t_end,
        &SimOptions::default(),
    )
    .unwrap()
}

fn csv_bytes(traj: &HybridTrajectory) -> (Vec<u8>, Vec<u8>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    write_trajectory(&mut a, traj, 7).unwrap();
    write_jumps(&mut b, traj).unwrap();
    (a, b)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn linear_flow_matches_matrix_exponential(
        entries in prop::collection::vec(-1.0f64..1.0, 9),
        x0 in prop::collection::vec(-2.0f64..2.0, 3),
    ) {
        let a = Matrix::new(3, 3, entries).unwrap();
        let plant = Plant::linear(a.clone(), Vector::unit(3, 0)).unwrap();
        let exact = expm(&a, 1.0).unwrap().mul_vec(&x0);
        let scale = 1.0 + norm(&exact);
        for h in [0.05, 0.025] {
            let seg = integrate_segment(plant_flow(&plant), &x0, 0.0, 1.0, h).unwrap();
            // Fourth-order local accuracy with a generous constant.
            prop_assert!(dist(seg.last(), &exact) <= 10.0 * h.powi(4) * scale);
        }
    }

    #[test]
    fn schedule_gaps_follow_perturbations(
        r in 0.01f64..2.0,
        max in 0.0f64..3.0,
        seed in any::<u64>(),
        t_end in 0.5f64..20.0,
    ) {
        let s = generate_schedule(r, Perturbation::Uniform { max, seed }, t_end).unwrap();
        let taus = s.instants();
        prop_assert_eq!(taus[0], 0.0);
        prop_assert!(s.last() >= t_end);
        for (i, w) in taus.windows(2).enumerate() {
            let d = s.perturbation()[i];
            prop_assert!((0.0..=max).contains(&d));
            prop_assert_eq!(w[1], w[0] + r * (-d).exp());
            prop_assert!(w[1] - w[0] > 0.0 && w[1] - w[0] <= r);
        }
    }

    #[test]
    fn resets_use_fresh_measurement_exactly(
        r in 0.03f64..0.3,
        bound in 0.0f64..0.5,
        seed in any::<u64>(),
        d_seed in any::<u64>(),
    ) {
        let plant = Plant::oscillator();
        let design = paper_design();
        let schedule = generate_schedule(r, Perturbation::Uniform { max: LN_2, seed: d_seed }, 3.0).unwrap();
        let noise = NoiseSignal::UniformRandom { bound, seed };
        let init = InitialState { x0: vec![0.0, 2.0], z0: vec![1.0, 1.0], w0: 0.0 };
        let traj = run(&design, &plant, &schedule, &noise, init, 3.0);
        let taus = schedule.instants();
        let mut row = 0;
        for j in &traj.jumps {
            prop_assert_eq!(j.tau, taus[j.i]);
            prop_assert_eq!(j.v, noise.sample(j.i));
            prop_assert_eq!(j.w_after, j.y + j.v);
            while !(traj.is_jump[row] && traj.times[row] == j.tau) {
                row += 1;
            }
            prop_assert_eq!(j.y, plant.h(&traj.x[row]));
            prop_assert_eq!(traj.w[row], j.w_after);
            prop_assert_eq!(traj.w[row - 1], j.w_before);
            prop_assert_eq!(traj.times[row - 1], j.tau);
        }
        // Jump rows sit only at sampling instants.
        for (t, jump) in traj.times.iter().zip(&traj.is_jump) {
            if *jump {
                prop_assert!(taus.contains(t));
            }
        }
    }

    #[test]
    fn zero_predictor_run_is_the_hold_baseline(
        r in 0.04f64..0.5,
        bound in 0.0f64..0.3,
        seed in any::<u64>(),
    ) {
        let plant = Plant::oscillator();
        let design = paper_design();
        let schedule = generate_schedule(r, Perturbation::Zero, 4.0).unwrap();
        let noise = NoiseSignal::UniformRandom { bound, seed };
        let zoh = simulate_zoh(&plant, design.observer(), &schedule, &noise, &[0.0, 2.0], &[1.0, 1.0], 4.0, None)
            .unwrap();
        let init = InitialState { x0: vec![0.0, 2.0], z0: vec![1.0, 1.0], w0: noise.sample(0) };
        let held = simulate_sampled_data(
            &plant,
            &design.observer().with_zero_predictor(),
            &schedule,
            &noise,
            &init,
            4.0,
            &SimOptions::default(),
        )
        .unwrap();
        prop_assert_eq!(zoh.len(), held.len());
        for (a, b) in zoh.z.iter().zip(&held.z) {
            prop_assert!(dist(a, b) <= 1e-12);
        }
    }
}

#[test]
fn identical_inputs_give_identical_bytes() {
    let plant = Plant::sin_triangular();
    let design = highgain(&plant, -2.0);
    let r = 0.5 * design.max_sampling_period().value().unwrap();
    let schedule = generate_schedule(r, Perturbation::Uniform { max: LN_2, seed: 9 }, 1.0).unwrap();
    let noise = NoiseSignal::UniformRandom {
        bound: 0.01,
        seed: 4,
    };
    let init = || InitialState {
        x0: vec![0.5, -1.0],
        z0: vec![0.0, 0.0],
        w0: 0.0,
    };
    let a = run(&design, &plant, &schedule, &noise, init(), 1.0);
    let b = run(&design, &plant, &schedule, &noise, init(), 1.0);
    assert_eq!(a, b);
    assert_eq!(csv_bytes(&a), csv_bytes(&b));
}

#[test]
fn certified_schedules_converge_for_every_design() {
    let oscillator = Plant::oscillator();
    let computed = Design::Linear(
        design_linear(
            &oscillator,
            &LinearSpec {
                k: Vector::new(vec![-3.0, -2.0]).unwrap(),
                mu: None,
                gamma: None,
                p: None,
            },
        )
        .unwrap(),
    );
    let sin = Plant::sin_triangular();
    let dbl = Plant::double_integrator();
    let cases = [
        (&oscillator, paper_design(), vec![0.0, 2.0], vec![1.0, 1.0]),
        (&oscillator, computed, vec![0.0, 2.0], vec![1.0, 1.0]),
        (&sin, highgain(&sin, -2.0), vec![0.0, 2.0], vec![1.0, 1.0]),
        (&dbl, highgain(&dbl, -1.0), vec![0.0, 2.0], vec![1.0, 1.0]),
    ];
    for (plant, design, x0, z0) in cases {
        let r_max = design.max_sampling_period().value().unwrap();
        let horizon = 40.0 / design.mu();
        let e0 = dist(&x0, &z0);
        for source in [
            Perturbation::Zero,
            Perturbation::Uniform { max: LN_2, seed: 3 },
        ] {
            let schedule = generate_schedule(0.9 * r_max, source, horizon).unwrap();
            let init = InitialState {
                x0: x0.clone(),
                z0: z0.clone(),
                w0: 0.0,
            };
            let traj = run(&design, plant, &schedule, &NoiseSignal::Zero, init, horizon);
            let tail = traj
                .times
                .iter()
                .zip(traj.error_norms())
                .filter(|(t, _)| **t >= 0.8 * horizon)
                .fold(0.0f64, |m, (_, e)| m.max(e));
            assert!(
                tail <= 1e-3 * e0,
                "{} r_max {r_max}: tail {tail}",
                design.kind_name()
            );
        }
    }
}

use std::io::Write;

use serde::Serialize;

use crate::baseline::{
    design_discrete_observer, simulate_continuous, simulate_discrete_observer, simulate_zoh,
    DiscreteObserverDesign, SampledErrorSeries,
};
use crate::design::{
    design_highgain, design_linear, verify_dissipation, Design, DesignError, HighGainSpec,
    LinearSpec, SamplingBound,
};
use crate::exec::Execution;
use crate::linalg::{eigenvalues, is_schur, place_poles_continuous, LinalgError, Matrix, Vector};
use crate::plant::{Plant, PlantError};
use crate::sim::{
    default_step, generate_schedule,
    output::{write_jumps, write_trajectory},
    simulate_sampled_data, HybridTrajectory, InitialState, SimError, SimOptions,
};

use super::config::{
    poles, ConfigError, DiameterSpec, Implementation, ObserverSpec, PlantSpec, Scenario,
};
use super::metrics::{compute_metrics, Metrics, MetricsError};

/// Cell width for random noise fed to the continuous observer when the
/// scenario has no schedule.
const CONTINUOUS_NOISE_HOLD: f64 = 0.1;
const BREAKDOWN_BISECTIONS: usize = 12;

#[derive(Debug, Clone, thiserror::Error)]
pub enum HarnessError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("plant: {0}")]
    Plant(#[from] PlantError),
    #[error("design: {0}")]
    Design(#[from] DesignError),
    #[error("discrete design: {0}")]
    DiscreteDesign(LinalgError),
    #[error("simulation: {0}")]
    Simulation(SimError),
    #[error("simulation diverged at t = {t}")]
    Diverged { t: f64 },
    #[error("metrics: {0}")]
    Metrics(#[from] MetricsError),
    #[error("incompatible scenarios: {0}")]
    IncompatibleScenarios(String),
    #[error("i/o: {0}")]
    Io(String),
}

impl HarnessError {
    /// 1 for configuration problems, 2 for design or certificate failures,
    /// 3 for divergence.
    pub fn exit_code(&self) -> i32 {
        match self {
            Self::Design(_) | Self::DiscreteDesign(_) => 2,
            Self::Diverged { .. } | Self::Simulation(SimError::NonFiniteState { .. }) => 3,
            _ => 1,
        }
    }
}

impl From<std::io::Error> for HarnessError {
    fn from(e: std::io::Error) -> Self {
        Self::Io(e.to_string())
    }
}

impl From<csv::Error> for HarnessError {
    fn from(e: csv::Error) -> Self {
        Self::Io(e.to_string())
    }
}

pub fn build_plant(spec: &PlantSpec) -> Result<Plant, HarnessError> {
    match spec {
        PlantSpec::Named(name) => match name.as_str() {
            "oscillator" => Ok(Plant::oscillator()),
            "double-integrator" => Ok(Plant::double_integrator()),
            "sin-triangular" => Ok(Plant::sin_triangular()),
            other => Err(ConfigError::Invalid(format!("unknown plant {other:?}")).into()),
        },
        PlantSpec::Inline { linear } => {
            let a = Matrix::from_rows(&linear.a)
                .map_err(|e| ConfigError::Invalid(format!("plant A: {e}")))?;
            let c = Vector::new(linear.c.clone())
                .map_err(|e| ConfigError::Invalid(format!("plant c: {e}")))?;
            Ok(Plant::linear(a, c)?)
        }
    }
}

/// A constructed observer.
#[derive(Debug, Clone)]
pub enum BuiltDesign {
    Continuous(Design),
    Discrete(DiscreteObserverDesign),
}

impl BuiltDesign {
    pub fn max_sampling_period(&self) -> Option<SamplingBound> {
        match self {
            Self::Continuous(d) => Some(d.max_sampling_period()),
            Self::Discrete(_) => None,
        }
    }
}

pub fn build_design(plant: &Plant, spec: &ObserverSpec) -> Result<BuiltDesign, HarnessError> {
    match spec {
        ObserverSpec::Linear {
            k,
            poles: targets,
            mu,
            gamma,
            p,
        } => {
            let k = match (k, targets) {
                (Some(k), None) => {
                    Vector::new(k.clone()).map_err(|e| ConfigError::Invalid(format!("k: {e}")))?
                }
                (None, Some(targets)) => {
                    let (a, c) = plant
                        .linear_pair()
                        .ok_or(DesignError::WrongPlantKind { expected: "linear" })?;
                    place_poles_continuous(a, c, &poles(targets)).map_err(DesignError::from)?
                }
                _ => {
                    return Err(ConfigError::Invalid(
                        "linear observer needs exactly one of `k` and `poles`".into(),
                    )
                    .into())
                }
            };
            let p = match p {
                Some(rows) => Some(
                    Matrix::from_rows(rows).map_err(|e| ConfigError::Invalid(format!("P: {e}")))?,
                ),
                None => None,
            };
            let spec = LinearSpec {
                k,
                mu: *mu,
                gamma: *gamma,
                p,
            };
            Ok(BuiltDesign::Continuous(Design::Linear(design_linear(
                plant, &spec,
            )?)))
        }
        ObserverSpec::Highgain {
            poles: targets,
            mu,
            theta,
        } => {
            let spec = HighGainSpec {
                poles: poles(targets),
                mu: *mu,
                theta: *theta,
            };
            Ok(BuiltDesign::Continuous(Design::HighGain(design_highgain(
                plant, &spec,
            )?)))
        }
        ObserverSpec::Discrete { period, targets } => {
            let (a, c) =
                plant
                    .linear_pair()
                    .ok_or(HarnessError::Design(DesignError::WrongPlantKind {
                        expected: "linear",
                    }))?;
            let d = design_discrete_observer(a, c, *period, &poles(targets))
                .map_err(HarnessError::DiscreteDesign)?;
            Ok(BuiltDesign::Discrete(d))
        }
    }
}

/// Structured design record, serialized as `design.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DesignReport {
    pub kind: &'static str,
    pub n: usize,
    pub gain: Vec<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta_bound: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub p: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub mu: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub gamma: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k1: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub k2: Option<f64>,
    #[serde(rename = "K", skip_serializing_if = "Option::is_none")]
    pub mismatch_constant: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub r_max: Option<SamplingBound>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub noise_gain: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dissipation_verified: Option<bool>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub lyapunov_margin: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub decay_rate: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub period: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ad: Option<Vec<Vec<f64>>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub targets: Option<Vec<[f64; 2]>>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub spectral_radius: Option<f64>,
}

impl DesignReport {
    fn empty(kind: &'static str, gain: &Vector) -> Self {
        Self {
            kind,
            n: gain.dim(),
            gain: gain.to_vec(),
            theta: None,
            theta_bound: None,
            p: None,
            mu: None,
            gamma: None,
            k1: None,
            k2: None,
            mismatch_constant: None,
            r_max: None,
            noise_gain: None,
            dissipation_verified: None,
            lyapunov_margin: None,
            decay_rate: None,
            period: None,
            ad: None,
            targets: None,
            spectral_radius: None,
        }
    }
}

pub fn design_report(plant: &Plant, built: &BuiltDesign) -> Result<DesignReport, HarnessError> {
    match built {
        BuiltDesign::Continuous(d) => {
            let mut r = DesignReport::empty(d.kind_name(), d.gain());
            let (k1, k2) = d.eig_bounds();
            r.p = Some(d.lyap().to_rows());
            r.mu = Some(d.mu());
            r.gamma = d.gamma();
            r.theta = d.theta();
            r.k1 = Some(k1);
            r.k2 = Some(k2);
            r.mismatch_constant = Some(d.mismatch_constant());
            r.r_max = Some(d.max_sampling_period());
            r.noise_gain = Some(d.noise_gain());
            match d {
                Design::Linear(l) => {
                    let (a, c) = plant
                        .linear_pair()
                        .expect("linear design implies a linear plant");
                    r.dissipation_verified =
                        Some(verify_dissipation(&l.p, a, &l.gain, c, l.mu, l.gamma)?);
                }
                Design::HighGain(h) => {
                    r.theta_bound = Some(h.theta_bound);
                    r.lyapunov_margin = Some(h.lyapunov_margin);
                    r.decay_rate = Some(h.decay_rate());
                }
            }
            Ok(r)
        }
        BuiltDesign::Discrete(d) => {
            let mut r = DesignReport::empty("discrete", &d.gain);
            r.period = Some(d.period);
            r.ad = Some(d.ad.to_rows());
            r.targets = Some(d.targets.iter().map(|t| [t.re, t.im]).collect());
            let eig = eigenvalues(&d.closed_loop()).map_err(HarnessError::DiscreteDesign)?;
            r.spectral_radius = Some(eig.iter().fold(0.0, |m, e| m.max(e.norm())));
            debug_assert!(is_schur(&d.closed_loop(), 0.0)
                .map(|s| s.0)
                .unwrap_or(false));
            Ok(r)
        }
    }
}

/// Designs the observer of `scenario` without simulating.
pub fn run_design(scenario: &Scenario) -> Result<DesignReport, HarnessError> {
    scenario.validate()?;
    let plant = build_plant(&scenario.plant)?;
    let built = build_design(&plant, &scenario.observer)?;
    design_report(&plant, &built)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum RunStatus {
    Completed,
    /// Stopped at `t`; metrics cover the partial run.
    Diverged {
        t: f64,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub enum Series {
    Hybrid(HybridTrajectory),
    Sampled(SampledErrorSeries),
}

#[derive(Debug, Clone)]
pub struct RunOutcome {
    pub name: String,
    pub implementation: Implementation,
    pub design: DesignReport,
    pub r: Option<f64>,
    pub certified: bool,
    pub metrics: Metrics,
    pub status: RunStatus,
    pub series: Series,
}

impl RunOutcome {
    pub fn converged(&self) -> bool {
        self.status == RunStatus::Completed && self.metrics.converged()
    }
}

fn resolve_r(scenario: &Scenario, built: &BuiltDesign) -> Result<Option<f64>, HarnessError> {
    let Some(schedule) = &scenario.schedule else {
        return Ok(None);
    };
    match schedule.r {
        DiameterSpec::Value(r) => Ok(Some(r)),
        DiameterSpec::FractionOfMax { fraction_of_max } => match built.max_sampling_period() {
            Some(SamplingBound::Bounded(r_max)) => Ok(Some(fraction_of_max * r_max)),
            Some(SamplingBound::Unbounded) => Err(ConfigError::Invalid(
                "fraction_of_max needs a bounded certified period".into(),
            )
            .into()),
            None => Err(ConfigError::Invalid(
                "fraction_of_max needs a continuous-time design".into(),
            )
            .into()),
        },
    }
}

fn simulation_error(err: SimError) -> Result<HybridTrajectory, HarnessError> {
    match err {
        SimError::NonFiniteState { partial, .. } if !partial.is_empty() => Ok(*partial),
        SimError::NonFiniteState { t, .. } => Err(HarnessError::Diverged { t }),
        other => Err(HarnessError::Simulation(other)),
    }
}

/// Designs, simulates and measures one scenario. Divergence is not an
/// error: the outcome carries the partial run and a `Diverged` status.
pub fn run_scenario(scenario: &Scenario) -> Result<RunOutcome, HarnessError> {
    scenario.validate()?;
    let plant = build_plant(&scenario.plant)?;
    let built = build_design(&plant, &scenario.observer)?;
    let design = design_report(&plant, &built)?;
    let r = resolve_r(scenario, &built)?;
    let implementation = scenario.implementation();
    let noise = scenario.noise.to_signal();
    let schedule = match (r, &scenario.schedule) {
        (Some(r), Some(spec)) => Some(
            generate_schedule(r, spec.perturbation.to_source(), scenario.t_end)
                .map_err(|e| HarnessError::Simulation(e.into()))?,
        ),
        _ => None,
    };
    let step = scenario.step;

    let (series, status) = match (&built, implementation) {
        (BuiltDesign::Discrete(d), Implementation::Discrete) => {
            let schedule = schedule
                .as_ref()
                .expect("validated: discrete runs have a schedule");
            let s = simulate_discrete_observer(
                &plant,
                d,
                schedule,
                &scenario.x0,
                &scenario.z0,
                scenario.t_end,
            )
            .map_err(|e| match e {
                SimError::NonFiniteState { t, .. } => HarnessError::Diverged { t },
                other => HarnessError::Simulation(other),
            })?;
            (Series::Sampled(s), RunStatus::Completed)
        }
        (BuiltDesign::Continuous(d), implementation) => {
            let observer = d.observer();
            let result = match implementation {
                Implementation::SampledData => {
                    let schedule = schedule
                        .as_ref()
                        .expect("validated: sampled runs have a schedule");
                    let init = InitialState {
                        x0: scenario.x0.clone(),
                        z0: scenario.z0.clone(),
                        w0: scenario.w0,
                    };
                    let options = SimOptions {
                        step,
                        reset: scenario.reset.to_rule(),
                    };
                    simulate_sampled_data(
                        &plant,
                        observer,
                        schedule,
                        &noise,
                        &init,
                        scenario.t_end,
                        &options,
                    )
                }
                Implementation::Zoh => {
                    let schedule = schedule
                        .as_ref()
                        .expect("validated: sampled runs have a schedule");
                    simulate_zoh(
                        &plant,
                        observer,
                        schedule,
                        &noise,
                        &scenario.x0,
                        &scenario.z0,
                        scenario.t_end,
                        step,
                    )
                }
                Implementation::Continuous => {
                    let hold = r.unwrap_or(CONTINUOUS_NOISE_HOLD);
                    let v = noise.held(hold);
                    let step = step.unwrap_or_else(|| default_step(r.unwrap_or(f64::INFINITY)));
                    simulate_continuous(
                        &plant,
                        observer,
                        &v,
                        &scenario.x0,
                        &scenario.z0,
                        step,
                        scenario.t_end,
                    )
                }
                Implementation::Discrete => {
                    unreachable!("validated: discrete implementation needs a discrete observer")
                }
            };
            match result {
                Ok(traj) => (Series::Hybrid(traj), RunStatus::Completed),
                Err(err) => {
                    let t = match &err {
                        SimError::NonFiniteState { t, .. } => *t,
                        _ => f64::NAN,
                    };
                    (
                        Series::Hybrid(simulation_error(err)?),
                        RunStatus::Diverged { t },
                    )
                }
            }
        }
        (BuiltDesign::Discrete(_), _) => {
            unreachable!("validated: discrete observers run discretely")
        }
    };

    let metrics = match &series {
        Series::Hybrid(t) => compute_metrics(&t.times, &t.e, scenario.window, scenario.tolerance)?,
        Series::Sampled(s) => compute_metrics(&s.tau, &s.e, scenario.window, scenario.tolerance)?,
    };
    let certified = implementation == Implementation::SampledData
        && matches!((r, design.r_max), (Some(r), Some(bound)) if bound.certifies(r));
    Ok(RunOutcome {
        name: scenario.label(),
        implementation,
        design,
        r,
        certified,
        metrics,
        status,
        series,
    })
}

/// Runs every scenario; results keep the input order.
pub fn run_all(scenarios: &[Scenario], exec: Execution) -> Vec<Result<RunOutcome, HarnessError>> {
    exec.map(scenarios, run_scenario)
}

/// Runs scenarios that share plant and initial conditions side by side.
pub fn compare(scenarios: &[Scenario], exec: Execution) -> Result<Vec<RunOutcome>, HarnessError> {
    if let Some(first) = scenarios.first() {
        for s in &scenarios[1..] {
            if s.plant != first.plant || s.x0 != first.x0 || s.z0 != first.z0 {
                return Err(HarnessError::IncompatibleScenarios(format!(
                    "{} and {} differ in plant or initial conditions",
                    first.label(),
                    s.label()
                )));
            }
        }
    }
    run_all(scenarios, exec).into_iter().collect()
}

/// Outcome of one implementation at one sweep point.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "kebab-case")]
pub enum SweepCell {
    Ok {
        tail_amplitude: f64,
        tail_sup_error: f64,
        converged: bool,
    },
    Diverged {
        t: f64,
    },
    Failed {
        message: String,
    },
}

impl SweepCell {
    pub fn converged(&self) -> bool {
        matches!(
            self,
            Self::Ok {
                converged: true,
                ..
            }
        )
    }

    fn from_result(result: Result<RunOutcome, HarnessError>) -> Self {
        match result {
            Ok(o) => match o.status {
                RunStatus::Completed => Self::Ok {
                    tail_amplitude: o.metrics.max_tail_amplitude(),
                    tail_sup_error: o.metrics.tail_sup_error,
                    converged: o.metrics.converged(),
                },
                RunStatus::Diverged { t } => Self::Diverged { t },
            },
            Err(HarnessError::Diverged { t }) => Self::Diverged { t },
            Err(e) => Self::Failed {
                message: e.to_string(),
            },
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub r: f64,
    pub certified: bool,
    pub sampled_data: SweepCell,
    pub zoh: SweepCell,
}

/// Bracket of the smallest swept `r` where the sampled-data observer stops
/// converging.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Breakdown {
    pub converged_at: f64,
    pub failed_at: f64,
    pub estimate: f64,
    pub r_max: SamplingBound,
    pub exceeds_certificate: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub r_max: SamplingBound,
    pub rows: Vec<SweepRow>,
    pub breakdown: Option<Breakdown>,
}

fn with_r(base: &Scenario, r: f64, implementation: Implementation) -> Scenario {
    let mut s = base.clone();
    let mut schedule = s.schedule.clone().unwrap_or(super::config::ScheduleSpec {
        r: DiameterSpec::Value(r),
        perturbation: Default::default(),
    });
    schedule.r = DiameterSpec::Value(r);
    s.schedule = Some(schedule);
    s.implementation = Some(implementation);
    s
}

/// Runs sampled-data and zero-order-hold variants of `base` at every `r`.
/// Rows are sorted by `r`; failures are recorded per cell. With
/// `find_breakdown`, the first non-converging bracket is refined by
/// bisection.
pub fn sweep(
    base: &Scenario,
    r_values: &[f64],
    exec: Execution,
    find_breakdown: bool,
) -> Result<SweepReport, HarnessError> {
    base.validate().or_else(|e| match (&base.schedule, e) {
        // A base without schedule is fine: every row supplies its own.
        (None, ConfigError::Invalid(_)) => Ok(()),
        (_, e) => Err(e),
    })?;
    if let Some(bad) = r_values.iter().find(|r| !(**r > 0.0) || !r.is_finite()) {
        return Err(ConfigError::Invalid(format!("r values must be positive, got {bad}")).into());
    }
    let plant = build_plant(&base.plant)?;
    let built = build_design(&plant, &base.observer)?;
    let r_max = built
        .max_sampling_period()
        .ok_or_else(|| ConfigError::Invalid("sweeps need a continuous-time design".into()))?;

    let mut rs = r_values.to_vec();
    rs.sort_by(f64::total_cmp);
    rs.dedup();
    let jobs: Vec<(f64, Implementation)> = rs
        .iter()
        .flat_map(|&r| [(r, Implementation::SampledData), (r, Implementation::Zoh)])
        .collect();
    let cells = exec.map(&jobs, |&(r, imp)| {
        SweepCell::from_result(run_scenario(&with_r(base, r, imp)))
    });
    let rows: Vec<SweepRow> = rs
        .iter()
        .zip(cells.chunks(2))
        .map(|(&r, pair)| SweepRow {
            r,
            certified: r_max.certifies(r),
            sampled_data: pair[0].clone(),
            zoh: pair[1].clone(),
        })
        .collect();

    let breakdown = if find_breakdown {
        rows.iter()
            .position(|row| !row.sampled_data.converged())
            .filter(|&i| i > 0)
            .map(|i| {
                let (mut lo, mut hi) = (rows[i - 1].r, rows[i].r);
                for _ in 0..BREAKDOWN_BISECTIONS {
                    let mid = 0.5 * (lo + hi);
                    let cell = SweepCell::from_result(run_scenario(&with_r(
                        base,
                        mid,
                        Implementation::SampledData,
                    )));
                    if cell.converged() {
                        lo = mid;
                    } else {
                        hi = mid;
                    }
                }
                let estimate = 0.5 * (lo + hi);
                Breakdown {
                    converged_at: lo,
                    failed_at: hi,
                    estimate,
                    r_max,
                    exceeds_certificate: !r_max.certifies(lo),
                }
            })
    } else {
        None
    };
    Ok(SweepReport {
        r_max,
        rows,
        breakdown,
    })
}

fn cell_columns(cell: &SweepCell) -> [String; 4] {
    match cell {
        SweepCell::Ok {
            tail_amplitude,
            tail_sup_error,
            converged,
        } => [
            "ok".into(),
            format!("{tail_amplitude}"),
            format!("{tail_sup_error}"),
            converged.to_string(),
        ],
        SweepCell::Diverged { .. } => [
            "diverged".into(),
            String::new(),
            String::new(),
            "false".into(),
        ],
        SweepCell::Failed { .. } => [
            "failed".into(),
            String::new(),
            String::new(),
            "false".into(),
        ],
    }
}

/// `r,certified,sd_status,sd_tail_amplitude,sd_tail_sup,sd_converged,zoh_…`.
pub fn write_sweep_csv<W: Write>(out: W, report: &SweepReport) -> Result<(), HarnessError> {
    let mut wtr = csv::Writer::from_writer(out);
    wtr.write_record([
        "r",
        "certified",
        "sd_status",
        "sd_tail_amplitude",
        "sd_tail_sup",
        "sd_converged",
        "zoh_status",
        "zoh_tail_amplitude",
        "zoh_tail_sup",
        "zoh_converged",
    ])?;
    for row in &report.rows {
        let mut rec = vec![format!("{}", row.r), row.certified.to_string()];
        rec.extend(cell_columns(&row.sampled_data));
        rec.extend(cell_columns(&row.zoh));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn opt(v: Option<f64>) -> String {
    v.map_or_else(String::new, |v| format!("{v}"))
}

fn status_label(status: RunStatus) -> &'static str {
    match status {
        RunStatus::Completed => "completed",
        RunStatus::Diverged { .. } => "diverged",
    }
}

/// One row per outcome: design constants, then run metrics.
pub fn write_metrics_csv<W: Write>(out: W, outcomes: &[RunOutcome]) -> Result<(), HarnessError> {
    let n = outcomes
        .iter()
        .map(|o| o.metrics.tail_amplitude.len())
        .max()
        .unwrap_or(0);
    let mut wtr = csv::Writer::from_writer(out);
    let mut head: Vec<String> = [
        "scenario",
        "implementation",
        "status",
        "r",
        "certified",
        "converged",
        "K",
        "r_max",
        "K1",
        "K2",
        "mu",
        "gamma",
        "theta",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    head.extend((1..=n).map(|i| format!("tail_amplitude_e{i}")));
    head.extend(["convergence_time", "sup_error", "tail_sup_error"].map(String::from));
    wtr.write_record(&head)?;
    for o in outcomes {
        let d = &o.design;
        let mut rec = vec![
            o.name.clone(),
            o.implementation.as_str().to_string(),
            status_label(o.status).to_string(),
            opt(o.r),
            o.certified.to_string(),
            o.converged().to_string(),
            opt(d.mismatch_constant),
            d.r_max.map_or_else(String::new, |b| b.to_string()),
            opt(d.k1),
            opt(d.k2),
            opt(d.mu),
            opt(d.gamma),
            opt(d.theta),
        ];
        rec.extend((0..n).map(|j| opt(o.metrics.tail_amplitude.get(j).copied())));
        rec.push(o.metrics.convergence_label());
        rec.push(format!("{}", o.metrics.sup_error));
        rec.push(format!("{}", o.metrics.tail_sup_error));
        wtr.write_record(&rec)?;
    }
    wtr.flush()?;
    Ok(())
}

fn table(head: &[String], rows: &[Vec<String>]) -> String {
    let mut widths: Vec<usize> = head.iter().map(|h| h.chars().count()).collect();
    for row in rows {
        for (w, cell) in widths.iter_mut().zip(row) {
            *w = (*w).max(cell.chars().count());
        }
    }
    let line = |cells: &[String]| {
        cells
            .iter()
            .zip(&widths)
            .map(|(c, w)| format!("{c:<w$}"))
            .collect::<Vec<_>>()
            .join("  ")
            .trim_end()
            .to_string()
    };
    let mut out = line(head);
    out.push('\n');
    for row in rows {
        out.push_str(&line(row));
        out.push('\n');
    }
    out
}

fn short(v: f64) -> String {
    format!("{v:.4e}")
}

/// Aligned text version of the metrics table.
pub fn metrics_table(outcomes: &[RunOutcome]) -> String {
    let n = outcomes
        .iter()
        .map(|o| o.metrics.tail_amplitude.len())
        .max()
        .unwrap_or(0);
    let mut head: Vec<String> = ["scenario", "impl", "status", "r", "r_max", "cert", "conv"]
        .iter()
        .map(|s| s.to_string())
        .collect();
    head.extend((1..=n).map(|i| format!("amp_e{i}")));
    head.extend(["t_conv", "sup|e|", "tail|e|"].map(String::from));
    let rows: Vec<Vec<String>> = outcomes
        .iter()
        .map(|o| {
            let mut row = vec![
                o.name.clone(),
                o.implementation.as_str().to_string(),
                status_label(o.status).to_string(),
                o.r.map_or_else(|| "-".into(), |r| format!("{r}")),
                o.design.r_max.map_or_else(
                    || "-".into(),
                    |b| match b {
                        SamplingBound::Bounded(v) => format!("{v:.6}"),
                        SamplingBound::Unbounded => "unbounded".into(),
                    },
                ),
                if o.certified { "yes" } else { "no" }.to_string(),
                if o.converged() { "yes" } else { "no" }.to_string(),
            ];
            row.extend((0..n).map(|j| {
                o.metrics
                    .tail_amplitude
                    .get(j)
                    .map_or_else(String::new, |v| short(*v))
            }));
            row.push(
                o.metrics
                    .convergence_time
                    .map_or_else(|| "never".into(), |t| format!("{t:.3}")),
            );
            row.push(short(o.metrics.sup_error));
            row.push(short(o.metrics.tail_sup_error));
            row
        })
        .collect();
    table(&head, &rows)
}

/// Aligned text version of a sweep.
pub fn sweep_table(report: &SweepReport) -> String {
    let head: Vec<String> = [
        "r", "cert", "sd", "sd_amp", "sd_conv", "zoh", "zoh_amp", "zoh_conv",
    ]
    .iter()
    .map(|s| s.to_string())
    .collect();
    let rows: Vec<Vec<String>> = report
        .rows
        .iter()
        .map(|row| {
            let sd = cell_columns(&row.sampled_data);
            let zoh = cell_columns(&row.zoh);
            let amp = |s: &str| s.parse::<f64>().map_or_else(|_| "-".to_string(), short);
            vec![
                format!("{}", row.r),
                if row.certified { "yes" } else { "no" }.into(),
                sd[0].clone(),
                amp(&sd[1]),
                sd[3].clone(),
                zoh[0].clone(),
                amp(&zoh[1]),
                zoh[3].clone(),
            ]
        })
        .collect();
    table(&head, &rows)
}

/// Writes the per-run files of `outcome` into `dir`: `trajectory.csv` and
/// `jumps.csv` for continuous-time observers, `errors.csv` for the discrete
/// one, plus `design.json`.
pub fn write_run_outputs(
    dir: &std::path::Path,
    outcome: &RunOutcome,
    stride: usize,
) -> Result<(), HarnessError> {
    std::fs::create_dir_all(dir)?;
    let file = |name: &str| -> Result<std::io::BufWriter<std::fs::File>, HarnessError> {
        Ok(std::io::BufWriter::new(std::fs::File::create(
            dir.join(name),
        )?))
    };
    match &outcome.series {
        Series::Hybrid(traj) => {
            write_trajectory(file("trajectory.csv")?, traj, stride)?;
            write_jumps(file("jumps.csv")?, traj)?;
        }
        Series::Sampled(series) => series.write_csv(file("errors.csv")?)?,
    }
    let mut json = serde_json::to_string_pretty(&outcome.design)
        .map_err(|e| HarnessError::Io(e.to_string()))?;
    json.push('\n');
    std::fs::write(dir.join("design.json"), json)?;
    Ok(())
}

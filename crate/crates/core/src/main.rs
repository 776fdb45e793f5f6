use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use sdobs::exec::Execution;
use sdobs::harness::{
    compare, metrics_table, run_all, run_design, sweep, sweep_table, write_metrics_csv,
    write_run_outputs, write_sweep_csv, ConfigDocument, ConfigError, HarnessError, RunOutcome,
    RunStatus, Scenario,
};

#[derive(Parser)]
#[command(
    name = "sdobs",
    version,
    about = "Design and simulate sampled-data observers"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args)]
struct Overrides {
    /// Replace every random seed in the selected scenarios.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Fixed integration step.
    #[arg(long, global = true)]
    step: Option<f64>,
    /// Simulation horizon.
    #[arg(long, global = true)]
    t_end: Option<f64>,
    /// Run scenarios one after another instead of in parallel.
    #[arg(long, global = true)]
    sequential: bool,
}

#[derive(Args)]
struct Selection {
    /// Config file, or `builtin` for the shipped presets.
    config: String,
    /// Run only these presets (repeatable).
    #[arg(long = "preset")]
    presets: Vec<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Print the observer design and its certified sampling period.
    Design {
        #[command(flatten)]
        selection: Selection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Simulate scenarios and write trajectories and metrics.
    Simulate {
        #[command(flatten)]
        selection: Selection,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Run scenarios that share plant and initial conditions side by side.
    Compare {
        #[command(flatten)]
        selection: Selection,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Sweep the sampling diameter for sampled-data and zero-order-hold runs.
    Sweep {
        #[command(flatten)]
        selection: Selection,
        #[arg(long, value_delimiter = ',', required = true)]
        r_values: Vec<f64>,
        /// Bisect the first bracket where the sampled-data run stops converging.
        #[arg(long)]
        breakdown: bool,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn load(selection: &Selection, overrides: &Overrides) -> Result<Vec<Scenario>, HarnessError> {
    let doc = if selection.config == "builtin" {
        ConfigDocument::builtin()
    } else {
        let text = fs::read_to_string(&selection.config)
            .map_err(|e| ConfigError::Parse(format!("{}: {e}", selection.config)))?;
        ConfigDocument::parse(&text)?
    };
    let scenarios = if selection.presets.is_empty() {
        doc.scenarios()?
    } else {
        selection
            .presets
            .iter()
            .map(|p| doc.preset(p))
            .collect::<Result<_, _>>()?
    };
    scenarios
        .into_iter()
        .map(|mut s| {
            if let Some(seed) = overrides.seed {
                s = s.with_seed(seed);
            }
            if let Some(step) = overrides.step {
                s.step = Some(step);
            }
            if let Some(t_end) = overrides.t_end {
                s.t_end = t_end;
            }
            s.validate()?;
            Ok(s)
        })
        .collect()
}

fn execution(overrides: &Overrides) -> Execution {
    if overrides.sequential {
        Execution::Sequential
    } else {
        Execution::Parallel
    }
}

fn write_metrics(path: &Path, outcomes: &[RunOutcome]) -> Result<(), HarnessError> {
    if let Some(parent) = path.parent() {
        fs::create_dir_all(parent)?;
    }
    write_metrics_csv(fs::File::create(path)?, outcomes)
}

fn divergence(outcomes: &[RunOutcome]) -> Option<HarnessError> {
    outcomes.iter().find_map(|o| match o.status {
        RunStatus::Diverged { t } => {
            eprintln!("{}: diverged at t = {t}; outputs are partial", o.name);
            Some(HarnessError::Diverged { t })
        }
        RunStatus::Completed => None,
    })
}

fn design(
    selection: &Selection,
    overrides: &Overrides,
    out: Option<&Path>,
) -> Result<(), HarnessError> {
    let scenarios = load(selection, overrides)?;
    for s in &scenarios {
        let report = run_design(s)?;
        let json =
            serde_json::to_string_pretty(&report).map_err(|e| HarnessError::Io(e.to_string()))?;
        println!("# {}\n{json}", s.label());
        if let Some(dir) = out {
            let dir = if scenarios.len() > 1 {
                dir.join(s.label())
            } else {
                dir.to_path_buf()
            };
            fs::create_dir_all(&dir)?;
            fs::write(dir.join("design.json"), json + "\n")?;
        }
    }
    Ok(())
}

fn simulate(selection: &Selection, overrides: &Overrides, out: &Path) -> Result<(), HarnessError> {
    let scenarios = load(selection, overrides)?;
    let results = run_all(&scenarios, execution(overrides));
    let mut outcomes = Vec::new();
    let mut first_error = None;
    for (s, result) in scenarios.iter().zip(results) {
        match result {
            Ok(outcome) => {
                let dir = if scenarios.len() > 1 {
                    out.join(s.label())
                } else {
                    out.to_path_buf()
                };
                write_run_outputs(&dir, &outcome, s.stride)?;
                outcomes.push(outcome);
            }
            Err(e) => {
                eprintln!("{}: {e}", s.label());
                first_error.get_or_insert(e);
            }
        }
    }
    if !outcomes.is_empty() {
        write_metrics(&out.join("metrics.csv"), &outcomes)?;
        print!("{}", metrics_table(&outcomes));
    }
    match first_error.or_else(|| divergence(&outcomes)) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn compare_cmd(
    selection: &Selection,
    overrides: &Overrides,
    out: Option<&Path>,
) -> Result<(), HarnessError> {
    let scenarios = load(selection, overrides)?;
    let outcomes = compare(&scenarios, execution(overrides))?;
    if let Some(dir) = out {
        write_metrics(&dir.join("metrics.csv"), &outcomes)?;
    }
    print!("{}", metrics_table(&outcomes));
    match divergence(&outcomes) {
        Some(e) => Err(e),
        None => Ok(()),
    }
}

fn sweep_cmd(
    selection: &Selection,
    overrides: &Overrides,
    r_values: &[f64],
    breakdown: bool,
    out: Option<&Path>,
) -> Result<(), HarnessError> {
    let scenarios = load(selection, overrides)?;
    let [base] = scenarios.as_slice() else {
        return Err(ConfigError::Invalid(format!(
            "sweep needs exactly one base scenario, the selection has {}",
            scenarios.len()
        ))
        .into());
    };
    let report = sweep(base, r_values, execution(overrides), breakdown)?;
    if let Some(dir) = out {
        fs::create_dir_all(dir)?;
        write_sweep_csv(fs::File::create(dir.join("sweep.csv"))?, &report)?;
    }
    println!("r_max = {}", report.r_max);
    print!("{}", sweep_table(&report));
    if let Some(b) = report.breakdown {
        println!(
            "breakdown r* in [{}, {}], estimate {:.6}; exceeds r_max: {}",
            b.converged_at, b.failed_at, b.estimate, b.exceeds_certificate
        );
    } else if breakdown {
        println!("breakdown: no bracket within the swept values");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let o = &cli.overrides;
    let result = match &cli.command {
        Command::Design { selection, out } => design(selection, o, out.as_deref()),
        Command::Simulate { selection, out } => simulate(selection, o, out),
        Command::Compare { selection, out } => compare_cmd(selection, o, out.as_deref()),
        Command::Sweep {
            selection,
            r_values,
            breakdown,
            out,
        } => sweep_cmd(selection, o, r_values, *breakdown, out.as_deref()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

//! Scenario configs, the design/simulate/measure pipeline, comparisons and
//! sampling-period sweeps.

pub mod config;
mod metrics;
mod run;

pub use config::{ConfigDocument, ConfigError, Implementation, Scenario};
pub use metrics::{compute_metrics, Metrics, MetricsError};
pub use run::{
    build_design, build_plant, compare, design_report, metrics_table, run_all, run_design,
    run_scenario, sweep, sweep_table, write_metrics_csv, write_run_outputs, write_sweep_csv,
    Breakdown, BuiltDesign, DesignReport, HarnessError, RunOutcome, RunStatus, Series, SweepCell,
    SweepReport, SweepRow,
};

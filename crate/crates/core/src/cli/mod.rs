//! Experiment plumbing behind the `noisealloc` binary: TOML configs, run
//! records (`rounds.csv` plus `summary.toml`), text reports and plot data.

mod config;
mod record;
mod report;
mod run;

pub use config::{
    Backend, ExperimentConfig, GridParams, McParams, ModelParams, PSpec, Problem, ScheduleKind, SgdParams,
    SimplexRule, SolverParams,
};
pub use record::{RoundRow, RunRecord, RunSummary, ROUNDS_FILE, SUMMARY_FILE};
pub use report::{
    denoiser_fixture, emit_report, fixture_row, format_percentages, percentage_tenths, render_table, FixtureEntry,
    ReportFiles, GAP_CURVE_FILE, LAMBDA_TRAJECTORY_FILE, REPORT_FILE,
};
pub use run::{
    execute, exit_code, oracle_for, run_experiment, run_oracle, OracleReport, RunOutcome, EXIT_CONFIG, EXIT_IO,
    EXIT_NOT_CONVERGED, EXIT_OK, EXIT_OTHER, ORACLE_FILE,
};

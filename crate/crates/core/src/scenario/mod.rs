//! Scenario files, the runner, and report emission.

mod config;
mod report;
mod runner;

pub use config::{
    bundled, with_parameter, BarrierConfig, Check, GridConfig, ProvenanceChoice, ScenarioConfig, SourceConfig,
    TargetConfig, ToleranceConfig, BUNDLED,
};
pub use report::{
    fmt_float, profile_csv, report_csv, sort_rows, summary_text, write_atomic, ProfileRecord, ReportRow,
    ERROR_RESIDUAL, HEADER, PROFILE_HEADER,
};
pub use runner::{
    restrict_checks, run_scenario, scenario_dir, sweep, write_outcome, write_sweep, RunOptions, ScenarioOutcome,
    SweepOutcome, BARRIER_SLACK, SLOPE_DECADES, SLOPE_TOLERANCE,
};

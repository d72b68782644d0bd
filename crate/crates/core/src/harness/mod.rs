//! Config-driven experiment runs: parse configs, run single experiments or
//! grids, persist records as JSON lines and render results tables.

mod config;
mod records;
mod report;
mod runner;

pub use config::{load_grid, parse_grid, ArchitectureSpec, DatasetSpec, ExperimentConfig, ScenarioSpec};
pub use records::{load_records, persist_records, Environment, ExperimentRecord, SCHEMA_VERSION};
pub use report::{emit_report, parse_csv_report, render_rows, rows_with_baselines, ReportFormat, ReportRow, COLUMNS};
pub use runner::{baseline_key, run_experiment, run_grid, Runner, CACHE_DIR_ENV};

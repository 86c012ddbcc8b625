//! Experiment driver behind the `bmean` binary.

mod config;
mod run;
mod verify;

pub use config::{ConfigError, ExperimentConfig, Grid, Mode, Phantom, Radii, Window, DEFAULT_TOL, DEFAULT_T_EVAL};
pub use run::{plan_for, run_forward, run_invert, run_spectral, status_tag, Cell, RunError, Table};
pub use verify::{report_table, run_suites, SuiteReport, Verdict, SUITE_TOL};

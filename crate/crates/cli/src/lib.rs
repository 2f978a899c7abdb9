//! Configuration, experiment runners, and report schemas behind the `rtz`
//! command-line tool.

pub mod config;
pub mod experiments;
pub mod report;

pub use config::{Config, ConfigError, ExperimentKind, ExperimentSpec};
pub use experiments::{
    run_corollary1, run_experiment, run_moment_vanishing, run_proposition1,
    run_theorem1_box_reduction, RunError,
};
pub use report::REPORT_SCHEMA_VERSION;

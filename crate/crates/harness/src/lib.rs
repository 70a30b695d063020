//! Experiment catalog, suites, reporting and plotting for the `loctime` library.

pub mod config;
pub mod error;
pub mod experiments;
pub mod plot;
pub mod report;
pub mod sim;
pub mod suite;

pub use config::{ConfigFile, ExperimentConfig, Settings, Suite};
pub use error::{HarnessError, Result};
pub use report::{ReportRecord, SuiteReport};
pub use suite::{run_experiment, run_suite, RunOptions, RunResult, SuiteOptions};

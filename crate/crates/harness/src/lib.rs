//! Experiment harness for `mgd-core`: configuration, multi-start runs,
//! report and trace files, and the `mgd` command line.

pub mod cli;
pub mod config;
pub mod error;
pub mod experiment;
pub mod output;

pub use config::{ExperimentConfig, OutputFormat, ProblemId, TraceLevel, Variant};
pub use error::{HarnessError, HarnessResult};
pub use experiment::{run_experiment, ExperimentReport};

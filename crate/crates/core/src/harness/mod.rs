//! Experiment runner, worked-example check and completeness oracle behind
//! the `seedqkd` command line.

pub mod config;
pub mod experiment;
pub mod golden;
pub mod oracle;
pub mod stats;

pub use config::{EveChoice, ExperimentConfig};
pub use experiment::{run_experiment, ExperimentReport, TrialStats};
pub use golden::{golden_table1, GoldenFailure, GoldenOutcome};
pub use oracle::{completeness_check, OracleReport};

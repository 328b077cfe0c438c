//! Monte Carlo harness: scenario files, replications, quantile tables and
//! their CSV forms.

pub mod config;
pub mod csv;
pub mod report;
pub mod run;

pub use config::{
    Cell, CellData, CellModel, EstimatorEntry, EstimatorKind, EstimatorSpec, Grid, ModelConfig,
    PatternKind, ScenarioConfig,
};
pub use report::{empirical_quantile, log_log_slope, rate_table, GroupField, RateRow};
pub use run::{
    estimator_seed, mom_blocks, replication_seed, run_estimator, run_scenario, Estimate,
    ResultRecord, RunOptions, RunOutput,
};

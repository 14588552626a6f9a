//! Config-driven experiment runner: seeded runs, EXTRA stepsize tuning,
//! CSV traces and the four experiment suites.

mod config;
mod problem;
mod run;
mod suite;
mod trace_csv;
mod tune;

use std::path::PathBuf;

use thiserror::Error;

use crate::algorithms::AlgorithmError;
use crate::losses::LossError;
use crate::metrics::MetricsError;

pub use config::{
    AlgorithmKind, AlgorithmSpec, ProblemSpec, RunConfig, SafeguardSpec, DEFAULT_MAX_ITERATIONS,
    DEFAULT_MAX_VECTOR_ROUNDS, DEFAULT_ORACLE_TOL, DEFAULT_TOLERANCE,
};
pub use problem::{Problem, ProblemClass};
pub use run::{describe_config, run, run_problem, MeritRow, RunOptions, RunStatus, RunTrace};
pub use suite::{
    experiment_suite, suite_members, write_summary, SuiteMember, SuiteName, SuiteOptions, SuiteReport,
    SummaryRow, CONDITION_LAMBDAS, DENSE_GRAPH_SEED, DIAMETER_AGENTS, LOGISTIC_MAX_VECTOR_ROUNDS,
    LOGISTIC_SAMPLES_PER_AGENT, LOGISTIC_TOLERANCE, PARTITION_SEED, QUADRATIC_SEED, SPARSE_GRAPH_SEED,
    SUITE_AGENTS, SUMMARY_HEADER,
};
pub use trace_csv::{fmt_float, save_trace, write_trace, CSV_HEADER};
pub use tune::{default_alpha_grid, tune_extra, TuneAttempt, TuneOutcome};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("data file not found: {}", .0.display())]
    MissingData(PathBuf),
    #[error("unknown suite {0:?} (expected quadratic_graphs, condition_sweep, diameter_sweep or logistic_graphs)")]
    UnknownSuite(String),
    #[error("no EXTRA stepsize reached the target: {}", summarize_attempts(.0))]
    Tuning(Vec<TuneAttempt>),
    #[error(transparent)]
    Loss(#[from] LossError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Algorithm(#[from] AlgorithmError),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    /// Whether the error stems from the user's input rather than the run.
    pub fn is_config_error(&self) -> bool {
        matches!(
            self,
            HarnessError::Config(_) | HarnessError::MissingData(_) | HarnessError::UnknownSuite(_)
        )
    }
}

fn summarize_attempts(attempts: &[TuneAttempt]) -> String {
    attempts
        .iter()
        .map(|a| format!("alpha={:e} {}", a.alpha, a.status))
        .collect::<Vec<_>>()
        .join(", ")
}

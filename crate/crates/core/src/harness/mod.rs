//! Seeded multi-replication experiments, window sweeps and oracle reports.

mod config;
mod run;

pub use config::{BuiltEnv, EnvSpec, ExperimentConfig, GammaRule, GammaSpec, PolicySpec, SweepSpec};
pub use run::{
    downsample_indices, oracle, run, run_in_memory, sweep_window, CurveStats, OracleReport, PolicyResult,
    RunResult, SweepRow, PLOT_POINTS,
};

use thiserror::Error;

use crate::bandit::BanditError;
use crate::env::TraceError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Invalid(Vec<String>),
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Trace(#[from] TraceError),
    #[error(transparent)]
    Bandit(#[from] BanditError),
    #[error("{0}")]
    Unsupported(String),
}

impl HarnessError {
    pub fn is_validation(&self) -> bool {
        matches!(self, HarnessError::Invalid(_))
    }
}

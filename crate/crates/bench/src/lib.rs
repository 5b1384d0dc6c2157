//! Multi-trial benchmark harness for the `splitmerge` solvers: runs every
//! configured solver on shared start vectors, aggregates iteration, matvec
//! and wall-time statistics, and writes JSON/CSV reports plus per-run traces.

pub mod config;
pub mod experiment;
pub mod report;
pub mod traces;

use std::path::PathBuf;

use splitmerge::linop::LinopError;
use splitmerge::matgen::MatgenError;
use splitmerge::theory::TheoryError;
use thiserror::Error;

pub use config::{ExperimentConfig, MatrixSource, RhoSetting, SolverSpec, StopModeSetting};
pub use experiment::{run_experiment, ExperimentOutput, RunOutcome, RunRecord};
pub use report::{RunReport, SolverSummary, Summary};
pub use traces::{emit_traces, read_trace, TraceRow};

#[derive(Debug, Error)]
pub enum BenchError {
    #[error("config error: {0}")]
    Config(String),
    #[error("cannot parse config: {0}")]
    Toml(#[from] toml::de::Error),
    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
    #[error(transparent)]
    Matgen(#[from] MatgenError),
    #[error(transparent)]
    Linop(#[from] LinopError),
    #[error("ground truth: {0}")]
    GroundTruth(#[from] TheoryError),
}

impl BenchError {
    /// 2 for I/O failures, 1 for everything the user can fix in the config.
    pub fn exit_code(&self) -> u8 {
        match self {
            BenchError::Io { .. } | BenchError::Csv(_) | BenchError::Json(_) => 2,
            BenchError::Linop(LinopError::Io(_)) => 2,
            _ => 1,
        }
    }

    pub(crate) fn io(path: impl Into<PathBuf>, source: std::io::Error) -> Self {
        BenchError::Io {
            path: path.into(),
            source,
        }
    }
}

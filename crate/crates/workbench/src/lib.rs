//! Experiment sweeps over the twisted and periodic XXZ chain: configuration,
//! orchestration with a per-point cache, CSV/JSON/SVG emission and the
//! verification suite behind the `twistbethe` binary.

pub mod cache;
pub mod config;
pub mod emit;
pub mod experiments;
pub mod record;
pub mod run;
pub mod svg;
pub mod verify;

pub use config::{Experiment, ExperimentConfig, FitSpec};
pub use record::{ResultRecord, Status};
pub use run::{run, RunOutcome};

#[derive(Debug, thiserror::Error)]
pub enum WorkbenchError {
    #[error("configuration: {0}")]
    Config(String),
    #[error("emit: {0}")]
    Emit(String),
    #[error("{0}")]
    Solver(String),
    #[error("i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv: {0}")]
    Csv(#[from] csv::Error),
    #[error("json: {0}")]
    Json(#[from] serde_json::Error),
}

impl WorkbenchError {
    /// Process exit code: 2 for bad configuration, 1 otherwise.
    pub fn exit_code(&self) -> u8 {
        match self {
            WorkbenchError::Config(_) => 2,
            _ => 1,
        }
    }
}

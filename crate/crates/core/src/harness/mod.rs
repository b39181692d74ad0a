//! Metrics, experiment files and the commands behind the CLI.

mod check;
mod config;
mod report;
mod run;

pub use check::{gradient_suite, input_derivative_suite, CheckRow, LossFamily};
pub use config::{EvaluationConfig, ExperimentConfig, ModeName, Networks, OutputConfig, ReferenceConfig, UqConfig};
pub use report::{evaluate, relative_l2, ErrorReport, FieldTable};
pub use run::{evaluation_x, prediction_table, run_evaluate, run_grad_check, run_reference, run_train, run_uq, UqOptions};

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::fvref::FvError;
use crate::mlp::MlpError;
use crate::systems::SystemError;
use crate::trainer::TrainError;
use crate::uq::ReferenceError;

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("invalid config: {0}")]
    Config(String),
    #[error("missing reference: {0} (run `relaxnn reference` first)")]
    MissingReference(PathBuf),
    #[error("missing parameters: {0} (run `relaxnn train` first)")]
    MissingParams(PathBuf),
    #[error("fields do not match: {0}")]
    Mismatch(String),
    #[error("the reference field has zero norm")]
    ZeroReference,
    #[error("malformed table {path}: {reason}")]
    Table { path: PathBuf, reason: String },
    #[error(transparent)]
    Train(#[from] TrainError),
    #[error(transparent)]
    Solver(#[from] FvError),
    #[error(transparent)]
    Network(#[from] MlpError),
    #[error(transparent)]
    System(#[from] SystemError),
    #[error(transparent)]
    Reference(#[from] ReferenceError),
    #[error(transparent)]
    Csv(#[from] csv::Error),
}

impl HarnessError {
    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }
}

impl From<toml::de::Error> for HarnessError {
    fn from(e: toml::de::Error) -> Self {
        Self::Config(e.to_string())
    }
}

impl From<toml::ser::Error> for HarnessError {
    fn from(e: toml::ser::Error) -> Self {
        Self::Config(e.to_string())
    }
}

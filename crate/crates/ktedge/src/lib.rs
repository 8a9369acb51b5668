//! Experiment driver: config loading, the pretrain / semi-train / online
//! pipeline, artifact layout, and expected-versus-actual comparison.

pub mod artifacts;
pub mod compare;
pub mod config;
pub mod pipeline;

pub use compare::{compare, Comparison, OffsetRow};
pub use config::{load_config, parse_config, ExperimentConfig, SCHEMA};
pub use pipeline::{run_experiment, ArmSummary, Experiment, KSummary};

use ktedge_core::data::DataError;
use ktedge_core::kt::KtError;
use ktedge_core::metrics::MetricsError;
use ktedge_core::models::ModelError;
use ktedge_link::LinkError;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ExpError {
    #[error("invalid configuration:\n  {}", .0.join("\n  "))]
    Validation(Vec<String>),
    #[error("stage order: {0}")]
    StageOrder(String),
    #[error("{0}")]
    Runtime(String),
}

impl ExpError {
    /// Process exit status: 1 for validation problems, 2 for runtime failures.
    pub fn exit_code(&self) -> i32 {
        match self {
            ExpError::Validation(_) | ExpError::StageOrder(_) => 1,
            ExpError::Runtime(_) => 2,
        }
    }

    pub fn invalid(msg: impl Into<String>) -> Self {
        ExpError::Validation(vec![msg.into()])
    }
}

impl From<DataError> for ExpError {
    fn from(e: DataError) -> Self {
        match e {
            DataError::InsufficientExamples { .. } | DataError::InvalidArgument(_) => ExpError::invalid(e.to_string()),
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

impl From<KtError> for ExpError {
    fn from(e: KtError) -> Self {
        match e {
            KtError::NonBijective(_) | KtError::ClassCountMismatch { .. } => ExpError::invalid(format!("/mapping: {e}")),
            other => ExpError::Runtime(other.to_string()),
        }
    }
}

impl From<ModelError> for ExpError {
    fn from(e: ModelError) -> Self {
        ExpError::Runtime(e.to_string())
    }
}

impl From<MetricsError> for ExpError {
    fn from(e: MetricsError) -> Self {
        ExpError::Runtime(e.to_string())
    }
}

impl From<LinkError> for ExpError {
    fn from(e: LinkError) -> Self {
        ExpError::Runtime(e.to_string())
    }
}

impl From<std::io::Error> for ExpError {
    fn from(e: std::io::Error) -> Self {
        ExpError::Runtime(e.to_string())
    }
}

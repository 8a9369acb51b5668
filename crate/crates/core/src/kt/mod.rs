//! Knowledge transformation: class mapping, pseudo-labels, the online
//! training loop, four-case diagnostics and the stop monitor.

mod cases;
mod mapping;
mod protocol;
mod stop;

pub use cases::{step_case, CaseCounts, StepCase};
pub use mapping::{build_class_mapping, ClassMapping, MappingSpec};
pub use protocol::{
    evaluate, kt_run, run_online, teacher_predict, KtOptions, LabelSource, RunResult, StepRecord, StopReason, Teacher,
};
pub use stop::{stop_check, StopCondition};

use thiserror::Error;

use crate::models::ModelError;

#[derive(Debug, Error)]
pub enum KtError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("teacher has {teacher} classes but student has {student}")]
    ClassCountMismatch { teacher: usize, student: usize },
    #[error("mapping is not a bijection: {0}")]
    NonBijective(String),
    #[error("teacher label {0} has no mapped student class")]
    UnmappedLabel(usize),
    #[error("paired stream: {0}")]
    PairedStream(String),
    #[error(transparent)]
    Model(#[from] ModelError),
    /// Loss of the label source mid-run; the loop stops and keeps what it has.
    #[error("transport: {0}")]
    Transport(String),
}

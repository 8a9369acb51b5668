//! The simplified SqueezeNet, the MLP surrogate, training, and checkpoints.

mod build;
mod checkpoint;
mod layers;
mod model;
mod optimizer;
mod train;

pub use build::{
    build_mlp, build_simplified_squeezenet, squeezenet_param_count, FireModuleConfig, CONV1_FEATURE_MAPS, FIRE1,
    FIRE2, FIRE3, FIRE4, HEAD_DROPOUT,
};
pub use checkpoint::{
    decode_checkpoint, encode_checkpoint, load_checkpoint, load_checkpoint_expecting, save_checkpoint,
    CHECKPOINT_MAGIC, CHECKPOINT_VERSION,
};
pub use layers::{Cache, Fire, FireCache, Layer};
pub use model::{Architecture, Model};
pub use optimizer::Adam;
pub use train::{fit, fit_with_progress, stratified_split, BestCheckpoint, EpochStats, FitOutcome, Monitor, TrainSettings};

use thiserror::Error;

use crate::nn::NnError;

#[derive(Debug, Error)]
pub enum ModelError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error("checkpoint i/o: {0}")]
    Io(#[from] std::io::Error),
    #[error("not a checkpoint (bad magic)")]
    BadMagic,
    #[error("unsupported checkpoint version {0}")]
    UnsupportedVersion(u16),
    #[error("truncated checkpoint: {0}")]
    Truncated(String),
    #[error("unreadable architecture descriptor {0:?}")]
    BadDescriptor(String),
    #[error("architecture mismatch: expected {expected}, found {found}")]
    ArchitectureMismatch { expected: String, found: String },
}

impl ModelError {
    /// Stable numeric code per failure kind, used as the process exit detail.
    pub fn code(&self) -> u16 {
        match self {
            ModelError::InvalidArgument(_) => 1,
            ModelError::Nn(_) => 2,
            ModelError::Io(_) => 3,
            ModelError::BadMagic => 10,
            ModelError::UnsupportedVersion(_) => 11,
            ModelError::Truncated(_) => 12,
            ModelError::BadDescriptor(_) => 13,
            ModelError::ArchitectureMismatch { .. } => 14,
        }
    }
}

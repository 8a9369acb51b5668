//! Minimal deterministic neural-network kernel.
//!
//! Every layer exposes a `forward` that borrows the layer immutably and
//! returns whatever it needs for the backward pass, so a frozen model can be
//! shared between concurrent inference callers. Parameter gradients are
//! accumulated into the layer on `backward`.

mod activation;
mod adam;
mod conv;
mod dense;
mod dropout;
mod gradcheck;
mod init;
mod loss;
mod pool;

pub use activation::{mish, mish_backward, softmax, softplus};
pub use adam::{adam_step, AdamConfig, AdamState};
pub use conv::{Conv2d, Padding};
pub use dense::Dense;
pub use dropout::{dropout, dropout_backward};
pub use gradcheck::{finite_diff_check, relative_error};
pub use init::he_uniform_init;
pub use loss::{scc_loss, scc_loss_backward};
pub use pool::{global_avg_pool, global_avg_pool_backward, MaxPool2d};

use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum NnError {
    #[error("invalid argument: {0}")]
    InvalidArgument(String),
    #[error("non-finite value produced by {0}")]
    NonFinite(&'static str),
}

/// Whether stochastic layers are active.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Default)]
pub enum Mode {
    Train,
    #[default]
    Infer,
}

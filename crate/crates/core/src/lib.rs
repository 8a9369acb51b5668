//! Core of the knowledge-transformation toolkit.

pub mod data;
pub mod kt;
pub mod metrics;
pub mod models;
pub mod nn;
pub mod rng;
pub mod tensor;

pub use rng::RngState;
pub use tensor::{Scalar, Tensor};

use serde::{Deserialize, Serialize};

use crate::nn::NnError;
use crate::tensor::{Scalar, Tensor};

/// Adam hyperparameters. Defaults follow Keras 3.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            lr: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Moment estimates for one parameter tensor.
#[derive(Clone, Debug, PartialEq)]
pub struct AdamState<T = f32> {
    pub m: Tensor<T>,
    pub v: Tensor<T>,
    pub t: u64,
}

impl<T: Scalar> AdamState<T> {
    pub fn new(shape: &[usize]) -> Self {
        Self {
            m: Tensor::zeros(shape.to_vec()),
            v: Tensor::zeros(shape.to_vec()),
            t: 0,
        }
    }
}

/// One bias-corrected Adam update: `theta -= lr * m_hat / (sqrt(v_hat) + eps)`.
pub fn adam_step<T: Scalar>(
    params: &mut Tensor<T>,
    grads: &Tensor<T>,
    state: &mut AdamState<T>,
    config: &AdamConfig,
) -> Result<(), NnError> {
    if params.shape() != grads.shape() || params.shape() != state.m.shape() || params.shape() != state.v.shape() {
        return Err(NnError::InvalidArgument(format!(
            "adam shape mismatch: params {:?}, grads {:?}, state {:?}",
            params.shape(),
            grads.shape(),
            state.m.shape()
        )));
    }
    state.t += 1;
    let t = state.t as i32;
    let (b1, b2) = (T::lit(config.beta1), T::lit(config.beta2));
    let c1 = T::lit(1.0 - config.beta1.powi(t));
    let c2 = T::lit(1.0 - config.beta2.powi(t));
    let lr = T::lit(config.lr);
    let eps = T::lit(config.epsilon);
    let one = T::one();
    let m = state.m.data_mut();
    let v = state.v.data_mut();
    for (((p, &g), m), v) in params.data_mut().iter_mut().zip(grads.data()).zip(m).zip(v) {
        *m = b1 * *m + (one - b1) * g;
        *v = b2 * *v + (one - b2) * g * g;
        let m_hat = *m / c1;
        let v_hat = *v / c2;
        *p = *p - lr * m_hat / (v_hat.sqrt() + eps);
    }
    Ok(())
}

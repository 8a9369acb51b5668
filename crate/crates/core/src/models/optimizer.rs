use crate::models::{Model, ModelError};
use crate::nn::{adam_step, AdamConfig, AdamState};
use crate::tensor::Scalar;

/// Adam over every parameter tensor of a model, one [`AdamState`] per tensor.
#[derive(Clone, Debug)]
pub struct Adam<T = f32> {
    pub config: AdamConfig,
    states: Vec<AdamState<T>>,
}

impl<T: Scalar> Adam<T> {
    pub fn new(config: AdamConfig) -> Self {
        Self {
            config,
            states: Vec::new(),
        }
    }

    /// Number of updates applied so far.
    pub fn steps(&self) -> u64 {
        self.states.first().map_or(0, |s| s.t)
    }

    pub fn states(&self) -> &[AdamState<T>] {
        &self.states
    }

    /// Applies accumulated gradients. Moment buffers are allocated on first use.
    pub fn step(&mut self, model: &mut Model<T>) -> Result<(), ModelError> {
        let pairs = model.params_and_grads_mut();
        if self.states.is_empty() {
            self.states = pairs.iter().map(|(p, _)| AdamState::new(p.shape())).collect();
        }
        if self.states.len() != pairs.len() {
            return Err(ModelError::InvalidArgument(format!(
                "optimizer tracks {} tensors, model has {}",
                self.states.len(),
                pairs.len()
            )));
        }
        for ((p, g), state) in pairs.into_iter().zip(&mut self.states) {
            adam_step(p, g, state, &self.config)?;
        }
        Ok(())
    }
}

impl<T: Scalar> Default for Adam<T> {
    fn default() -> Self {
        Self::new(AdamConfig::default())
    }
}

use serde::{Deserialize, Serialize};

use crate::kt::KtError;

/// Stop once rolling accuracy over the last `window` steps reaches `threshold`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct StopCondition {
    #[serde(default = "default_window")]
    pub window: usize,
    pub threshold: f64,
    /// Steps between checks.
    #[serde(default = "default_cadence")]
    pub cadence: usize,
}

fn default_window() -> usize {
    1000
}

fn default_cadence() -> usize {
    100
}

impl StopCondition {
    pub fn new(threshold: f64) -> Self {
        Self { window: default_window(), threshold, cadence: default_cadence() }
    }

    pub fn validate(&self) -> Result<(), KtError> {
        if !(self.threshold > 0.0 && self.threshold <= 1.0) {
            return Err(KtError::InvalidArgument(format!("stop threshold {} outside (0, 1]", self.threshold)));
        }
        if self.window == 0 || self.cadence == 0 {
            return Err(KtError::InvalidArgument("stop window and cadence must be positive".into()));
        }
        Ok(())
    }
}

/// `outcomes` holds per-step correctness, oldest first. False until a full window exists.
pub fn stop_check(outcomes: &[bool], stop: &StopCondition) -> bool {
    if stop.window == 0 || outcomes.len() < stop.window {
        return false;
    }
    let recent = &outcomes[outcomes.len() - stop.window..];
    let correct = recent.iter().filter(|&&c| c).count();
    correct as f64 / stop.window as f64 >= stop.threshold
}

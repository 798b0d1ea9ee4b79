use serde::{Deserialize, Serialize};

use crate::data::DatasetSpec;
use crate::error::{Error, Result};
use crate::fl::Strategy;
use crate::nn::ModelSpec;

/// Complete description of one simulated federation.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    pub strategy: Strategy,
    pub clients: usize,
    pub rounds: usize,
    pub local_epochs: usize,
    pub batch_size: usize,
    pub participation_rate: f64,
    /// Dirichlet concentration of the label partition.
    pub beta: f64,
    pub learning_rate: f64,
    pub seed: u64,
    pub dataset: DatasetSpec,
    pub model: ModelSpec,
    /// Threads for client training; 0 uses every available core. Results do
    /// not depend on this value.
    #[serde(default)]
    pub workers: usize,
    /// Fill the `millis` metric column. Off by default so reruns are byte-identical.
    #[serde(default)]
    pub record_timing: bool,
}

impl Default for RunConfig {
    fn default() -> Self {
        Self {
            strategy: Strategy::default(),
            clients: 10,
            rounds: 20,
            local_epochs: 5,
            batch_size: 128,
            participation_rate: 1.0,
            beta: 0.5,
            learning_rate: 1e-3,
            seed: 0,
            dataset: DatasetSpec::default(),
            model: ModelSpec {
                classifier_bias: false,
                ..ModelSpec::default()
            },
            workers: 0,
            record_timing: false,
        }
    }
}

impl RunConfig {
    pub fn validate(&self) -> Result<()> {
        self.strategy.validate()?;
        let bad = |msg: String| Err(Error::InvalidInput(msg));
        if self.clients == 0 {
            return bad("clients must be positive".into());
        }
        if self.local_epochs == 0 || self.batch_size == 0 {
            return bad("local_epochs and batch_size must be positive".into());
        }
        if !(self.participation_rate > 0.0 && self.participation_rate <= 1.0) {
            return bad(format!(
                "participation_rate must lie in (0, 1], got {}",
                self.participation_rate
            ));
        }
        if !(self.beta > 0.0 && self.beta.is_finite()) {
            return bad(format!("beta must be positive, got {}", self.beta));
        }
        if !(self.learning_rate > 0.0 && self.learning_rate.is_finite()) {
            return bad(format!("learning_rate must be positive, got {}", self.learning_rate));
        }
        if self.strategy.is_feddw() && self.model.classifier_bias {
            return bad("feddw requires a bias-free classification layer (model.classifier_bias = false)".into());
        }
        Ok(())
    }

    /// `max(1, round(participation_rate · clients))`.
    pub fn participants_per_round(&self) -> usize {
        ((self.participation_rate * self.clients as f64).round() as usize).clamp(1, self.clients)
    }
}

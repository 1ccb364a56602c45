use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::nn::FitConfig;

/// Architecture and schedule shared by the neural scorers.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NetConfig {
    /// Widths of the hidden (encoder) layers; its length is the depth.
    pub hidden: Vec<usize>,
    pub dropout: f64,
    pub epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
    pub seed: u64,
}

impl Default for NetConfig {
    fn default() -> Self {
        Self {
            hidden: vec![64],
            dropout: 0.0,
            epochs: 100,
            patience: 10,
            learning_rate: 1e-2,
            seed: 0,
        }
    }
}

impl NetConfig {
    pub fn validate(&self) -> Result<()> {
        if self.hidden.is_empty() || self.hidden.contains(&0) {
            return Err(Error::config("hidden", "need at least one layer, all widths >= 1"));
        }
        if !(0.0..1.0).contains(&self.dropout) {
            return Err(Error::config("dropout", "must lie in [0, 1)"));
        }
        self.fit_config().validate()
    }

    pub fn fit_config(&self) -> FitConfig {
        FitConfig {
            epochs: self.epochs,
            patience: self.patience,
            learning_rate: self.learning_rate,
        }
    }
}

pub(crate) fn require_graphs(stream: &crate::graphs::GraphStream) -> Result<()> {
    if stream.is_empty() {
        return Err(Error::invalid("graph stream is empty"));
    }
    Ok(())
}

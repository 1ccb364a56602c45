use serde::{Deserialize, Serialize};

use super::{AdamConfig, AdamState, Gradients, Parameterized};
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FitConfig {
    pub epochs: usize,
    pub patience: usize,
    pub learning_rate: f64,
}

impl FitConfig {
    pub fn validate(&self) -> Result<()> {
        if self.epochs == 0 {
            return Err(Error::config("epochs", "must be >= 1"));
        }
        if self.patience > self.epochs {
            return Err(Error::config("patience", "must not exceed epochs"));
        }
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::config("learning_rate", "must be a positive number"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitReport {
    /// Loss evaluated before each update, then once after the last one.
    pub loss_trace: Vec<f64>,
    pub best_epoch: usize,
    pub best_loss: f64,
    pub stopped_early: bool,
}

impl FitReport {
    pub fn initial_loss(&self) -> f64 {
        self.loss_trace[0]
    }
}

/// Full-batch Adam with early stopping on the training loss.
///
/// `step(model, epoch)` returns the loss and gradients at the current
/// parameters. Training stops once `patience` consecutive evaluations fail to
/// improve on the best loss; the model is left at its best evaluated state.
pub fn fit<M, F>(model: &mut M, cfg: &FitConfig, mut step: F) -> Result<FitReport>
where
    M: Parameterized,
    F: FnMut(&M, usize) -> Result<(f64, Gradients)>,
{
    cfg.validate()?;
    let mut adam = AdamState::new(AdamConfig::with_learning_rate(cfg.learning_rate), model);
    let mut trace = Vec::with_capacity(cfg.epochs + 1);
    let mut best = (f64::INFINITY, 0usize, model.snapshot());
    let mut wait = 0;
    let mut stopped_early = false;
    for epoch in 0..=cfg.epochs {
        let (loss, grads) = step(model, epoch)?;
        if !loss.is_finite() {
            return Err(Error::NonFiniteGradient {
                param: format!("loss at epoch {epoch}"),
            });
        }
        trace.push(loss);
        if loss < best.0 {
            best = (loss, epoch, model.snapshot());
            wait = 0;
        } else {
            wait += 1;
            if wait >= cfg.patience.max(1) {
                stopped_early = true;
                break;
            }
        }
        if epoch == cfg.epochs {
            break;
        }
        adam.update(model, &grads)?;
    }
    model.restore(&best.2);
    Ok(FitReport {
        loss_trace: trace,
        best_epoch: best.1,
        best_loss: best.0,
        stopped_early,
    })
}

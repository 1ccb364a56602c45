//! Denoising MLP autoencoder over outer-node attributes.

use ndarray::{s, Array1, Array2};
use serde::{Deserialize, Serialize};

use super::net::{require_graphs, NetConfig};
use super::ScoreSeries;
use crate::error::Result;
use crate::graphs::GraphStream;
use crate::nn::{
    dropout_mask, fit, seed_stream, Activation, Differentiable, FitReport, Gradients, LayerStack, Parameterized,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MlpaeConfig {
    pub net: NetConfig,
}

impl Default for MlpaeConfig {
    fn default() -> Self {
        Self {
            net: NetConfig {
                hidden: vec![128],
                dropout: 0.1,
                ..NetConfig::default()
            },
        }
    }
}

/// `F -> hidden... -> F`, ReLU hidden layers and a linear output.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Mlpae {
    pub stack: LayerStack,
}

impl Mlpae {
    pub fn init(in_dim: usize, cfg: &MlpaeConfig, rng: &mut crate::nn::SeedStream) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(&cfg.net.hidden);
        dims.push(in_dim);
        Self {
            stack: LayerStack::init(&dims, Activation::ReLU, Activation::Identity, true, rng),
        }
    }

    pub fn reconstruct(&self, x: &Array2<f64>) -> Result<Array2<f64>> {
        Ok(self.stack.forward(x.view(), None, None)?.output)
    }

    /// Reconstruction error norm of every row.
    pub fn row_errors(&self, x: &Array2<f64>) -> Result<Array1<f64>> {
        let r = self.reconstruct(x)? - x;
        Ok(r.rows().into_iter().map(|row| row.dot(&row).sqrt()).collect())
    }

    /// Mean squared error of reconstructing `target` from `input`.
    pub fn loss_and_gradients(&self, input: &Array2<f64>, target: &Array2<f64>) -> Result<(f64, Gradients)> {
        let cache = self.stack.forward(input.view(), None, None)?;
        let res = &cache.output - target;
        let count = res.len() as f64;
        let loss = res.iter().map(|v| v * v).sum::<f64>() / count;
        let grad = res * (2.0 / count);
        let (grads, _) = self.stack.backward(&cache, None, grad);
        Ok((loss, grads))
    }
}

impl Parameterized for Mlpae {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.stack.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.stack.params_mut()
    }
}

#[derive(Debug, Clone)]
pub struct MlpaeObjective {
    pub model: Mlpae,
    pub input: Array2<f64>,
    pub target: Array2<f64>,
}

impl Parameterized for MlpaeObjective {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.model.params_mut()
    }
}

impl Differentiable for MlpaeObjective {
    fn loss(&self) -> f64 {
        self.loss_and_gradients().0
    }

    fn loss_and_gradients(&self) -> (f64, Gradients) {
        self.model
            .loss_and_gradients(&self.input, &self.target)
            .expect("consistent shapes")
    }
}

/// All outer-node attribute rows of the stream, graph by graph.
pub fn outer_rows(stream: &GraphStream) -> Array2<f64> {
    let total: usize = stream.graphs.iter().map(|g| g.n_outer()).sum();
    let mut x = Array2::zeros((total, stream.n_features()));
    let mut at = 0;
    for g in &stream.graphs {
        x.slice_mut(s![at..at + g.n_outer(), ..]).assign(&g.outer_features);
        at += g.n_outer();
    }
    x
}

pub fn train_mlpae(stream: &GraphStream, cfg: &MlpaeConfig) -> Result<(Mlpae, FitReport)> {
    cfg.net.validate()?;
    require_graphs(stream)?;
    let x = outer_rows(stream);
    let mut rng = seed_stream(cfg.net.seed);
    let mut model = Mlpae::init(stream.n_features(), cfg, &mut rng);
    let report = fit(&mut model, &cfg.net.fit_config(), |m, _| {
        if cfg.net.dropout > 0.0 {
            let noisy = &x * &dropout_mask::<ndarray::Ix2, _>(x.raw_dim(), cfg.net.dropout, &mut rng)?;
            m.loss_and_gradients(&noisy, &x)
        } else {
            m.loss_and_gradients(&x, &x)
        }
    })?;
    Ok((model, report))
}

/// Mean outer-node reconstruction error of every graph (graphs without outer
/// nodes score 0).
pub fn score_with(model: &Mlpae, stream: &GraphStream, subject_id: &str) -> Result<ScoreSeries> {
    let errors = model.row_errors(&outer_rows(stream))?;
    let mut at = 0;
    let mut scores = Vec::with_capacity(stream.len());
    for g in &stream.graphs {
        let n = g.n_outer();
        let slice = errors.slice(s![at..at + n]);
        scores.push(if n == 0 { 0.0 } else { slice.sum() / n as f64 });
        at += n;
    }
    ScoreSeries::new(subject_id, "mlpae", stream.context_indices(), scores)
}

pub fn score_mlpae(stream: &GraphStream, cfg: &MlpaeConfig, subject_id: &str) -> Result<(ScoreSeries, Mlpae)> {
    let (model, _) = train_mlpae(stream, cfg)?;
    Ok((score_with(&model, stream, subject_id)?, model))
}

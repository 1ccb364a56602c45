//! One-class GCN: central-node embeddings are pulled inside a hypersphere.
//!
//! The encoder has no bias terms, so it cannot map every graph onto the
//! centre with a constant output.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use super::net::{require_graphs, NetConfig};
use super::ScoreSeries;
use crate::error::{Error, Result};
use crate::graphs::GraphStream;
use crate::nn::{
    fit, seed_stream, Activation, Differentiable, FitReport, Gradients, LayerStack, Parameterized, StarBatch,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OcgnnConfig {
    /// Fraction of graphs allowed outside the sphere.
    pub beta: f64,
    pub weight_decay: f64,
    pub net: NetConfig,
}

impl Default for OcgnnConfig {
    fn default() -> Self {
        Self {
            beta: 0.1,
            weight_decay: 1e-4,
            net: NetConfig {
                hidden: vec![128],
                dropout: 0.3,
                ..NetConfig::default()
            },
        }
    }
}

impl OcgnnConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.beta > 0.0 && self.beta <= 1.0) {
            return Err(Error::config("beta", "must lie in (0, 1]"));
        }
        if !(self.weight_decay >= 0.0) || !self.weight_decay.is_finite() {
            return Err(Error::config("weight_decay", "must be a finite non-negative number"));
        }
        self.net.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Ocgnn {
    pub encoder: LayerStack,
    pub center: Vec<f64>,
    pub radius: f64,
}

/// Linear-interpolated `q`-quantile of unsorted values.
pub fn quantile(values: &[f64], q: f64) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = q.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (v[hi] - v[lo]) * (pos - lo as f64)
}

fn central_rows(z: &Array2<f64>, batch: &StarBatch) -> Array2<f64> {
    let idx: Vec<usize> = (0..batch.n_graphs()).map(|g| batch.central(g)).collect();
    z.select(ndarray::Axis(0), &idx)
}

fn sq_distances(zc: &Array2<f64>, center: &Array1<f64>) -> Vec<f64> {
    zc.rows()
        .into_iter()
        .map(|r| {
            let d = &r - center;
            d.dot(&d)
        })
        .collect()
}

impl Ocgnn {
    pub fn init(in_dim: usize, cfg: &OcgnnConfig, rng: &mut crate::nn::SeedStream) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(&cfg.net.hidden);
        Self {
            encoder: LayerStack::init(&dims, Activation::ReLU, Activation::Identity, false, rng),
            center: vec![0.0; *dims.last().expect("non-empty dims")],
            radius: 0.0,
        }
    }

    /// Central-node embeddings of every graph.
    pub fn embed(&self, x: &Array2<f64>, batch: &StarBatch, masks: Option<&[Array2<f64>]>) -> Result<Array2<f64>> {
        let z = self.encoder.forward(x.view(), Some(batch), masks)?.output;
        Ok(central_rows(&z, batch))
    }

    /// `|z - c|^2 - r^2` per graph.
    pub fn scores(&self, x: &Array2<f64>, batch: &StarBatch) -> Result<Vec<f64>> {
        let zc = self.embed(x, batch, None)?;
        let c = Array1::from(self.center.clone());
        let r2 = self.radius * self.radius;
        Ok(sq_distances(&zc, &c).into_iter().map(|d| d - r2).collect())
    }

    /// Hypersphere loss at fixed centre and radius, plus `weight_decay / 2 * |W|^2`.
    pub fn loss_and_gradients(
        &self,
        x: &Array2<f64>,
        batch: &StarBatch,
        masks: Option<&[Array2<f64>]>,
        beta: f64,
        weight_decay: f64,
    ) -> Result<(f64, Gradients)> {
        let cache = self.encoder.forward(x.view(), Some(batch), masks)?;
        let c = Array1::from(self.center.clone());
        let r2 = self.radius * self.radius;
        let n = batch.n_graphs() as f64;
        let scale = 1.0 / (beta * n);
        let mut grad_z = Array2::zeros(cache.output.raw_dim());
        let mut hinge = 0.0;
        for g in 0..batch.n_graphs() {
            let row = batch.central(g);
            let diff = &cache.output.row(row) - &c;
            let excess = diff.dot(&diff) - r2;
            if excess > 0.0 {
                hinge += excess;
                grad_z.row_mut(row).scaled_add(2.0 * scale, &diff);
            }
        }
        let (mut grads, _) = self.encoder.backward(&cache, Some(batch), grad_z);
        let mut decay = 0.0;
        for (grad, (_, w)) in grads.iter_mut().zip(self.encoder.params()) {
            for (g, &v) in grad.iter_mut().zip(w) {
                decay += v * v;
                *g += weight_decay * v;
            }
        }
        Ok((r2 + scale * hinge + 0.5 * weight_decay * decay, grads))
    }
}

impl Parameterized for Ocgnn {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.encoder.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.encoder.params_mut()
    }
}

#[derive(Debug, Clone)]
pub struct OcgnnObjective {
    pub model: Ocgnn,
    pub x: Array2<f64>,
    pub batch: StarBatch,
    pub masks: Option<Vec<Array2<f64>>>,
    pub beta: f64,
    pub weight_decay: f64,
}

impl Parameterized for OcgnnObjective {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.model.params_mut()
    }
}

impl Differentiable for OcgnnObjective {
    fn loss(&self) -> f64 {
        self.loss_and_gradients().0
    }

    fn loss_and_gradients(&self) -> (f64, Gradients) {
        self.model
            .loss_and_gradients(
                &self.x,
                &self.batch,
                self.masks.as_deref(),
                self.beta,
                self.weight_decay,
            )
            .expect("consistent shapes")
    }
}

/// Fixes the centre from the initial embeddings, then trains with the radius
/// reset to the `(1 - beta)`-quantile of centre distances before each step.
/// The final radius is recomputed from inference-mode embeddings.
pub fn train_ocgnn(stream: &GraphStream, cfg: &OcgnnConfig) -> Result<(Ocgnn, FitReport)> {
    cfg.validate()?;
    require_graphs(stream)?;
    let (batch, x) = stream.batch();
    let mut rng = seed_stream(cfg.net.seed);
    let mut model = Ocgnn::init(stream.n_features(), cfg, &mut rng);
    let initial = model.embed(&x, &batch, None)?;
    model.center = initial
        .mean_axis(ndarray::Axis(0))
        .expect("at least one graph")
        .to_vec();
    let center = Array1::from(model.center.clone());

    let report = fit(&mut model, &cfg.net.fit_config(), |m, _| {
        let masks = if cfg.net.dropout > 0.0 {
            Some(m.encoder.sample_masks(x.nrows(), cfg.net.dropout, &mut rng)?)
        } else {
            None
        };
        let zc = m.embed(&x, &batch, masks.as_deref())?;
        let dists: Vec<f64> = sq_distances(&zc, &center).into_iter().map(f64::sqrt).collect();
        let mut at_radius = m.clone();
        at_radius.radius = quantile(&dists, 1.0 - cfg.beta);
        at_radius.loss_and_gradients(&x, &batch, masks.as_deref(), cfg.beta, cfg.weight_decay)
    })?;

    let zc = model.embed(&x, &batch, None)?;
    let dists: Vec<f64> = sq_distances(&zc, &center).into_iter().map(f64::sqrt).collect();
    model.radius = quantile(&dists, 1.0 - cfg.beta);
    Ok((model, report))
}

pub fn score_with(model: &Ocgnn, stream: &GraphStream, subject_id: &str) -> Result<ScoreSeries> {
    let (batch, x) = stream.batch();
    ScoreSeries::new(subject_id, "ocgnn", stream.context_indices(), model.scores(&x, &batch)?)
}

pub fn score_ocgnn(stream: &GraphStream, cfg: &OcgnnConfig, subject_id: &str) -> Result<(ScoreSeries, Ocgnn)> {
    let (model, _) = train_ocgnn(stream, cfg)?;
    Ok((score_with(&model, stream, subject_id)?, model))
}

//! Graph autoencoder scorers (DOMINANT-style and GCNAE).
//!
//! A GCN encoder maps every node of every star graph to a latent row `z`.
//! A dense decoder reconstructs node attributes and `sigmoid(Z Zᵀ)`
//! reconstructs each graph's adjacency (with self-loops). The node error is
//! `alpha * |x - x̂| + (1 - alpha) * |a - â|` and the graph score is the
//! error of its central node.

use ndarray::{s, Array1, Array2, ArrayView2, Zip};
use serde::{Deserialize, Serialize};

use super::net::{require_graphs, NetConfig};
use super::ScoreSeries;
use crate::error::{Error, Result};
use crate::graphs::GraphStream;
use crate::nn::{
    fit, prefixed, seed_stream, Activation, DenseLayer, Differentiable, FitReport, Gradients, LayerStack,
    Parameterized, StarBatch,
};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AutoencoderConfig {
    /// Weight of attribute error against structure error.
    pub alpha: f64,
    pub net: NetConfig,
}

pub type DominantConfig = AutoencoderConfig;
pub type GcnaeConfig = AutoencoderConfig;

impl AutoencoderConfig {
    pub fn dominant() -> Self {
        Self {
            alpha: 0.9,
            net: NetConfig::default(),
        }
    }

    pub fn gcnae() -> Self {
        Self {
            alpha: 0.5,
            net: NetConfig {
                hidden: vec![128; 4],
                dropout: 0.3,
                ..NetConfig::default()
            },
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.alpha) {
            return Err(Error::config("alpha", "must lie in [0, 1]"));
        }
        self.net.validate()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GraphAutoencoder {
    pub encoder: LayerStack,
    pub attr_decoder: DenseLayer,
    pub alpha: f64,
}

/// Per-node reconstruction errors.
#[derive(Debug, Clone, PartialEq)]
pub struct NodeErrors {
    pub attribute: Array1<f64>,
    pub structure: Array1<f64>,
}

impl NodeErrors {
    pub fn combined(&self, alpha: f64) -> Array1<f64> {
        if alpha == 1.0 {
            return self.attribute.clone();
        }
        &self.attribute * alpha + &self.structure * (1.0 - alpha)
    }
}

/// Residual `sigmoid(Zg Zgᵀ) - (A + I)` of one star graph (node 0 central).
fn structure_residual(zg: ArrayView2<f64>) -> (Array2<f64>, Array2<f64>) {
    let n = zg.nrows();
    let s_mat = zg.dot(&zg.t()).mapv(crate::nn::sigmoid);
    let mut r = s_mat.clone();
    for a in 0..n {
        r[[a, a]] -= 1.0;
        if a > 0 {
            r[[0, a]] -= 1.0;
            r[[a, 0]] -= 1.0;
        }
    }
    (s_mat, r)
}

fn row_norms(m: &Array2<f64>) -> Array1<f64> {
    m.rows().into_iter().map(|r| r.dot(&r).sqrt()).collect()
}

impl GraphAutoencoder {
    pub fn init(in_dim: usize, cfg: &AutoencoderConfig, rng: &mut crate::nn::SeedStream) -> Self {
        let mut dims = vec![in_dim];
        dims.extend(&cfg.net.hidden);
        let encoder = LayerStack::init(&dims, Activation::ReLU, Activation::ReLU, true, rng);
        let attr_decoder = DenseLayer::init(encoder.out_dim(), in_dim, Activation::Identity, rng);
        Self {
            encoder,
            attr_decoder,
            alpha: cfg.alpha,
        }
    }

    /// Node errors for a batch. `masks` are per-layer dropout masks (train mode).
    pub fn node_errors(&self, x: &Array2<f64>, batch: &StarBatch, masks: Option<&[Array2<f64>]>) -> Result<NodeErrors> {
        let cache = self.encoder.forward(x.view(), Some(batch), masks)?;
        let z = &cache.output;
        let (_, xhat) = self.attr_decoder.forward_batch(z.view())?;
        let attribute = row_norms(&(&xhat - x));
        let mut structure = Array1::zeros(x.nrows());
        if self.alpha < 1.0 {
            for g in 0..batch.n_graphs() {
                let r = batch.nodes(g);
                let (_, res) = structure_residual(z.slice(s![r.clone(), ..]));
                structure.slice_mut(s![r]).assign(&row_norms(&res));
            }
        }
        Ok(NodeErrors { attribute, structure })
    }

    /// Mean node error over the batch and its gradients.
    pub fn loss_and_gradients(
        &self,
        x: &Array2<f64>,
        batch: &StarBatch,
        masks: Option<&[Array2<f64>]>,
    ) -> Result<(f64, Gradients)> {
        let n = x.nrows() as f64;
        let alpha = self.alpha;
        let cache = self.encoder.forward(x.view(), Some(batch), masks)?;
        let z = &cache.output;
        let (pre, xhat) = self.attr_decoder.forward_batch(z.view())?;
        let res_x = &xhat - x;
        let attr = row_norms(&res_x);
        let mut loss = alpha * attr.sum();

        let mut grad_xhat = res_x;
        Zip::from(grad_xhat.rows_mut()).and(&attr).for_each(|mut row, &e| {
            if e > 0.0 {
                row *= alpha / (n * e);
            } else {
                row.fill(0.0);
            }
        });
        let (mut grad_z, dec) = self.attr_decoder.backward_batch(z.view(), pre.view(), grad_xhat.view());

        if alpha < 1.0 {
            for g in 0..batch.n_graphs() {
                let r = batch.nodes(g);
                let zg = z.slice(s![r.clone(), ..]);
                let (s_mat, res) = structure_residual(zg);
                let norms = row_norms(&res);
                loss += (1.0 - alpha) * norms.sum();
                let mut gp = res;
                Zip::from(gp.rows_mut()).and(&norms).for_each(|mut row, &e| {
                    if e > 0.0 {
                        row *= (1.0 - alpha) / (n * e);
                    } else {
                        row.fill(0.0);
                    }
                });
                gp.zip_mut_with(&s_mat, |v, &sv| *v *= sv * (1.0 - sv));
                let sym = &gp + &gp.t();
                let mut target = grad_z.slice_mut(s![r, ..]);
                target += &sym.dot(&zg);
            }
        }

        let (mut grads, _) = self.encoder.backward(&cache, Some(batch), grad_z);
        grads.extend(dec.into_blocks(self.attr_decoder.use_bias));
        Ok((loss / n, grads))
    }
}

impl Parameterized for GraphAutoencoder {
    fn params(&self) -> Vec<(String, &[f64])> {
        let mut out = prefixed("encoder", self.encoder.params());
        out.extend(prefixed("attr_decoder", self.attr_decoder.params()));
        out
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = prefixed("encoder", self.encoder.params_mut());
        out.extend(prefixed("attr_decoder", self.attr_decoder.params_mut()));
        out
    }
}

/// Autoencoder loss on a fixed batch, for gradient checking.
#[derive(Debug, Clone)]
pub struct AutoencoderObjective {
    pub model: GraphAutoencoder,
    pub x: Array2<f64>,
    pub batch: StarBatch,
    pub masks: Option<Vec<Array2<f64>>>,
}

impl Parameterized for AutoencoderObjective {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.model.params()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.model.params_mut()
    }
}

impl Differentiable for AutoencoderObjective {
    fn loss(&self) -> f64 {
        self.loss_and_gradients().0
    }

    fn loss_and_gradients(&self) -> (f64, Gradients) {
        self.model
            .loss_and_gradients(&self.x, &self.batch, self.masks.as_deref())
            .expect("consistent shapes")
    }
}

/// Trains one autoencoder on the whole stream.
pub fn train_autoencoder(stream: &GraphStream, cfg: &AutoencoderConfig) -> Result<(GraphAutoencoder, FitReport)> {
    cfg.validate()?;
    require_graphs(stream)?;
    let (batch, x) = stream.batch();
    let mut rng = seed_stream(cfg.net.seed);
    let mut model = GraphAutoencoder::init(stream.n_features(), cfg, &mut rng);
    let report = fit(&mut model, &cfg.net.fit_config(), |m, _| {
        if cfg.net.dropout > 0.0 {
            let masks = m.encoder.sample_masks(x.nrows(), cfg.net.dropout, &mut rng)?;
            m.loss_and_gradients(&x, &batch, Some(&masks))
        } else {
            m.loss_and_gradients(&x, &batch, None)
        }
    })?;
    Ok((model, report))
}

/// Central-node error of every graph (inference mode).
pub fn score_with(
    model: &GraphAutoencoder,
    stream: &GraphStream,
    detector: &str,
    subject_id: &str,
) -> Result<ScoreSeries> {
    let (batch, x) = stream.batch();
    let combined = model.node_errors(&x, &batch, None)?.combined(model.alpha);
    let scores = (0..batch.n_graphs()).map(|g| combined[batch.central(g)]).collect();
    ScoreSeries::new(subject_id, detector, stream.context_indices(), scores)
}

pub fn score_dominant(
    stream: &GraphStream,
    cfg: &DominantConfig,
    subject_id: &str,
) -> Result<(ScoreSeries, GraphAutoencoder)> {
    let (model, _) = train_autoencoder(stream, cfg)?;
    Ok((score_with(&model, stream, "dominant", subject_id)?, model))
}

pub fn score_gcnae(
    stream: &GraphStream,
    cfg: &GcnaeConfig,
    subject_id: &str,
) -> Result<(ScoreSeries, GraphAutoencoder)> {
    let (model, _) = train_autoencoder(stream, cfg)?;
    Ok((score_with(&model, stream, "gcnae", subject_id)?, model))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graphs::ContextGraph;
    use crate::nn::grad_check;
    use rand::Rng;

    fn tiny_stream(seed: u64, f: usize) -> GraphStream {
        let mut rng = seed_stream(seed);
        let graphs = (1..=3)
            .map(|i| ContextGraph {
                context_index: i,
                first_outer: 0,
                outer_features: Array2::from_shape_simple_fn((i, f), || rng.random_range(0.1..3.0)),
            })
            .collect();
        GraphStream { graphs }
    }

    fn tiny_cfg(alpha: f64, hidden: Vec<usize>) -> AutoencoderConfig {
        AutoencoderConfig {
            alpha,
            net: NetConfig {
                hidden,
                ..NetConfig::default()
            },
        }
    }

    #[test]
    fn gradients_match_finite_differences() {
        for (seed, alpha, hidden) in [(1, 0.9, vec![4]), (2, 0.5, vec![4, 3]), (3, 0.0, vec![2])] {
            let stream = tiny_stream(seed, 3);
            let (batch, x) = stream.batch();
            let mut rng = seed_stream(seed + 100);
            let model = GraphAutoencoder::init(3, &tiny_cfg(alpha, hidden), &mut rng);
            let masks = Some(model.encoder.sample_masks(x.nrows(), 0.3, &mut rng).unwrap());
            for masks in [None, masks] {
                let mut obj = AutoencoderObjective {
                    model: model.clone(),
                    x: x.clone(),
                    batch: batch.clone(),
                    masks,
                };
                let report = grad_check(&mut obj, 1e-4);
                assert!(report.passed(), "alpha {alpha}: {report:?}");
            }
        }
    }

    #[test]
    fn weighted_error_example() {
        let e = NodeErrors {
            attribute: Array1::from(vec![1.0]),
            structure: Array1::from(vec![0.0]),
        };
        assert!((e.combined(0.9)[0] - 0.9).abs() < 1e-15);
        let e = NodeErrors {
            attribute: Array1::from(vec![0.0]),
            structure: Array1::from(vec![0.0]),
        };
        assert_eq!(e.combined(0.5)[0], 0.0);
    }

    #[test]
    fn alpha_one_ignores_structure() {
        let stream = tiny_stream(4, 2);
        let (batch, x) = stream.batch();
        let mut rng = seed_stream(4);
        let model = GraphAutoencoder::init(2, &tiny_cfg(1.0, vec![3]), &mut rng);
        let errors = model.node_errors(&x, &batch, None).unwrap();
        assert_eq!(errors.combined(1.0), errors.attribute);
        // Scaling the latent space changes structure reconstruction only.
        let mut scaled = model.clone();
        scaled.encoder.layers[0].weights *= 3.0;
        scaled.encoder.layers[0].bias *= 3.0;
        scaled.attr_decoder.weights /= 3.0;
        let s1 = score_with(&model, &stream, "d", "s").unwrap();
        let s2 = score_with(&scaled, &stream, "d", "s").unwrap();
        for (a, b) in s1.scores.iter().zip(&s2.scores) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn scores_are_finite_non_negative_and_deterministic() {
        let stream = tiny_stream(5, 3);
        let cfg = AutoencoderConfig {
            net: NetConfig {
                hidden: vec![4, 4],
                dropout: 0.3,
                epochs: 20,
                patience: 5,
                seed: 3,
                ..NetConfig::default()
            },
            ..AutoencoderConfig::gcnae()
        };
        let (a, _) = score_gcnae(&stream, &cfg, "s").unwrap();
        let (b, _) = score_gcnae(&stream, &cfg, "s").unwrap();
        assert_eq!(a, b);
        assert!(a.scores.iter().all(|v| v.is_finite() && *v >= 0.0));
        assert_eq!(a.context_indices, vec![1, 2, 3]);
    }

    #[test]
    fn training_reduces_loss() {
        let stream = tiny_stream(6, 3);
        let cfg = AutoencoderConfig {
            net: NetConfig {
                hidden: vec![8],
                epochs: 60,
                patience: 60,
                ..NetConfig::default()
            },
            ..AutoencoderConfig::dominant()
        };
        let (_, report) = train_autoencoder(&stream, &cfg).unwrap();
        assert!(report.best_loss < report.initial_loss());
    }
}

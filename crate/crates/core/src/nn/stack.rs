use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::{dropout_mask, prefixed, Activation, DenseLayer, Gradients, Parameterized, SeedStream, StarBatch};
use crate::error::Result;

/// A sequence of dense layers, optionally preceded at every layer by star-graph
/// propagation (which turns each layer into a GCN layer `act(Â H Wᵀ + b)`).
/// Dropout, when active, is applied to every layer input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LayerStack {
    pub layers: Vec<DenseLayer>,
}

#[derive(Debug, Clone)]
pub struct StackCache {
    /// Per-layer propagated (and dropped-out) input seen by the dense map.
    props: Vec<Array2<f64>>,
    pres: Vec<Array2<f64>>,
    masks: Option<Vec<Array2<f64>>>,
    pub output: Array2<f64>,
}

impl LayerStack {
    /// Builds `dims[0] -> dims[1] -> ... -> dims[last]`. Hidden layers use
    /// `hidden`, the last layer `last`.
    pub fn init(dims: &[usize], hidden: Activation, last: Activation, bias: bool, rng: &mut SeedStream) -> Self {
        let n = dims.len().saturating_sub(1);
        let layers = (0..n)
            .map(|l| {
                let act = if l + 1 == n { last } else { hidden };
                if bias {
                    DenseLayer::init(dims[l], dims[l + 1], act, rng)
                } else {
                    DenseLayer::init_without_bias(dims[l], dims[l + 1], act, rng)
                }
            })
            .collect();
        Self { layers }
    }

    pub fn in_dim(&self) -> usize {
        self.layers.first().map_or(0, DenseLayer::in_dim)
    }

    pub fn out_dim(&self) -> usize {
        self.layers.last().map_or(0, DenseLayer::out_dim)
    }

    /// Draws one dropout mask per layer input for a batch of `rows` rows.
    pub fn sample_masks(&self, rows: usize, rate: f64, rng: &mut SeedStream) -> Result<Vec<Array2<f64>>> {
        self.layers
            .iter()
            .map(|l| dropout_mask((rows, l.in_dim()), rate, rng))
            .collect()
    }

    pub fn forward(
        &self,
        x: ArrayView2<f64>,
        graph: Option<&StarBatch>,
        masks: Option<&[Array2<f64>]>,
    ) -> Result<StackCache> {
        let mut props = Vec::with_capacity(self.layers.len());
        let mut pres = Vec::with_capacity(self.layers.len());
        let mut h = x.to_owned();
        for (l, layer) in self.layers.iter().enumerate() {
            if let Some(m) = masks {
                h *= &m[l];
            }
            let p = match graph {
                Some(g) => g.propagate(h.view()),
                None => h,
            };
            let (pre, out) = layer.forward_batch(p.view())?;
            props.push(p);
            pres.push(pre);
            h = out;
        }
        Ok(StackCache {
            props,
            pres,
            masks: masks.map(<[_]>::to_vec),
            output: h,
        })
    }

    /// Returns parameter gradients (block order of [`Parameterized::params`])
    /// and the gradient with respect to the stack input.
    pub fn backward(
        &self,
        cache: &StackCache,
        graph: Option<&StarBatch>,
        grad_out: Array2<f64>,
    ) -> (Gradients, Array2<f64>) {
        let mut per_layer = vec![Vec::new(); self.layers.len()];
        let mut grad = grad_out;
        for (l, layer) in self.layers.iter().enumerate().rev() {
            let (grad_p, dg) = layer.backward_batch(cache.props[l].view(), cache.pres[l].view(), grad.view());
            per_layer[l] = dg.into_blocks(layer.use_bias);
            grad = match graph {
                Some(g) => g.propagate(grad_p.view()),
                None => grad_p,
            };
            if let Some(m) = &cache.masks {
                grad *= &m[l];
            }
        }
        (per_layer.into_iter().flatten().collect(), grad)
    }
}

impl Parameterized for LayerStack {
    fn params(&self) -> Vec<(String, &[f64])> {
        self.layers
            .iter()
            .enumerate()
            .flat_map(|(l, layer)| prefixed(&format!("layer{l}"), layer.params()))
            .collect()
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        self.layers
            .iter_mut()
            .enumerate()
            .flat_map(|(l, layer)| prefixed(&format!("layer{l}"), layer.params_mut()))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::{grad_check, seed_stream, Differentiable};

    /// Half sum of squared outputs, fixed input and masks.
    struct Probe {
        stack: LayerStack,
        x: Array2<f64>,
        graph: Option<StarBatch>,
        masks: Option<Vec<Array2<f64>>>,
    }

    impl Parameterized for Probe {
        fn params(&self) -> Vec<(String, &[f64])> {
            self.stack.params()
        }
        fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
            self.stack.params_mut()
        }
    }

    impl Differentiable for Probe {
        fn loss(&self) -> f64 {
            self.loss_and_gradients().0
        }
        fn loss_and_gradients(&self) -> (f64, Gradients) {
            let cache = self
                .stack
                .forward(self.x.view(), self.graph.as_ref(), self.masks.as_deref())
                .unwrap();
            let loss = 0.5 * cache.output.iter().map(|v| v * v).sum::<f64>();
            let (g, _) = self.stack.backward(&cache, self.graph.as_ref(), cache.output.clone());
            (loss, g)
        }
    }

    #[test]
    fn gcn_stack_gradients_with_dropout() {
        let mut rng = seed_stream(11);
        let graph = StarBatch::new(&[2, 3]);
        let stack = LayerStack::init(&[3, 4, 2], Activation::Tanh, Activation::Identity, true, &mut rng);
        let x = Array2::from_shape_fn((graph.n_nodes(), 3), |(i, j)| ((i * 7 + j * 3) % 5) as f64 * 0.4);
        let masks = stack.sample_masks(graph.n_nodes(), 0.3, &mut rng).unwrap();
        let mut probe = Probe {
            stack,
            x,
            graph: Some(graph),
            masks: Some(masks),
        };
        let report = grad_check(&mut probe, 1e-6);
        assert!(report.passed(), "{report:?}");
    }

    #[test]
    fn mlp_stack_gradients() {
        let mut rng = seed_stream(5);
        let stack = LayerStack::init(&[3, 4, 3], Activation::Sigmoid, Activation::Identity, false, &mut rng);
        let x = Array2::from_shape_fn((5, 3), |(i, j)| (i as f64 - j as f64) * 0.3);
        let mut probe = Probe {
            stack,
            x,
            graph: None,
            masks: None,
        };
        let report = grad_check(&mut probe, 1e-6);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.blocks.len(), 2, "bias-free layers expose weights only");
    }
}

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::Rng;
use serde::{Deserialize, Serialize};

use super::{Parameterized, SeedStream};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Activation {
    ReLU,
    Sigmoid,
    Identity,
    Tanh,
}

impl Activation {
    pub fn apply(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => z.max(0.0),
            Activation::Sigmoid => sigmoid(z),
            Activation::Identity => z,
            Activation::Tanh => z.tanh(),
        }
    }

    /// Derivative with respect to the pre-activation `z`.
    pub fn derivative(self, z: f64) -> f64 {
        match self {
            Activation::ReLU => {
                if z > 0.0 {
                    1.0
                } else {
                    0.0
                }
            }
            Activation::Sigmoid => {
                let s = sigmoid(z);
                s * (1.0 - s)
            }
            Activation::Identity => 1.0,
            Activation::Tanh => {
                let t = z.tanh();
                1.0 - t * t
            }
        }
    }
}

pub(crate) fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Fully connected layer `activation(W·x + b)` with `W` of shape out × in.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
    pub activation: Activation,
    /// Bias-free layers keep `bias` at zero and expose no bias block.
    #[serde(default = "yes")]
    pub use_bias: bool,
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone)]
pub struct DenseGrads {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

impl DenseLayer {
    pub fn new(weights: Array2<f64>, bias: Array1<f64>, activation: Activation) -> Result<Self> {
        check_dim("dense bias", weights.nrows(), bias.len())?;
        Ok(Self {
            weights: weights.as_standard_layout().to_owned(),
            bias,
            activation,
            use_bias: true,
        })
    }

    /// Uniform fan-in initialization in `[-1/sqrt(in), 1/sqrt(in)]`.
    pub fn init(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut SeedStream) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((out_dim, in_dim), || rng.random_range(-bound..=bound));
        let bias = Array1::from_shape_simple_fn(out_dim, || rng.random_range(-bound..=bound));
        Self {
            weights,
            bias,
            activation,
            use_bias: true,
        }
    }

    pub fn init_without_bias(in_dim: usize, out_dim: usize, activation: Activation, rng: &mut SeedStream) -> Self {
        let bound = 1.0 / (in_dim.max(1) as f64).sqrt();
        let weights = Array2::from_shape_simple_fn((out_dim, in_dim), || rng.random_range(-bound..=bound));
        Self {
            weights,
            bias: Array1::zeros(out_dim),
            activation,
            use_bias: false,
        }
    }

    pub fn in_dim(&self) -> usize {
        self.weights.ncols()
    }

    pub fn out_dim(&self) -> usize {
        self.weights.nrows()
    }

    pub fn forward(&self, x: ArrayView1<f64>) -> Result<Array1<f64>> {
        check_dim("dense input", self.in_dim(), x.len())?;
        let act = self.activation;
        Ok((self.weights.dot(&x) + &self.bias).mapv_into(|z| act.apply(z)))
    }

    /// Row-wise forward over a batch (n × in). Returns (pre-activation, output).
    pub fn forward_batch(&self, x: ArrayView2<f64>) -> Result<(Array2<f64>, Array2<f64>)> {
        check_dim("dense batch input", self.in_dim(), x.ncols())?;
        let pre = x.dot(&self.weights.t()) + &self.bias;
        let act = self.activation;
        let out = pre.mapv(|z| act.apply(z));
        Ok((pre, out))
    }

    /// Backward pass for [`forward_batch`](Self::forward_batch).
    /// Returns the gradient with respect to the input and the parameter gradients.
    pub fn backward_batch(
        &self,
        input: ArrayView2<f64>,
        pre: ArrayView2<f64>,
        grad_out: ArrayView2<f64>,
    ) -> (Array2<f64>, DenseGrads) {
        let act = self.activation;
        let mut delta = grad_out.to_owned();
        delta.zip_mut_with(&pre, |g, &z| *g *= act.derivative(z));
        let weights = delta.t().dot(&input);
        let bias = if self.use_bias {
            delta.sum_axis(Axis(0))
        } else {
            Array1::zeros(self.out_dim())
        };
        let grad_in = delta.dot(&self.weights);
        (grad_in, DenseGrads { weights, bias })
    }
}

impl DenseGrads {
    pub fn into_blocks(self, use_bias: bool) -> Vec<Vec<f64>> {
        let mut out = vec![self.weights.as_standard_layout().iter().copied().collect()];
        if use_bias {
            out.push(self.bias.to_vec());
        }
        out
    }
}

impl Parameterized for DenseLayer {
    fn params(&self) -> Vec<(String, &[f64])> {
        let mut out = vec![("weights".to_string(), self.weights.as_slice().expect("standard layout"))];
        if self.use_bias {
            out.push(("bias".to_string(), self.bias.as_slice().expect("contiguous")));
        }
        out
    }

    fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
        let mut out = vec![(
            "weights".to_string(),
            self.weights.as_slice_mut().expect("standard layout"),
        )];
        if self.use_bias {
            out.push(("bias".to_string(), self.bias.as_slice_mut().expect("contiguous")));
        }
        out
    }
}

impl TryFrom<(Vec<Vec<f64>>, Vec<f64>, Activation)> for DenseLayer {
    type Error = Error;

    fn try_from((rows, bias, activation): (Vec<Vec<f64>>, Vec<f64>, Activation)) -> Result<Self> {
        let out_dim = rows.len();
        let in_dim = rows.first().map_or(0, Vec::len);
        if rows.iter().any(|r| r.len() != in_dim) {
            return Err(Error::invalid("ragged weight rows"));
        }
        let flat: Vec<f64> = rows.into_iter().flatten().collect();
        let weights = Array2::from_shape_vec((out_dim, in_dim), flat).map_err(|e| Error::invalid(e.to_string()))?;
        DenseLayer::new(weights, Array1::from(bias), activation)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{array, Array2};

    #[test]
    fn identity_layer_passes_input_through() {
        let layer = DenseLayer::new(Array2::eye(2), array![0.0, 0.0], Activation::Identity).unwrap();
        assert_eq!(layer.forward(array![1.0, 2.0].view()).unwrap(), array![1.0, 2.0]);
    }

    #[test]
    fn relu_clamps_negative_output() {
        let layer = DenseLayer::new(array![[1.0, 1.0]], array![-3.0], Activation::ReLU).unwrap();
        assert_eq!(layer.forward(array![1.0, 1.0].view()).unwrap(), array![0.0]);
    }

    #[test]
    fn scaling_layer() {
        let layer = DenseLayer::new(array![[2.0, 0.0], [0.0, 2.0]], array![0.0, 0.0], Activation::Identity).unwrap();
        assert_eq!(layer.forward(array![1.0, -1.0].view()).unwrap(), array![2.0, -2.0]);
    }

    #[test]
    fn input_length_mismatch_is_an_error() {
        let layer = DenseLayer::new(Array2::eye(2), array![0.0, 0.0], Activation::Identity).unwrap();
        assert!(matches!(
            layer.forward(array![1.0, 2.0, 3.0].view()),
            Err(Error::Dimension { .. })
        ));
        assert!(DenseLayer::new(Array2::eye(2), array![0.0], Activation::Identity).is_err());
    }

    #[test]
    fn activations_and_derivatives() {
        assert_eq!(Activation::Sigmoid.apply(0.0), 0.5);
        assert_eq!(Activation::Sigmoid.derivative(0.0), 0.25);
        assert_eq!(Activation::Tanh.derivative(0.0), 1.0);
        assert_eq!(Activation::ReLU.derivative(-1.0), 0.0);
        assert!(sigmoid(-800.0).is_finite() && sigmoid(800.0) == 1.0);
    }

    #[test]
    fn init_respects_fan_in_bound() {
        let mut rng = super::super::seed_stream(3);
        let layer = DenseLayer::init(16, 8, Activation::ReLU, &mut rng);
        assert!(layer.weights.iter().all(|w| w.abs() <= 0.25));
        assert_eq!(layer.weights.dim(), (8, 16));
        let out = layer.forward(Array1::from_elem(16, 1e3).view()).unwrap();
        assert!(out.iter().all(|v| v.is_finite()));
    }
}

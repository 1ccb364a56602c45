use serde::{Deserialize, Serialize};

use super::{Gradients, Parameterized};
use crate::error::{check_dim, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 1e-2,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-8,
        }
    }
}

impl AdamConfig {
    pub fn with_learning_rate(learning_rate: f64) -> Self {
        Self {
            learning_rate,
            ..Self::default()
        }
    }
}

/// Adam optimizer state with one pair of moment accumulators per parameter block.
#[derive(Debug, Clone)]
pub struct AdamState {
    pub config: AdamConfig,
    pub step_count: u64,
    first: Vec<Vec<f64>>,
    second: Vec<Vec<f64>>,
}

impl AdamState {
    pub fn new(config: AdamConfig, model: &impl Parameterized) -> Self {
        let shapes: Vec<usize> = model.params().iter().map(|(_, p)| p.len()).collect();
        Self {
            config,
            step_count: 0,
            first: shapes.iter().map(|&n| vec![0.0; n]).collect(),
            second: shapes.iter().map(|&n| vec![0.0; n]).collect(),
        }
    }

    pub fn first_moments(&self) -> &[Vec<f64>] {
        &self.first
    }

    pub fn second_moments(&self) -> &[Vec<f64>] {
        &self.second
    }

    /// One bias-corrected Adam step. Nothing is modified if any gradient is
    /// non-finite or mis-shaped.
    pub fn update(&mut self, model: &mut impl Parameterized, grads: &Gradients) -> Result<()> {
        let mut blocks = model.params_mut();
        check_dim("adam gradient blocks", blocks.len(), grads.len())?;
        check_dim("adam state blocks", self.first.len(), grads.len())?;
        for ((name, p), g) in blocks.iter().zip(grads) {
            check_dim("adam gradient length", p.len(), g.len())?;
            if g.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFiniteGradient { param: name.clone() });
            }
        }

        self.step_count += 1;
        let AdamConfig {
            learning_rate,
            beta1,
            beta2,
            epsilon,
        } = self.config;
        let t = self.step_count as i32;
        let c1 = 1.0 - beta1.powi(t);
        let c2 = 1.0 - beta2.powi(t);
        for (((_, p), g), (m, v)) in blocks
            .iter_mut()
            .zip(grads)
            .zip(self.first.iter_mut().zip(self.second.iter_mut()))
        {
            for k in 0..p.len() {
                m[k] = beta1 * m[k] + (1.0 - beta1) * g[k];
                v[k] = beta2 * v[k] + (1.0 - beta2) * g[k] * g[k];
                let m_hat = m[k] / c1;
                let v_hat = v[k] / c2;
                p[k] -= learning_rate * m_hat / (v_hat.sqrt() + epsilon);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    struct Scalars(Vec<f64>);

    impl Parameterized for Scalars {
        fn params(&self) -> Vec<(String, &[f64])> {
            vec![("p".into(), &self.0)]
        }
        fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
            vec![("p".into(), &mut self.0)]
        }
    }

    #[test]
    fn zero_gradient_is_a_no_op() {
        let mut model = Scalars(vec![1.0, -2.0, 3.5]);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        for _ in 0..20 {
            adam.update(&mut model, &vec![vec![0.0; 3]]).unwrap();
        }
        assert_eq!(model.0, vec![1.0, -2.0, 3.5]);
        assert_eq!(adam.step_count, 20);
    }

    #[test]
    fn first_step_moves_by_learning_rate() {
        let mut model = Scalars(vec![1.0]);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        adam.update(&mut model, &vec![vec![1.0]]).unwrap();
        assert!((model.0[0] - 0.99).abs() < 1e-9, "{}", model.0[0]);
        assert_eq!(adam.step_count, 1);
    }

    #[test]
    fn identical_calls_identical_results() {
        let run = || {
            let mut model = Scalars(vec![0.3, 0.7]);
            let mut adam = AdamState::new(AdamConfig::default(), &model);
            for k in 0..5 {
                adam.update(&mut model, &vec![vec![0.1 * k as f64, -0.2]]).unwrap();
            }
            model.0
        };
        assert_eq!(run(), run());
    }

    #[test]
    fn non_finite_gradient_names_parameter() {
        let mut model = Scalars(vec![1.0]);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        let err = adam.update(&mut model, &vec![vec![f64::NAN]]).unwrap_err();
        assert!(err.to_string().contains("`p`"));
        assert_eq!(adam.step_count, 0);
        assert_eq!(model.0, vec![1.0]);
    }

    #[test]
    fn moments_match_parameter_shapes() {
        let model = Scalars(vec![0.0; 4]);
        let adam = AdamState::new(AdamConfig::default(), &model);
        assert_eq!(adam.first_moments()[0].len(), 4);
        assert_eq!(adam.second_moments()[0].len(), 4);
    }

    #[test]
    fn shape_mismatch_is_rejected() {
        let mut model = Scalars(vec![0.0; 2]);
        let mut adam = AdamState::new(AdamConfig::default(), &model);
        assert!(adam.update(&mut model, &vec![vec![0.0; 3]]).is_err());
    }
}

use serde::Serialize;

use super::{Gradients, Parameterized};

/// A model with a scalar loss over fixed data and hand-derived gradients.
pub trait Differentiable: Parameterized {
    fn loss(&self) -> f64;
    fn loss_and_gradients(&self) -> (f64, Gradients);
}

#[derive(Debug, Clone, Serialize)]
pub struct BlockError {
    pub name: String,
    pub max_rel_error: f64,
    pub max_abs_error: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GradCheckReport {
    pub blocks: Vec<BlockError>,
    pub max_rel_error: f64,
    pub tolerance: f64,
}

impl GradCheckReport {
    pub fn passed(&self) -> bool {
        self.max_rel_error < self.tolerance
    }
}

const STEP: f64 = 1e-5;
/// Gradients smaller than this are compared in absolute terms.
const FLOOR: f64 = 1e-6;

/// Compares analytic gradients with central differences (h = 1e-5).
///
/// Relative error per entry is `|a - n| / max(|a|, |n|, 1e-6)`.
pub fn grad_check<M: Differentiable>(model: &mut M, tolerance: f64) -> GradCheckReport {
    let (_, analytic) = model.loss_and_gradients();
    let names: Vec<String> = model.params().into_iter().map(|(n, _)| n).collect();
    let mut blocks = Vec::with_capacity(names.len());
    for (b, name) in names.into_iter().enumerate() {
        let mut max_rel: f64 = 0.0;
        let mut max_abs: f64 = 0.0;
        for (k, &a) in analytic[b].iter().enumerate() {
            let orig = model.params()[b].1[k];
            model.params_mut()[b].1[k] = orig + STEP;
            let plus = model.loss();
            model.params_mut()[b].1[k] = orig - STEP;
            let minus = model.loss();
            model.params_mut()[b].1[k] = orig;
            let numeric = (plus - minus) / (2.0 * STEP);
            let abs = (a - numeric).abs();
            let rel = abs / a.abs().max(numeric.abs()).max(FLOOR);
            max_rel = max_rel.max(rel);
            max_abs = max_abs.max(abs);
        }
        blocks.push(BlockError {
            name,
            max_rel_error: max_rel,
            max_abs_error: max_abs,
        });
    }
    let max_rel_error = blocks.iter().map(|b| b.max_rel_error).fold(0.0, f64::max);
    GradCheckReport {
        blocks,
        max_rel_error,
        tolerance,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    /// loss = (w·x + b - y)^2
    struct Linear {
        w: Vec<f64>,
        b: Vec<f64>,
        x: Vec<f64>,
        y: f64,
    }

    impl Parameterized for Linear {
        fn params(&self) -> Vec<(String, &[f64])> {
            vec![("w".into(), &self.w), ("b".into(), &self.b)]
        }
        fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
            vec![("w".into(), &mut self.w), ("b".into(), &mut self.b)]
        }
    }

    impl Linear {
        fn residual(&self) -> f64 {
            self.w.iter().zip(&self.x).map(|(w, x)| w * x).sum::<f64>() + self.b[0] - self.y
        }
    }

    impl Differentiable for Linear {
        fn loss(&self) -> f64 {
            self.residual().powi(2)
        }
        fn loss_and_gradients(&self) -> (f64, Gradients) {
            let r = self.residual();
            let gw = self.x.iter().map(|x| 2.0 * r * x).collect();
            (r * r, vec![gw, vec![2.0 * r]])
        }
    }

    #[test]
    fn quadratic_model_is_exact() {
        let mut m = Linear {
            w: vec![0.3, -1.2, 0.8],
            b: vec![0.1],
            x: vec![1.5, 0.2, -0.7],
            y: 2.0,
        };
        let report = grad_check(&mut m, 1e-6);
        assert!(report.passed(), "{report:?}");
        assert_eq!(report.blocks.len(), 2);
        assert_eq!(m.w, vec![0.3, -1.2, 0.8], "parameters restored");
    }

    #[test]
    fn wrong_gradient_is_detected() {
        struct Broken(Linear);
        impl Parameterized for Broken {
            fn params(&self) -> Vec<(String, &[f64])> {
                self.0.params()
            }
            fn params_mut(&mut self) -> Vec<(String, &mut [f64])> {
                self.0.params_mut()
            }
        }
        impl Differentiable for Broken {
            fn loss(&self) -> f64 {
                self.0.loss()
            }
            fn loss_and_gradients(&self) -> (f64, Gradients) {
                let (l, mut g) = self.0.loss_and_gradients();
                g[0][1] *= 1.5;
                (l, g)
            }
        }
        let mut m = Broken(Linear {
            w: vec![0.3, -1.2],
            b: vec![0.1],
            x: vec![1.5, 0.2],
            y: 2.0,
        });
        let report = grad_check(&mut m, 1e-4);
        assert!(!report.passed());
        assert!(report.blocks[0].max_rel_error > 0.1);
        assert!(report.blocks[1].max_rel_error < 1e-6);
    }
}

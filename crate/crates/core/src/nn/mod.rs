//! Small deterministic neural toolkit: dense layers, star-graph convolution,
//! dropout, Adam and a finite-difference gradient checker.
//!
//! Gradients are derived by hand for each fixed architecture. Every model
//! exposes its parameters as named flat blocks through [`Parameterized`], and
//! gradients travel as [`Gradients`] in the same block order.

mod adam;
mod dense;
mod dropout;
mod fit;
mod gcn;
mod gradcheck;
mod stack;

pub use adam::{AdamConfig, AdamState};
pub(crate) use dense::sigmoid;
pub use dense::{Activation, DenseGrads, DenseLayer};
pub use dropout::{dropout, dropout_mask, Mode};
pub use fit::{fit, FitConfig, FitReport};
pub use gcn::StarBatch;
pub use gradcheck::{grad_check, BlockError, Differentiable, GradCheckReport};
pub use stack::{LayerStack, StackCache};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The only random source used by training and generation.
pub type SeedStream = ChaCha8Rng;

/// Gradient blocks, one flat vector per parameter block of a model.
pub type Gradients = Vec<Vec<f64>>;

/// Opens a seed stream. Equal seeds give identical draw sequences.
pub fn seed_stream(seed: u64) -> SeedStream {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Mixes `tag` into `seed` to get an independent child seed (splitmix64 finalizer).
pub fn derive_seed(seed: u64, tag: u64) -> u64 {
    let mut z = seed ^ tag.wrapping_mul(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Named flat parameter blocks of a model.
pub trait Parameterized {
    fn params(&self) -> Vec<(String, &[f64])>;
    fn params_mut(&mut self) -> Vec<(String, &mut [f64])>;

    fn param_count(&self) -> usize {
        self.params().iter().map(|(_, p)| p.len()).sum()
    }

    /// Snapshot of all parameter values, in block order.
    fn snapshot(&self) -> Gradients {
        self.params().into_iter().map(|(_, p)| p.to_vec()).collect()
    }

    fn restore(&mut self, values: &[Vec<f64>]) {
        for ((_, dst), src) in self.params_mut().into_iter().zip(values) {
            dst.copy_from_slice(src);
        }
    }
}

/// Prefixes block names of a sub-component.
pub(crate) fn prefixed<'a, T>(prefix: &str, blocks: Vec<(String, T)>) -> Vec<(String, T)>
where
    T: 'a,
{
    blocks
        .into_iter()
        .map(|(name, p)| (format!("{prefix}.{name}"), p))
        .collect()
}

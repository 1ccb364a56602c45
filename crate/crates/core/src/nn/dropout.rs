use ndarray::{Array, Dimension, ShapeBuilder};
use rand::Rng;

use super::SeedStream;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Mode {
    Train,
    Infer,
}

fn check_rate(rate: f64) -> Result<()> {
    if !(0.0..1.0).contains(&rate) {
        return Err(Error::invalid(format!("dropout rate {rate} outside [0, 1)")));
    }
    Ok(())
}

/// Inverted-dropout mask: entries are 0 with probability `rate`, else `1/(1-rate)`.
/// A zero rate yields all ones without consuming randomness.
pub fn dropout_mask<D, Sh>(shape: Sh, rate: f64, rng: &mut SeedStream) -> Result<Array<f64, D>>
where
    D: Dimension,
    Sh: ShapeBuilder<Dim = D>,
{
    check_rate(rate)?;
    if rate == 0.0 {
        return Ok(Array::ones(shape));
    }
    let keep = 1.0 / (1.0 - rate);
    Ok(Array::from_shape_simple_fn(shape, || {
        if rng.random::<f64>() < rate {
            0.0
        } else {
            keep
        }
    }))
}

/// Applies inverted dropout in training mode; identity at inference.
pub fn dropout<D: Dimension>(x: &Array<f64, D>, rate: f64, mode: Mode, rng: &mut SeedStream) -> Result<Array<f64, D>> {
    check_rate(rate)?;
    match mode {
        Mode::Infer => Ok(x.clone()),
        Mode::Train => {
            let mask = dropout_mask(x.raw_dim(), rate, rng)?;
            Ok(x * &mask)
        }
    }
}

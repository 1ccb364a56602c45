//! Contextual Matrix Profile.
//!
//! Each daily feature column is cut into length-`m` subsequences, all pairwise
//! z-normalized distances are computed (FFT sliding dot products), and the
//! resulting self-join matrix is min-pooled over blocks of `c` consecutive
//! start indices ("contexts") into a C × C matrix per feature.

mod export;
mod measures;
mod pool;
mod profile;
mod znorm;

pub use export::{parse_matrix_csv, pixel, read_matrix_csv, write_matrix_csv, write_pgm};
pub use measures::{bin_cmp, cmp_energy, cmp_entropy, ContextMeasures, ENTROPY_BINS};
pub use pool::{contexts, contextual_min_pool, full_distance_matrix};
pub use profile::{distance_profile_fft, ProfileEngine};
pub use znorm::{max_distance, mean_std, window_stats, znorm_distance, FLAT_STD};

use ndarray::Array2;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Exclusion {
    /// Skip pairs whose subsequences overlap in time (`|i - j| < m`).
    TrivialMatch,
    None,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmpConfig {
    pub subsequence_length: usize,
    pub context_length: usize,
    pub exclusion: Exclusion,
    pub bin_count: Option<usize>,
}

impl Default for CmpConfig {
    fn default() -> Self {
        Self {
            subsequence_length: 3,
            context_length: 3,
            exclusion: Exclusion::TrivialMatch,
            bin_count: None,
        }
    }
}

impl CmpConfig {
    pub fn validate(&self) -> Result<()> {
        if self.subsequence_length < 2 {
            return Err(Error::config("subsequence_length", "must be >= 2"));
        }
        if self.context_length < 1 {
            return Err(Error::config("context_length", "must be >= 1"));
        }
        if let Some(b) = self.bin_count {
            if b < 2 {
                return Err(Error::config("bin_count", "must be >= 2"));
            }
        }
        Ok(())
    }

    pub fn max_distance(&self) -> f64 {
        max_distance(self.subsequence_length)
    }

    /// Number of contexts for a series of `n_days` values.
    pub fn n_contexts(&self, n_days: usize) -> usize {
        let n_sub = (n_days + 1).saturating_sub(self.subsequence_length);
        n_sub.div_ceil(self.context_length)
    }
}

/// Per-feature C × C contextual matrix profiles sharing one configuration.
#[derive(Debug, Clone, PartialEq)]
pub struct Cmp {
    pub config: CmpConfig,
    pub feature_names: Vec<String>,
    pub matrices: Vec<Array2<f64>>,
}

impl Cmp {
    /// Builds one CMP per feature column (parallel over features).
    pub fn compute(feature_names: Vec<String>, columns: &[Vec<f64>], config: CmpConfig) -> Result<Self> {
        config.validate()?;
        crate::error::check_dim("cmp feature names", columns.len(), feature_names.len())?;
        let matrices = columns
            .par_iter()
            .map(|col| single_feature_cmp(col, &config))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config,
            feature_names,
            matrices,
        })
    }

    pub fn from_matrices(config: CmpConfig, feature_names: Vec<String>, matrices: Vec<Array2<f64>>) -> Result<Self> {
        crate::error::check_dim("cmp feature names", matrices.len(), feature_names.len())?;
        let c = matrices.first().map_or(0, Array2::nrows);
        for m in &matrices {
            if m.dim() != (c, c) {
                return Err(Error::invalid("feature CMPs must share one square shape"));
            }
        }
        Ok(Self {
            config,
            feature_names,
            matrices,
        })
    }

    pub fn n_features(&self) -> usize {
        self.matrices.len()
    }

    pub fn n_contexts(&self) -> usize {
        self.matrices.first().map_or(0, Array2::nrows)
    }

    pub fn max_distance(&self) -> f64 {
        self.config.max_distance()
    }

    /// Applies [`bin_cmp`] to every feature matrix.
    pub fn binned(&self, bin_count: usize) -> Result<Self> {
        let matrices = self
            .matrices
            .iter()
            .map(|m| bin_cmp(m, bin_count))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            config: CmpConfig {
                bin_count: Some(bin_count),
                ..self.config
            },
            feature_names: self.feature_names.clone(),
            matrices,
        })
    }
}

/// Full distance matrix, min-pooling and optional binning for one feature.
pub fn single_feature_cmp(series: &[f64], config: &CmpConfig) -> Result<Array2<f64>> {
    let d = full_distance_matrix(series, config.subsequence_length)?;
    let m = contextual_min_pool(&d, config)?;
    match config.bin_count {
        Some(b) => bin_cmp(&m, b),
        None => Ok(m),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn cmp_is_symmetric_and_bounded() {
        let series: Vec<f64> = (0..60).map(|i| ((i * 17 + 3) % 11) as f64 + (i % 7) as f64).collect();
        let cmp = Cmp::compute(vec!["f".into()], &[series], CmpConfig::default()).unwrap();
        let m = &cmp.matrices[0];
        assert_eq!(m.nrows(), CmpConfig::default().n_contexts(60));
        assert_eq!(m.nrows(), 20);
        assert_eq!(m, &m.t());
        assert!(m.iter().all(|&v| (0.0..=cmp.max_distance()).contains(&v)));
    }

    #[test]
    fn config_validation_names_field() {
        let bad = CmpConfig {
            subsequence_length: 1,
            ..CmpConfig::default()
        };
        assert!(bad.validate().unwrap_err().to_string().contains("subsequence_length"));
    }
}

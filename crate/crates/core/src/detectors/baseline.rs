use serde::{Deserialize, Serialize};

use super::ScoreSeries;
use crate::cmp::Cmp;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CmpBaselineConfig {
    pub k: usize,
}

impl Default for CmpBaselineConfig {
    fn default() -> Self {
        Self { k: 1 }
    }
}

/// Mean of the `k` smallest distances from context `i` to earlier contexts
/// (all of them when fewer than `k` exist).
pub fn knn_previous(row: &[f64], k: usize) -> f64 {
    let mut v = row.to_vec();
    v.sort_by(f64::total_cmp);
    let take = k.min(v.len());
    v[..take].iter().sum::<f64>() / take as f64
}

/// Scores contexts `i_min..C` by their mean (over features) nearest-neighbour
/// distance to previous contexts.
pub fn score_cmp_baseline(cmp: &Cmp, cfg: &CmpBaselineConfig, i_min: usize, subject_id: &str) -> Result<ScoreSeries> {
    if cfg.k == 0 {
        return Err(Error::config("k", "must be >= 1"));
    }
    let c = cmp.n_contexts();
    if c < 2 {
        return Err(Error::invalid("baseline needs at least two contexts"));
    }
    let start = i_min.max(1);
    let f = cmp.n_features() as f64;
    let scores = (start..c)
        .map(|i| {
            cmp.matrices
                .iter()
                .map(|m| knn_previous(&m.row(i).as_slice().expect("standard layout")[..i], cfg.k))
                .sum::<f64>()
                / f
        })
        .collect();
    ScoreSeries::new(subject_id, "cmp_baseline", (start..c).collect(), scores)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmp::CmpConfig;
    use ndarray::Array2;

    #[test]
    fn nearest_neighbour_examples() {
        assert_eq!(knn_previous(&[4.0, 1.0, 2.5], 1), 1.0);
        assert_eq!(knn_previous(&[4.0, 1.0, 2.5], 2), 1.75);
        assert_eq!(knn_previous(&[4.0], 3), 4.0);
    }

    #[test]
    fn features_are_averaged() {
        let mut a = Array2::zeros((4, 4));
        let mut b = Array2::zeros((4, 4));
        for (j, v) in [4.0, 1.0, 2.5].iter().enumerate() {
            a[[3, j]] = *v;
            a[[j, 3]] = *v;
            b[[3, j]] = v + 1.0;
            b[[j, 3]] = v + 1.0;
        }
        let cmp = Cmp::from_matrices(CmpConfig::default(), vec!["a".into(), "b".into()], vec![a, b]).unwrap();
        let s = score_cmp_baseline(&cmp, &CmpBaselineConfig::default(), 1, "s").unwrap();
        assert_eq!(s.context_indices, vec![1, 2, 3]);
        assert_eq!(s.scores[2], 1.5);
        assert!(score_cmp_baseline(&cmp, &CmpBaselineConfig { k: 0 }, 1, "s").is_err());
    }
}

use std::ops::Range;

use ndarray::Array2;

use super::profile::ProfileEngine;
use super::znorm::max_distance;
use super::{CmpConfig, Exclusion};
use crate::error::{Error, Result};

/// Self-join distance matrix of all length-`m` subsequences: symmetric with a
/// zero diagonal. Row `i` comes from the FFT distance profile of subsequence
/// `i`; only the upper triangle is used and mirrored.
pub fn full_distance_matrix(series: &[f64], m: usize) -> Result<Array2<f64>> {
    let engine = ProfileEngine::new(series, m)?;
    let len = engine.profile_len();
    let mut d = Array2::zeros((len, len));
    for i in 0..len {
        let row = engine.profile(&series[i..i + m])?;
        for j in i + 1..len {
            d[[i, j]] = row[j];
            d[[j, i]] = row[j];
        }
    }
    Ok(d)
}

/// Consecutive blocks of `context_length` subsequence start indices; a
/// trailing remainder forms a final shorter context.
pub fn contexts(n_subsequences: usize, context_length: usize) -> Vec<Range<usize>> {
    (0..n_subsequences)
        .step_by(context_length.max(1))
        .map(|s| s..(s + context_length).min(n_subsequences))
        .collect()
}

/// Min-pools a distance matrix over context blocks.
///
/// Cell `(a, b)` is the smallest `D[i][j]` with `i` in context `a`, `j` in
/// context `b`, skipping trivial matches (`|i - j| < m`) when exclusion is on.
/// A cell whose pairs are all excluded takes the maximum distance `2√m`.
pub fn contextual_min_pool(d: &Array2<f64>, config: &CmpConfig) -> Result<Array2<f64>> {
    config.validate()?;
    if d.nrows() != d.ncols() {
        return Err(Error::invalid("distance matrix must be square"));
    }
    let m = config.subsequence_length;
    let zone = match config.exclusion {
        Exclusion::TrivialMatch => m,
        Exclusion::None => 0,
    };
    let blocks = contexts(d.nrows(), config.context_length);
    let c = blocks.len();
    let dmax = max_distance(m);
    let mut out = Array2::from_elem((c, c), dmax);
    for a in 0..c {
        for b in a..c {
            let mut best = f64::INFINITY;
            for i in blocks[a].clone() {
                for j in blocks[b].clone() {
                    if i.abs_diff(j) < zone {
                        continue;
                    }
                    best = best.min(d[[i, j]]);
                }
            }
            if best.is_finite() {
                out[[a, b]] = best;
                out[[b, a]] = best;
            }
        }
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::cmp::znorm_distance;

    #[test]
    fn contexts_tile_with_short_tail() {
        assert_eq!(contexts(7, 3), vec![0..3, 3..6, 6..7]);
        assert_eq!(contexts(6, 3), vec![0..3, 3..6]);
    }

    #[test]
    fn full_matrix_is_symmetric_and_matches_naive() {
        let series = [3.0, 1.0, 4.0, 1.0, 5.0, 9.0, 2.0, 6.0, 5.0, 3.0];
        let d = full_distance_matrix(&series, 3).unwrap();
        assert_eq!(d.dim(), (8, 8));
        assert_eq!(d, d.t());
        for i in 0..8 {
            assert_eq!(d[[i, i]], 0.0);
            for j in 0..8 {
                if i != j {
                    let naive = znorm_distance(&series[i..i + 3], &series[j..j + 3]).unwrap();
                    assert!((d[[i, j]] - naive).abs() < 1e-9);
                }
            }
        }
    }

    #[test]
    fn explicit_block_minimum() {
        // Contexts {0,1} and {2,3}; exclusion off so the block is fully visible.
        let mut d = Array2::zeros((4, 4));
        let block = [[5.0, 2.0], [4.0, 7.0]];
        for (r, row) in block.iter().enumerate() {
            for (c, &v) in row.iter().enumerate() {
                d[[r, 2 + c]] = v;
                d[[2 + c, r]] = v;
            }
        }
        let cfg = CmpConfig {
            subsequence_length: 2,
            context_length: 2,
            exclusion: Exclusion::None,
            bin_count: None,
        };
        let cmp = contextual_min_pool(&d, &cfg).unwrap();
        assert_eq!(cmp[[0, 1]], 2.0);
        assert_eq!(cmp[[1, 0]], 2.0);
    }

    #[test]
    fn fully_excluded_cells_take_maximum() {
        let series: Vec<f64> = (0..12).map(|i| ((i * 5) % 7) as f64).collect();
        let d = full_distance_matrix(&series, 3).unwrap();
        let cmp = contextual_min_pool(&d, &CmpConfig::default()).unwrap();
        // c = m = 3: every within-context pair is a trivial match.
        for a in 0..cmp.nrows() {
            assert_eq!(cmp[[a, a]], max_distance(3));
        }
    }
}

use ndarray::{s, Array2};

use crate::error::{Error, Result};

/// Number of equal-width bins used by [`cmp_entropy`].
pub const ENTROPY_BINS: usize = 16;

/// Quantizes every entry into `bin_count` equal-width bins over
/// `[min(M), max(M)]` and replaces it by the bin midpoint.
///
/// Bins are closed on the right (`[lo, e1], (e1, e2], ...`), so an entry on an
/// interior edge falls into the lower bin. A constant matrix is returned as is.
pub fn bin_cmp(m: &Array2<f64>, bin_count: usize) -> Result<Array2<f64>> {
    if bin_count < 2 {
        return Err(Error::invalid(format!("bin_count must be >= 2, got {bin_count}")));
    }
    let lo = m.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = m.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if !(hi > lo) {
        return Ok(m.clone());
    }
    let width = (hi - lo) / bin_count as f64;
    let last = bin_count as f64 - 1.0;
    Ok(m.mapv(|v| {
        let k = (((v - lo) / width).ceil() - 1.0).clamp(0.0, last);
        lo + (k + 0.5) * width
    }))
}

/// Frobenius norm of `M[0..=upto][0..=upto]`.
pub fn cmp_energy(m: &Array2<f64>, upto: usize) -> f64 {
    m.slice(s![..=upto, ..=upto]).iter().map(|v| v * v).sum::<f64>().sqrt()
}

fn entropy_bin(v: f64, max_distance: f64) -> usize {
    let width = max_distance / ENTROPY_BINS as f64;
    ((v / width).floor().max(0.0) as usize).min(ENTROPY_BINS - 1)
}

fn shannon(counts: &[u64]) -> f64 {
    let total: u64 = counts.iter().sum();
    if total == 0 {
        return 0.0;
    }
    let n = total as f64;
    -counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            p * p.ln()
        })
        .sum::<f64>()
}

/// Shannon entropy (natural log) of the 16-bin histogram over `[0, max_distance]`
/// of the strict upper triangle of `M[0..=upto][0..=upto]`.
/// A 1×1 submatrix has no entries and entropy 0.
pub fn cmp_entropy(m: &Array2<f64>, upto: usize, max_distance: f64) -> f64 {
    let mut counts = [0u64; ENTROPY_BINS];
    for a in 0..=upto {
        for b in a + 1..=upto {
            counts[entropy_bin(m[[a, b]], max_distance)] += 1;
        }
    }
    shannon(&counts)
}

/// Energy and entropy of every leading submatrix `M[0..=i][0..=i]`, computed
/// incrementally.
#[derive(Debug, Clone, PartialEq)]
pub struct ContextMeasures {
    pub energy: Vec<f64>,
    pub entropy: Vec<f64>,
}

impl ContextMeasures {
    pub fn new(m: &Array2<f64>, max_distance: f64) -> Self {
        let c = m.nrows();
        let mut energy = Vec::with_capacity(c);
        let mut entropy = Vec::with_capacity(c);
        let mut sumsq = 0.0;
        let mut counts = [0u64; ENTROPY_BINS];
        for i in 0..c {
            for j in 0..i {
                sumsq += m[[i, j]] * m[[i, j]] + m[[j, i]] * m[[j, i]];
                counts[entropy_bin(m[[j, i]], max_distance)] += 1;
            }
            sumsq += m[[i, i]] * m[[i, i]];
            energy.push(sumsq.sqrt());
            entropy.push(shannon(&counts));
        }
        Self { energy, entropy }
    }
}

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::znorm::{flat_rule, max_distance, mean_std, window_stats, FLAT_STD};
use crate::error::{Error, Result};

/// Below this `1 - ρ` the FFT correlation has too few significant digits left,
/// so the distance is recomputed directly from the window.
const REFINE_BELOW: f64 = 1e-3;

/// Sliding z-normalized distance profiles over one series (MASS).
///
/// The series spectrum is computed once; each query then costs one forward
/// and one inverse FFT. The series is centered on its global mean before the
/// transform and the query is z-normalized, so the sliding dot product equals
/// `m·σ_window·ρ` without any mean cancellation. Near-matches are refined
/// directly.
pub struct ProfileEngine {
    series: Vec<f64>,
    n: usize,
    m: usize,
    fft_len: usize,
    series_spectrum: Vec<Complex64>,
    window_mean: Vec<f64>,
    window_std: Vec<f64>,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
}

impl ProfileEngine {
    pub fn new(series: &[f64], m: usize) -> Result<Self> {
        let n = series.len();
        if m == 0 || m > n {
            return Err(Error::invalid(format!(
                "subsequence length {m} invalid for series of length {n}"
            )));
        }
        let fft_len = (n + m).next_power_of_two();
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(fft_len);
        let inverse = planner.plan_fft_inverse(fft_len);
        let (global_mean, _) = mean_std(series);
        let mut series_spectrum = vec![Complex64::new(0.0, 0.0); fft_len];
        for (slot, &v) in series_spectrum.iter_mut().zip(series) {
            slot.re = v - global_mean;
        }
        forward.process(&mut series_spectrum);
        let (window_mean, window_std) = window_stats(series, m);
        Ok(Self {
            series: series.to_vec(),
            n,
            m,
            fft_len,
            series_spectrum,
            window_mean,
            window_std,
            forward,
            inverse,
        })
    }

    pub fn profile_len(&self) -> usize {
        self.n - self.m + 1
    }

    pub fn profile(&self, query: &[f64]) -> Result<Vec<f64>> {
        crate::error::check_dim("distance profile query", self.m, query.len())?;
        let m = self.m;
        let dmax = max_distance(m);
        let (q_mean, q_std) = mean_std(query);
        if q_std < FLAT_STD {
            return Ok(self
                .window_std
                .iter()
                .map(|&s| flat_rule(true, s < FLAT_STD, m).unwrap_or(dmax))
                .collect());
        }

        let mut buf = vec![Complex64::new(0.0, 0.0); self.fft_len];
        for (k, &v) in query.iter().rev().enumerate() {
            buf[k].re = (v - q_mean) / q_std;
        }
        self.forward.process(&mut buf);
        for (b, s) in buf.iter_mut().zip(&self.series_spectrum) {
            *b *= s;
        }
        self.inverse.process(&mut buf);
        let scale = 1.0 / self.fft_len as f64;

        let mf = m as f64;
        Ok((0..self.profile_len())
            .map(|i| {
                let s = self.window_std[i];
                if s < FLAT_STD {
                    return dmax;
                }
                let dot = buf[i + m - 1].re * scale;
                let rho = (dot / (mf * s)).clamp(-1.0, 1.0);
                if 1.0 - rho < REFINE_BELOW {
                    return self.direct(i, query, q_mean, q_std).min(dmax);
                }
                (2.0 * mf * (1.0 - rho)).sqrt().min(dmax)
            })
            .collect())
    }

    fn direct(&self, i: usize, query: &[f64], q_mean: f64, q_std: f64) -> f64 {
        let (mu, sd) = (self.window_mean[i], self.window_std[i]);
        self.series[i..i + self.m]
            .iter()
            .zip(query)
            .map(|(x, q)| {
                let d = (x - mu) / sd - (q - q_mean) / q_std;
                d * d
            })
            .sum::<f64>()
            .sqrt()
    }
}

/// Distance from `query` to every length-`m` subsequence of `series` via FFT
/// sliding dot products.
pub fn distance_profile_fft(series: &[f64], query: &[f64]) -> Result<Vec<f64>> {
    ProfileEngine::new(series, query.len())?.profile(query)
}

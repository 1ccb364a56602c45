//! Sliding-window moving-average thresholding of score series.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::detectors::ScoreSeries;
use crate::error::{Error, Result};

/// Floor for the window standard deviation, so a constant window still
/// alerts on a genuine jump.
pub const STD_FLOOR: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdConfig {
    pub window: usize,
    pub n_std: f64,
    /// Minimum number of preceding scores before an index may alert.
    pub min_fill: usize,
    /// Drop alerted scores from later windows.
    pub mask_alerts: bool,
}

impl Default for ThresholdConfig {
    fn default() -> Self {
        Self {
            window: 7,
            n_std: 1.0,
            min_fill: 7,
            mask_alerts: false,
        }
    }
}

impl ThresholdConfig {
    pub fn validate(&self) -> Result<()> {
        if self.window < 2 {
            return Err(Error::config("window", "must be >= 2"));
        }
        if !(self.n_std > 0.0) || !self.n_std.is_finite() {
            return Err(Error::config("n_std", "must be a positive number"));
        }
        if self.min_fill == 0 || self.min_fill > self.window {
            return Err(Error::config("min_fill", "must lie in [1, window]"));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Alert {
    pub context_index: usize,
    pub day_index: usize,
    pub score: f64,
    pub threshold: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AlertSeries {
    pub subject_id: String,
    pub detector: String,
    pub alerts: Vec<Alert>,
}

impl AlertSeries {
    pub fn context_indices(&self) -> Vec<usize> {
        self.alerts.iter().map(|a| a.context_index).collect()
    }

    pub fn day_indices(&self) -> Vec<usize> {
        self.alerts.iter().map(|a| a.day_index).collect()
    }
}

/// Population mean and standard deviation (two-pass, floored at [`STD_FLOOR`]).
pub fn window_mean_std(window: &[f64]) -> (f64, f64) {
    let n = window.len() as f64;
    let mean = window.iter().sum::<f64>() / n;
    let var = window.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n;
    (mean, var.sqrt().max(STD_FLOOR))
}

/// Alerts where a score exceeds `mean + n_std * std` of the preceding window.
///
/// The window holds the previous `window` scores (or previous non-alerted
/// scores when masking), never the current one. `context_length` maps a
/// context index to its first day.
pub fn threshold(scores: &ScoreSeries, cfg: &ThresholdConfig, context_length: usize) -> Result<AlertSeries> {
    cfg.validate()?;
    let mut alerts = Vec::new();
    let mut history: Vec<f64> = Vec::with_capacity(scores.len());
    for (&idx, &s) in scores.context_indices.iter().zip(&scores.scores) {
        let mut alerted = false;
        if history.len() >= cfg.min_fill {
            let start = history.len().saturating_sub(cfg.window);
            let (mean, std) = window_mean_std(&history[start..]);
            let limit = mean + cfg.n_std * std;
            if s > limit {
                alerted = true;
                alerts.push(Alert {
                    context_index: idx,
                    day_index: idx * context_length,
                    score: s,
                    threshold: limit,
                });
            }
        }
        if !(alerted && cfg.mask_alerts) {
            history.push(s);
        }
    }
    Ok(AlertSeries {
        subject_id: scores.subject_id.clone(),
        detector: scores.detector.clone(),
        alerts,
    })
}

const HEADER: [&str; 6] = [
    "subject_id",
    "context_index",
    "day_index",
    "score",
    "threshold",
    "detector_name",
];

pub fn write_alerts_csv(path: &Path, series: &[AlertSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for s in series {
        for a in &s.alerts {
            w.write_record([
                s.subject_id.as_str(),
                &a.context_index.to_string(),
                &a.day_index.to_string(),
                &a.score.to_string(),
                &a.threshold.to_string(),
                &s.detector,
            ])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads alerts grouped per (subject, detector), sorted by subject.
pub fn read_alerts_csv(path: &Path) -> Result<Vec<AlertSeries>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::invalid(format!(
            "{}: expected header {}",
            path.display(),
            HEADER.join(",")
        )));
    }
    let mut grouped: std::collections::BTreeMap<(String, String), Vec<Alert>> = Default::default();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::invalid(format!("{}: row {}: bad {what}", path.display(), n + 2));
        let alert = Alert {
            context_index: rec[1].trim().parse().map_err(|_| bad("context_index"))?,
            day_index: rec[2].trim().parse().map_err(|_| bad("day_index"))?,
            score: rec[3].trim().parse().map_err(|_| bad("score"))?,
            threshold: rec[4].trim().parse().map_err(|_| bad("threshold"))?,
        };
        grouped
            .entry((rec[0].to_string(), rec[5].to_string()))
            .or_default()
            .push(alert);
    }
    Ok(grouped
        .into_iter()
        .map(|((subject_id, detector), alerts)| AlertSeries {
            subject_id,
            detector,
            alerts,
        })
        .collect())
}

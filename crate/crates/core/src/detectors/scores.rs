use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-context anomaly scores of one subject from one detector.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreSeries {
    pub subject_id: String,
    pub detector: String,
    pub context_indices: Vec<usize>,
    pub scores: Vec<f64>,
}

impl ScoreSeries {
    /// Checks that indices strictly increase and every score is finite.
    pub fn new(
        subject_id: impl Into<String>,
        detector: impl Into<String>,
        context_indices: Vec<usize>,
        scores: Vec<f64>,
    ) -> Result<Self> {
        crate::error::check_dim("score series", context_indices.len(), scores.len())?;
        if context_indices.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::invalid("score context indices must be strictly increasing"));
        }
        if let Some(pos) = scores.iter().position(|s| !s.is_finite()) {
            return Err(Error::invalid(format!(
                "non-finite score at context {}",
                context_indices[pos]
            )));
        }
        Ok(Self {
            subject_id: subject_id.into(),
            detector: detector.into(),
            context_indices,
            scores,
        })
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        self.scores.is_empty()
    }
}

const HEADER: [&str; 4] = ["subject_id", "context_index", "score", "detector_name"];

pub fn write_scores_csv(path: &Path, series: &[ScoreSeries]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(HEADER)?;
    for s in series {
        for (i, v) in s.context_indices.iter().zip(&s.scores) {
            w.write_record([s.subject_id.as_str(), &i.to_string(), &v.to_string(), &s.detector])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Reads a score CSV back into one series per (subject, detector), sorted by subject.
pub fn read_scores_csv(path: &Path) -> Result<Vec<ScoreSeries>> {
    let mut r = csv::Reader::from_path(path)?;
    if r.headers()?.iter().collect::<Vec<_>>() != HEADER {
        return Err(Error::invalid(format!(
            "{}: expected header {}",
            path.display(),
            HEADER.join(",")
        )));
    }
    let mut grouped: BTreeMap<(String, String), (Vec<usize>, Vec<f64>)> = BTreeMap::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let bad = |what: &str| Error::invalid(format!("{}: row {}: bad {what}", path.display(), n + 2));
        let idx: usize = rec[1].trim().parse().map_err(|_| bad("context_index"))?;
        let score: f64 = rec[2].trim().parse().map_err(|_| bad("score"))?;
        let e = grouped.entry((rec[0].to_string(), rec[3].to_string())).or_default();
        e.0.push(idx);
        e.1.push(score);
    }
    grouped
        .into_iter()
        .map(|((subject, detector), (idx, scores))| ScoreSeries::new(subject, detector, idx, scores))
        .collect()
}

//! Recall with soft label margins, alert rate and subject validity.

use std::collections::{BTreeMap, BTreeSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Margins {
    pub before: usize,
    pub after: usize,
}

impl Default for Margins {
    fn default() -> Self {
        Self { before: 10, after: 7 }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct LabeledEvent {
    pub subject_id: String,
    pub day: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalConfig {
    pub margins: Margins,
    /// Validity counts subjects whose recall exceeds this percentage.
    pub x_percent: f64,
    /// Alert rate over all pooled days instead of the mean of per-subject rates.
    pub pooled_alert_rate: bool,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            margins: Margins::default(),
            x_percent: 50.0,
            pooled_alert_rate: false,
        }
    }
}

/// For each label day, whether some alert day falls in `[d - before, d + after]`.
pub fn match_events(alert_days: &[usize], label_days: &[usize], margins: Margins) -> Vec<bool> {
    let sorted: BTreeSet<usize> = alert_days.iter().copied().collect();
    label_days
        .iter()
        .map(|&d| {
            let lo = d.saturating_sub(margins.before);
            sorted.range(lo..=d + margins.after).next().is_some()
        })
        .collect()
}

/// Everything known about one subject going into [`report`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectOutcome {
    pub subject_id: String,
    pub alert_days: Vec<usize>,
    pub label_days: Vec<usize>,
    pub scored_days: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubjectReport {
    pub subject_id: String,
    pub n_events: usize,
    pub n_detected: usize,
    /// `None` when the subject has no labels.
    pub recall_pct: Option<f64>,
    pub alert_days: usize,
    pub scored_days: usize,
    pub alert_rate_pct: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub subjects: Vec<SubjectReport>,
    pub total_events: usize,
    pub detected_events: usize,
    /// Detected events over all events, pooled across the cohort.
    pub recall_pct: f64,
    /// Mean of per-subject recalls over subjects with labels.
    pub mean_subject_recall_pct: f64,
    pub alert_rate_pct: f64,
    pub pooled_alert_rate: bool,
    pub validity: usize,
    pub validity_of: usize,
    pub x_percent: f64,
    pub margin_before: usize,
    pub margin_after: usize,
}

fn pct(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64 * 100.0
    }
}

pub fn report(outcomes: &[SubjectOutcome], cfg: &EvalConfig) -> Result<EvalReport> {
    let mut seen = BTreeSet::new();
    let mut subjects = Vec::with_capacity(outcomes.len());
    for o in outcomes {
        if !seen.insert(&o.subject_id) {
            return Err(Error::invalid(format!("subject `{}` listed twice", o.subject_id)));
        }
        let alert_days: BTreeSet<usize> = o.alert_days.iter().copied().collect();
        if alert_days.len() > o.scored_days {
            return Err(Error::invalid(format!(
                "subject `{}`: {} alert days exceed {} scored days",
                o.subject_id,
                alert_days.len(),
                o.scored_days
            )));
        }
        let detected = match_events(&o.alert_days, &o.label_days, cfg.margins);
        let n_detected = detected.iter().filter(|&&d| d).count();
        subjects.push(SubjectReport {
            subject_id: o.subject_id.clone(),
            n_events: o.label_days.len(),
            n_detected,
            recall_pct: (!o.label_days.is_empty()).then(|| pct(n_detected, o.label_days.len())),
            alert_days: alert_days.len(),
            scored_days: o.scored_days,
            alert_rate_pct: pct(alert_days.len(), o.scored_days),
        });
    }
    let total_events: usize = subjects.iter().map(|s| s.n_events).sum();
    let detected_events: usize = subjects.iter().map(|s| s.n_detected).sum();
    let recalls: Vec<f64> = subjects.iter().filter_map(|s| s.recall_pct).collect();
    let mean_subject_recall_pct = if recalls.is_empty() {
        0.0
    } else {
        recalls.iter().sum::<f64>() / recalls.len() as f64
    };
    let alert_rate_pct = if cfg.pooled_alert_rate {
        pct(
            subjects.iter().map(|s| s.alert_days).sum(),
            subjects.iter().map(|s| s.scored_days).sum(),
        )
    } else if subjects.is_empty() {
        0.0
    } else {
        subjects.iter().map(|s| s.alert_rate_pct).sum::<f64>() / subjects.len() as f64
    };
    Ok(EvalReport {
        validity: recalls.iter().filter(|&&r| r > cfg.x_percent).count(),
        validity_of: recalls.len(),
        subjects,
        total_events,
        detected_events,
        recall_pct: pct(detected_events, total_events),
        mean_subject_recall_pct,
        alert_rate_pct,
        pooled_alert_rate: cfg.pooled_alert_rate,
        x_percent: cfg.x_percent,
        margin_before: cfg.margins.before,
        margin_after: cfg.margins.after,
    })
}

/// Joins per-subject alert days, labels and scored-day counts. Alerts or
/// labels for a subject without scored days are an error.
pub fn assemble_outcomes(
    alert_days: &BTreeMap<String, Vec<usize>>,
    labels: &[LabeledEvent],
    scored_days: &BTreeMap<String, usize>,
) -> Result<Vec<SubjectOutcome>> {
    for s in alert_days.keys() {
        if !scored_days.contains_key(s) {
            return Err(Error::invalid(format!("alerts for subject `{s}` which has no scores")));
        }
    }
    let mut label_days: BTreeMap<&str, Vec<usize>> = BTreeMap::new();
    for l in labels {
        if !scored_days.contains_key(&l.subject_id) {
            return Err(Error::invalid(format!(
                "labels for subject `{}` which has no scores",
                l.subject_id
            )));
        }
        label_days.entry(&l.subject_id).or_default().push(l.day);
    }
    Ok(scored_days
        .iter()
        .map(|(s, &days)| SubjectOutcome {
            subject_id: s.clone(),
            alert_days: alert_days.get(s).cloned().unwrap_or_default(),
            label_days: label_days.remove(s.as_str()).unwrap_or_default(),
            scored_days: days,
        })
        .collect())
}

pub fn read_labels_csv(path: &Path) -> Result<Vec<LabeledEvent>> {
    let mut r = csv::Reader::from_path(path)?;
    let header: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
    if header != ["subject_id", "day_index"] {
        return Err(Error::invalid(format!(
            "{}: expected header subject_id,day_index",
            path.display()
        )));
    }
    let mut out = Vec::new();
    for (n, rec) in r.records().enumerate() {
        let rec = rec?;
        let day = rec[1]
            .trim()
            .parse()
            .map_err(|_| Error::invalid(format!("{}: row {}: bad day_index", path.display(), n + 2)))?;
        out.push(LabeledEvent {
            subject_id: rec[0].to_string(),
            day,
        });
    }
    Ok(out)
}

impl EvalReport {
    pub fn write_json(&self, path: &Path) -> Result<()> {
        let text = serde_json::to_string_pretty(self)?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    /// Per-subject rows followed by a cohort row with subject id `ALL`.
    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record([
            "subject_id",
            "n_events",
            "n_detected",
            "recall_pct",
            "alert_days",
            "scored_days",
            "alert_rate_pct",
        ])?;
        for s in &self.subjects {
            w.write_record([
                s.subject_id.clone(),
                s.n_events.to_string(),
                s.n_detected.to_string(),
                s.recall_pct.map_or(String::new(), |r| r.to_string()),
                s.alert_days.to_string(),
                s.scored_days.to_string(),
                s.alert_rate_pct.to_string(),
            ])?;
        }
        w.write_record([
            "ALL".to_string(),
            self.total_events.to_string(),
            self.detected_events.to_string(),
            self.recall_pct.to_string(),
            self.subjects.iter().map(|s| s.alert_days).sum::<usize>().to_string(),
            self.subjects.iter().map(|s| s.scored_days).sum::<usize>().to_string(),
            self.alert_rate_pct.to_string(),
        ])?;
        w.flush().map_err(|e| Error::io(path, e))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn margin_examples() {
        let m = Margins::default();
        assert_eq!(match_events(&[95], &[100], m), vec![true]);
        assert_eq!(match_events(&[108], &[100], m), vec![false]);
        assert_eq!(match_events(&[107, 90], &[100], m), vec![true]);
        assert_eq!(match_events(&[89], &[100], m), vec![false]);
        assert_eq!(match_events(&[], &[100, 3], m), vec![false, false]);
        assert_eq!(match_events(&[0], &[3], m), vec![true]);
        assert_eq!(match_events(&[50], &[45, 52], m), vec![true, true]);
    }

    fn outcome(id: &str, alerts: Vec<usize>, labels: Vec<usize>, scored: usize) -> SubjectOutcome {
        SubjectOutcome {
            subject_id: id.into(),
            alert_days: alerts,
            label_days: labels,
            scored_days: scored,
        }
    }

    #[test]
    fn report_examples() {
        let r = report(&[outcome("a", vec![100], vec![100, 300], 400)], &EvalConfig::default()).unwrap();
        assert_eq!(r.recall_pct, 50.0);
        let alerts: Vec<usize> = (0..10).map(|k| k * 20).collect();
        let r = report(&[outcome("a", alerts, vec![], 200)], &EvalConfig::default()).unwrap();
        assert_eq!(r.alert_rate_pct, 5.0);
        assert_eq!(r.subjects[0].recall_pct, None);
        assert_eq!(r.validity_of, 0);
    }

    #[test]
    fn empty_alerts() {
        let r = report(&[outcome("a", vec![], vec![10, 50], 300)], &EvalConfig::default()).unwrap();
        assert_eq!((r.recall_pct, r.alert_rate_pct, r.validity), (0.0, 0.0, 0));
    }

    #[test]
    fn pooled_alert_rate_flag() {
        let subjects = [outcome("a", vec![1], vec![], 10), outcome("b", vec![], vec![], 90)];
        let per_subject = report(&subjects, &EvalConfig::default()).unwrap();
        assert_eq!(per_subject.alert_rate_pct, 5.0);
        let cfg = EvalConfig {
            pooled_alert_rate: true,
            ..EvalConfig::default()
        };
        assert_eq!(report(&subjects, &cfg).unwrap().alert_rate_pct, 1.0);
    }

    #[test]
    fn assemble_rejects_unknown_subjects() {
        let scored: BTreeMap<String, usize> = [("a".to_string(), 30)].into();
        let alerts: BTreeMap<String, Vec<usize>> = [("b".to_string(), vec![1])].into();
        assert!(assemble_outcomes(&alerts, &[], &scored).is_err());
        let labels = [LabeledEvent {
            subject_id: "z".into(),
            day: 3,
        }];
        assert!(assemble_outcomes(&BTreeMap::new(), &labels, &scored).is_err());
        let ok = assemble_outcomes(&BTreeMap::new(), &[], &scored).unwrap();
        assert_eq!(ok.len(), 1);
    }
}

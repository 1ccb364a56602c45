//! Sensor event parsing, deduplication and daily feature extraction.
//!
//! Per location and day five features are produced: total firing count,
//! early-AM count (local hours 0-5), late-PM count (hours 18-23), dwell
//! duration and the day-over-day Wasserstein drift of the 24-bin hourly
//! firing histogram.

use std::collections::{BTreeMap, BTreeSet};
use std::fs::File;
use std::path::Path;

use chrono::{DateTime, NaiveDateTime};
use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

pub const SECONDS_PER_DAY: i64 = 86_400;
pub const HOURS: usize = 24;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub struct EventRecord {
    pub subject_id: String,
    /// Seconds since the Unix epoch, UTC.
    pub timestamp: i64,
    pub location: String,
}

impl EventRecord {
    pub fn new(subject_id: impl Into<String>, timestamp: i64, location: impl Into<String>) -> Self {
        Self {
            subject_id: subject_id.into(),
            timestamp,
            location: location.into(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum FeatureKind {
    Duration,
    EarlyAmCount,
    LatePmCount,
    TotalCount,
    WsDrift,
}

impl FeatureKind {
    /// All kinds in lexicographic order of their names.
    pub const ALL: [FeatureKind; 5] = [
        FeatureKind::Duration,
        FeatureKind::EarlyAmCount,
        FeatureKind::LatePmCount,
        FeatureKind::TotalCount,
        FeatureKind::WsDrift,
    ];

    pub fn name(self) -> &'static str {
        match self {
            FeatureKind::Duration => "duration",
            FeatureKind::EarlyAmCount => "early_am_count",
            FeatureKind::LatePmCount => "late_pm_count",
            FeatureKind::TotalCount => "total_count",
            FeatureKind::WsDrift => "ws_drift",
        }
    }
}

pub fn feature_name(location: &str, kind: FeatureKind) -> String {
    format!("{location}.{}", kind.name())
}

/// How hourly histograms are compared by the drift feature.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum WsMode {
    /// Unit-mass histograms; an all-zero day is treated as uniform.
    #[default]
    Normalized,
    /// CDFs of raw counts.
    RawCounts,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IngestConfig {
    /// Same-location firings closer than this (seconds) are dropped.
    pub dedup_window: i64,
    /// Cap on a single firing's dwell contribution (seconds).
    pub max_dwell: i64,
    /// Local time = UTC + offset (seconds); days start at local midnight.
    pub tz_offset: i64,
    pub ws_mode: WsMode,
    /// Declared location set; inferred from the events when empty.
    pub locations: Vec<String>,
    /// Record length in days; inferred from the last event when `None`.
    pub n_days: Option<usize>,
    /// Epoch seconds of any instant within day 0; defaults to the first event.
    pub origin: Option<i64>,
}

impl Default for IngestConfig {
    fn default() -> Self {
        Self {
            dedup_window: 60,
            max_dwell: 3600,
            tz_offset: 0,
            ws_mode: WsMode::Normalized,
            locations: Vec::new(),
            n_days: None,
            origin: None,
        }
    }
}

/// Days × features matrix of one subject. Columns are ordered
/// lexicographically by (location, feature kind).
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub subject_id: String,
    pub feature_names: Vec<String>,
    pub values: Array2<f64>,
}

impl FeatureMatrix {
    pub fn n_days(&self) -> usize {
        self.values.nrows()
    }

    pub fn n_features(&self) -> usize {
        self.values.ncols()
    }

    pub fn column(&self, f: usize) -> Vec<f64> {
        self.values.column(f).to_vec()
    }

    pub fn columns(&self) -> Vec<Vec<f64>> {
        (0..self.n_features()).map(|f| self.column(f)).collect()
    }

    pub fn get(&self, day: usize, name: &str) -> Option<f64> {
        let f = self.feature_names.iter().position(|n| n == name)?;
        self.values.get((day, f)).copied()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(&self.feature_names)?;
        for row in self.values.rows() {
            w.write_record(row.iter().map(|v| v.to_string()))?;
        }
        w.flush().map_err(|e| Error::io(path, e))
    }

    pub fn read_csv(path: &Path, subject_id: &str) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let feature_names: Vec<String> = r.headers()?.iter().map(str::to_string).collect();
        let mut flat = Vec::new();
        let mut rows = 0;
        for rec in r.records() {
            let rec = rec?;
            for cell in rec.iter() {
                flat.push(
                    cell.parse::<f64>()
                        .map_err(|_| Error::invalid(format!("{}: bad number `{cell}`", path.display())))?,
                );
            }
            rows += 1;
        }
        let values =
            Array2::from_shape_vec((rows, feature_names.len()), flat).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(Self {
            subject_id: subject_id.to_string(),
            feature_names,
            values,
        })
    }
}

fn parse_timestamp(raw: &str) -> Result<i64> {
    let s = raw.trim();
    if let Ok(v) = s.parse::<i64>() {
        return Ok(v);
    }
    if let Ok(dt) = DateTime::parse_from_rfc3339(s) {
        return Ok(dt.timestamp());
    }
    for fmt in ["%Y-%m-%dT%H:%M:%S", "%Y-%m-%d %H:%M:%S", "%Y-%m-%dT%H:%M:%S%.f"] {
        if let Ok(dt) = NaiveDateTime::parse_from_str(s, fmt) {
            return Ok(dt.and_utc().timestamp());
        }
    }
    Err(Error::invalid(format!("unparseable timestamp `{s}`")))
}

/// Reads `subject_id,timestamp,location` rows; timestamps are integer epoch
/// seconds or ISO-8601 (naive times are taken as UTC).
pub fn read_events_csv(path: &Path) -> Result<Vec<EventRecord>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_events(file)
}

pub fn read_events(reader: impl std::io::Read) -> Result<Vec<EventRecord>> {
    let mut r = csv::Reader::from_reader(reader);
    let headers = r.headers()?.clone();
    let expected = ["subject_id", "timestamp", "location"];
    if headers.iter().map(str::trim).collect::<Vec<_>>() != expected {
        return Err(Error::invalid(format!(
            "event CSV header must be `subject_id,timestamp,location`, got `{}`",
            headers.iter().collect::<Vec<_>>().join(",")
        )));
    }
    let mut out = Vec::new();
    for (line, rec) in r.records().enumerate() {
        let rec = rec?;
        if rec.len() != 3 {
            return Err(Error::invalid(format!("event row {}: expected 3 fields", line + 2)));
        }
        let timestamp = parse_timestamp(&rec[1]).map_err(|e| Error::invalid(format!("event row {}: {e}", line + 2)))?;
        out.push(EventRecord::new(rec[0].trim(), timestamp, rec[2].trim()));
    }
    Ok(out)
}

pub fn write_events_csv(path: &Path, events: &[EventRecord]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subject_id", "timestamp", "location"])?;
    for e in events {
        w.write_record([e.subject_id.as_str(), &e.timestamp.to_string(), e.location.as_str()])?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Splits events by subject (sorted by subject id), each stream sorted by
/// (timestamp, location).
pub fn group_by_subject(events: Vec<EventRecord>) -> BTreeMap<String, Vec<EventRecord>> {
    let mut map: BTreeMap<String, Vec<EventRecord>> = BTreeMap::new();
    for e in events {
        map.entry(e.subject_id.clone()).or_default().push(e);
    }
    for stream in map.values_mut() {
        stream.sort_by(|a, b| (a.timestamp, &a.location).cmp(&(b.timestamp, &b.location)));
    }
    map
}

/// Drops every event whose predecessor at the same location (kept or not)
/// fired at most `window` seconds earlier. The first event always survives.
pub fn dedupe(events: &[EventRecord], window: i64) -> Result<Vec<EventRecord>> {
    if events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::invalid("events must be sorted by timestamp before dedupe"));
    }
    let mut last_seen: BTreeMap<&str, i64> = BTreeMap::new();
    let mut out = Vec::with_capacity(events.len());
    for e in events {
        let keep = match last_seen.get(e.location.as_str()) {
            Some(&prev) => e.timestamp - prev > window,
            None => true,
        };
        last_seen.insert(e.location.as_str(), e.timestamp);
        if keep {
            out.push(e.clone());
        }
    }
    Ok(out)
}

fn check_histogram(h: &[f64]) -> Result<()> {
    crate::error::check_dim("hourly histogram", HOURS, h.len())?;
    if let Some(v) = h.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::invalid(format!("histogram bin {v} is negative or NaN")));
    }
    Ok(())
}

/// 1-Wasserstein distance between two 24-bin hourly histograms, in hours:
/// `Σ_h |CDF_a(h) - CDF_b(h)|` over unit-mass histograms.
pub fn ws_distance(a: &[f64], b: &[f64]) -> Result<f64> {
    ws_distance_with(a, b, WsMode::Normalized)
}

pub fn ws_distance_with(a: &[f64], b: &[f64], mode: WsMode) -> Result<f64> {
    check_histogram(a)?;
    check_histogram(b)?;
    let prepare = |h: &[f64]| -> Vec<f64> {
        match mode {
            WsMode::RawCounts => h.to_vec(),
            WsMode::Normalized => {
                let mass: f64 = h.iter().sum();
                if mass > 0.0 {
                    h.iter().map(|v| v / mass).collect()
                } else {
                    vec![1.0 / HOURS as f64; HOURS]
                }
            }
        }
    };
    let (pa, pb) = (prepare(a), prepare(b));
    let (mut ca, mut cb, mut total) = (0.0, 0.0, 0.0);
    for h in 0..HOURS {
        ca += pa[h];
        cb += pb[h];
        total += (ca - cb).abs();
    }
    Ok(total)
}

/// Dwell time at `location` within one day: every firing there contributes the
/// gap to the next firing anywhere, capped at `max_dwell` and at the end of the
/// day. `day_events` holds one day's events sorted by time; `day_end` is the
/// timestamp of the following midnight.
pub fn duration_at_location(day_events: &[EventRecord], location: &str, day_end: i64, max_dwell: i64) -> f64 {
    let mut total = 0i64;
    for (k, e) in day_events.iter().enumerate() {
        if e.location != location {
            continue;
        }
        let next = day_events.get(k + 1).map_or(day_end, |n| n.timestamp.min(day_end));
        total += (next - e.timestamp).clamp(0, max_dwell);
    }
    total as f64
}

fn local_day(ts: i64, tz_offset: i64) -> i64 {
    (ts + tz_offset).div_euclid(SECONDS_PER_DAY)
}

fn local_hour(ts: i64, tz_offset: i64) -> usize {
    ((ts + tz_offset).rem_euclid(SECONDS_PER_DAY) / 3600) as usize
}

/// Aggregates a sorted, deduplicated event stream into a [`FeatureMatrix`].
pub fn extract_features(subject_id: &str, events: &[EventRecord], config: &IngestConfig) -> Result<FeatureMatrix> {
    if events.windows(2).any(|w| w[1].timestamp < w[0].timestamp) {
        return Err(Error::invalid("events must be sorted by timestamp"));
    }
    let locations: Vec<String> = if config.locations.is_empty() {
        events
            .iter()
            .map(|e| e.location.clone())
            .collect::<BTreeSet<_>>()
            .into_iter()
            .collect()
    } else {
        let mut l = config.locations.clone();
        l.sort();
        l.dedup();
        l
    };
    let origin_day = match (config.origin, events.first()) {
        (Some(o), _) => local_day(o, config.tz_offset),
        (None, Some(e)) => local_day(e.timestamp, config.tz_offset),
        (None, None) => 0,
    };
    let n_days = match (config.n_days, events.last()) {
        (Some(t), _) => t,
        (None, Some(e)) => (local_day(e.timestamp, config.tz_offset) - origin_day + 1).max(0) as usize,
        (None, None) => 0,
    };

    let n_loc = locations.len();
    let kinds = FeatureKind::ALL.len();
    let mut values = Array2::zeros((n_days, n_loc * kinds));
    let mut hist = vec![vec![[0.0f64; HOURS]; n_loc]; n_days];
    let mut per_day: Vec<Vec<EventRecord>> = vec![Vec::new(); n_days];

    for e in events {
        let day = local_day(e.timestamp, config.tz_offset) - origin_day;
        if day < 0 || day as usize >= n_days {
            return Err(Error::invalid(format!(
                "event at {} lies outside days [0, {n_days})",
                e.timestamp
            )));
        }
        let day = day as usize;
        let l = locations
            .binary_search(&e.location)
            .map_err(|_| Error::invalid(format!("undeclared location `{}`", e.location)))?;
        let hour = local_hour(e.timestamp, config.tz_offset);
        hist[day][l][hour] += 1.0;
        per_day[day].push(e.clone());
    }

    let col = |l: usize, kind: FeatureKind| l * kinds + kind as usize;
    for day in 0..n_days {
        let day_end = (origin_day + day as i64 + 1) * SECONDS_PER_DAY - config.tz_offset;
        for (l, loc) in locations.iter().enumerate() {
            let h = &hist[day][l];
            values[[day, col(l, FeatureKind::TotalCount)]] = h.iter().sum();
            values[[day, col(l, FeatureKind::EarlyAmCount)]] = h[0..6].iter().sum();
            values[[day, col(l, FeatureKind::LatePmCount)]] = h[18..24].iter().sum();
            values[[day, col(l, FeatureKind::Duration)]] =
                duration_at_location(&per_day[day], loc, day_end, config.max_dwell);
            values[[day, col(l, FeatureKind::WsDrift)]] = if day == 0 {
                0.0
            } else {
                ws_distance_with(h, &hist[day - 1][l], config.ws_mode)?
            };
        }
    }

    let feature_names = locations
        .iter()
        .flat_map(|loc| FeatureKind::ALL.iter().map(move |&k| feature_name(loc, k)))
        .collect();
    Ok(FeatureMatrix {
        subject_id: subject_id.to_string(),
        feature_names,
        values,
    })
}

/// Sort, dedupe and extract for one subject's raw stream.
pub fn subject_features(
    subject_id: &str,
    mut events: Vec<EventRecord>,
    config: &IngestConfig,
) -> Result<FeatureMatrix> {
    events.sort_by(|a, b| (a.timestamp, &a.location).cmp(&(b.timestamp, &b.location)));
    let deduped = dedupe(&events, config.dedup_window)?;
    extract_features(subject_id, &deduped, config)
}

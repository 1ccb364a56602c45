//! Seeded synthetic cohorts of household motion-sensor events.
//!
//! All generator parameters here are invented for testing; they do not model
//! any real dataset. Each location fires according to a 24-bin hour-of-day
//! profile scaled by a subject-specific rate, a weekly modulation and
//! day-level log-normal noise. During an anomalous episode the profile is
//! reshaped by per-period multipliers (early AM, daytime, late PM), which
//! mimics nocturnal wandering and erratic evening bathroom use.

use std::collections::BTreeMap;
use std::path::Path;

use rand::Rng;
use rand_distr::{Distribution, Normal, Poisson};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::ingest::{EventRecord, SECONDS_PER_DAY};
use crate::nn::seed_stream;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocationProfile {
    pub name: String,
    /// Mean firings per day before modulation.
    pub base_rate: f64,
    /// Relative hour-of-day intensity (normalized when used).
    pub hourly: [f64; 24],
}

/// Rate multipliers applied to one location during episodes.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnomalyEffect {
    pub location: String,
    /// Hours 0-5.
    pub early_am: f64,
    /// Hours 6-17.
    pub daytime: f64,
    /// Hours 18-23.
    pub late_pm: f64,
}

impl AnomalyEffect {
    pub fn factor(&self, hour: usize) -> f64 {
        match hour {
            0..=5 => self.early_am,
            6..=17 => self.daytime,
            _ => self.late_pm,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CohortSpec {
    pub n_subjects: usize,
    pub n_days: usize,
    pub locations: Vec<LocationProfile>,
    pub episodes_per_subject: usize,
    pub episode_length_days: usize,
    pub anomaly_multipliers: Vec<AnomalyEffect>,
    pub seed: u64,
    /// Epoch seconds of day 0 (UTC midnight).
    pub start_epoch: i64,
    /// Log-normal sigma of the per-subject, per-location rate factor.
    pub subject_variation: f64,
    /// Relative amplitude of the weekly sinusoid.
    pub weekly_amplitude: f64,
    /// Log-normal sigma of day-level rate noise.
    pub daily_noise: f64,
    /// No episode starts before this day.
    pub warmup_days: usize,
    /// Minimum number of quiet days between consecutive episodes.
    pub min_episode_gap: usize,
}

fn profile(name: &str, base_rate: f64, hourly: [f64; 24]) -> LocationProfile {
    LocationProfile {
        name: name.to_string(),
        base_rate,
        hourly,
    }
}

/// Built-in hourly shape for a location name; unknown names get a flat daytime shape.
pub fn default_hourly(name: &str) -> [f64; 24] {
    #[rustfmt::skip]
    let shape = match name {
        "bathroom" => [
            0.6, 0.5, 0.5, 0.5, 0.6, 0.8, 3.0, 5.0, 5.0, 3.0, 2.0, 2.0,
            2.0, 2.0, 2.0, 2.0, 2.0, 2.0, 2.5, 2.5, 3.0, 4.0, 4.0, 1.5,
        ],
        "bedroom" => [
            0.3, 0.2, 0.2, 0.2, 0.3, 0.5, 4.0, 5.0, 3.0, 1.0, 0.5, 0.5,
            0.5, 1.0, 1.0, 0.5, 0.5, 0.5, 0.5, 1.0, 2.0, 4.0, 5.0, 2.0,
        ],
        "kitchen" => [
            0.01, 0.01, 0.01, 0.01, 0.01, 0.02, 1.0, 5.0, 6.0, 3.0, 2.0, 3.0,
            5.0, 4.0, 2.0, 2.0, 3.0, 5.0, 6.0, 4.0, 2.0, 1.0, 0.5, 0.05,
        ],
        "lounge" => [
            0.01, 0.01, 0.01, 0.01, 0.01, 0.02, 0.5, 1.0, 2.0, 4.0, 5.0, 5.0,
            3.0, 4.0, 5.0, 5.0, 5.0, 4.0, 4.0, 6.0, 6.0, 5.0, 3.0, 0.5,
        ],
        _ => [
            0.0, 0.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0,
            1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 1.0, 0.0, 0.0,
        ],
    };
    shape
}

impl Default for CohortSpec {
    fn default() -> Self {
        let locations = vec![
            profile("bathroom", 20.0, default_hourly("bathroom")),
            profile("bedroom", 20.0, default_hourly("bedroom")),
            profile("kitchen", 40.0, default_hourly("kitchen")),
            profile("lounge", 40.0, default_hourly("lounge")),
        ];
        let effect = |location: &str, early_am, daytime, late_pm| AnomalyEffect {
            location: location.to_string(),
            early_am,
            daytime,
            late_pm,
        };
        Self {
            n_subjects: 10,
            n_days: 365,
            locations,
            episodes_per_subject: 5,
            episode_length_days: 5,
            anomaly_multipliers: vec![
                effect("bathroom", 3.0, 1.0, 3.0),
                effect("bedroom", 3.0, 1.0, 1.0),
                effect("kitchen", 40.0, 0.8, 1.5),
                effect("lounge", 40.0, 0.8, 1.5),
            ],
            seed: 42,
            start_epoch: 1_577_836_800,
            subject_variation: 0.2,
            weekly_amplitude: 0.1,
            daily_noise: 0.1,
            warmup_days: 30,
            min_episode_gap: 20,
        }
    }
}

/// Ground-truth episodes of one subject; labels mark episode start days.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub subject_id: String,
    pub labels: Vec<usize>,
    /// `(start_day, length)` of every episode.
    pub episodes: Vec<(usize, usize)>,
}

impl GroundTruth {
    pub fn in_episode(&self, day: usize) -> bool {
        self.episodes.iter().any(|&(s, l)| (s..s + l).contains(&day))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Cohort {
    pub events: Vec<EventRecord>,
    pub truth: Vec<GroundTruth>,
}

impl CohortSpec {
    pub fn validate(&self) -> Result<()> {
        let field = |name: &str, msg: &str| Err(Error::config(name, msg));
        if self.n_subjects == 0 {
            return field("n_subjects", "must be >= 1");
        }
        if self.n_days < 60 {
            return field("n_days", "must be >= 60");
        }
        if self.locations.is_empty() {
            return field("locations", "at least one location required");
        }
        for loc in &self.locations {
            if !(loc.base_rate >= 0.0) || !loc.base_rate.is_finite() {
                return field(
                    &format!("base_rate.{}", loc.name),
                    "must be a finite non-negative number",
                );
            }
            if loc.hourly.iter().any(|w| !(*w >= 0.0)) || loc.hourly.iter().sum::<f64>() <= 0.0 {
                return field(
                    &format!("hourly.{}", loc.name),
                    "weights must be non-negative with positive sum",
                );
            }
        }
        for eff in &self.anomaly_multipliers {
            if !self.locations.iter().any(|l| l.name == eff.location) {
                return field(&format!("multiplier.{}", eff.location), "unknown location");
            }
            if [eff.early_am, eff.daytime, eff.late_pm].iter().any(|m| !(*m >= 0.0)) {
                return field(&format!("multiplier.{}", eff.location), "must be non-negative");
            }
        }
        if self.episodes_per_subject > 0 {
            if self.episode_length_days == 0 {
                return field("episode_length_days", "must be >= 1");
            }
            let needed =
                self.warmup_days + self.episodes_per_subject * (self.episode_length_days + self.min_episode_gap);
            if needed > self.n_days {
                return field(
                    "episodes_per_subject",
                    &format!(
                        "{} episodes do not fit in {} days",
                        self.episodes_per_subject, self.n_days
                    ),
                );
            }
        }
        for (name, v) in [
            ("subject_variation", self.subject_variation),
            ("weekly_amplitude", self.weekly_amplitude),
            ("daily_noise", self.daily_noise),
        ] {
            if !(v >= 0.0) || !v.is_finite() {
                return field(name, "must be a finite non-negative number");
            }
        }
        if self.weekly_amplitude >= 1.0 {
            return field("weekly_amplitude", "must be < 1");
        }
        Ok(())
    }

    pub fn subject_id(&self, index: usize) -> String {
        let width = self.n_subjects.to_string().len().max(2);
        format!("S{:0width$}", index + 1)
    }

    /// Parses a `key=value` spec; unspecified keys keep their defaults.
    ///
    /// Keys: `n_subjects`, `n_days`, `locations` (comma list), `episodes_per_subject`,
    /// `episode_length_days`, `seed`, `start_epoch`, `subject_variation`,
    /// `weekly_amplitude`, `daily_noise`, `warmup_days`, `min_episode_gap`,
    /// `base_rate.<location>`, `multiplier.<location>.<early_am|daytime|late_pm>`.
    pub fn parse(text: &str) -> Result<Self> {
        let pairs = crate::config::parse_key_values(text)?;
        let mut spec = CohortSpec::default();
        let mut rates: BTreeMap<String, f64> = BTreeMap::new();
        let mut multipliers: Vec<(String, String, f64)> = Vec::new();
        for (key, value) in &pairs {
            let num = |v: &str| crate::config::parse_num::<f64>(key, v);
            let int = |v: &str| crate::config::parse_num::<usize>(key, v);
            match key.as_str() {
                "n_subjects" => spec.n_subjects = int(value)?,
                "n_days" => spec.n_days = int(value)?,
                "episodes_per_subject" => spec.episodes_per_subject = int(value)?,
                "episode_length_days" => spec.episode_length_days = int(value)?,
                "seed" => spec.seed = crate::config::parse_num::<u64>(key, value)?,
                "start_epoch" => spec.start_epoch = crate::config::parse_num::<i64>(key, value)?,
                "subject_variation" => spec.subject_variation = num(value)?,
                "weekly_amplitude" => spec.weekly_amplitude = num(value)?,
                "daily_noise" => spec.daily_noise = num(value)?,
                "warmup_days" => spec.warmup_days = int(value)?,
                "min_episode_gap" => spec.min_episode_gap = int(value)?,
                "locations" => {
                    let names: Vec<String> = value
                        .split(',')
                        .map(|s| s.trim().to_string())
                        .filter(|s| !s.is_empty())
                        .collect();
                    let defaults = CohortSpec::default();
                    spec.locations = names
                        .iter()
                        .map(|n| {
                            defaults
                                .locations
                                .iter()
                                .find(|l| &l.name == n)
                                .cloned()
                                .unwrap_or_else(|| profile(n, 20.0, default_hourly(n)))
                        })
                        .collect();
                    spec.anomaly_multipliers.retain(|e| names.contains(&e.location));
                }
                k if k.starts_with("base_rate.") => {
                    rates.insert(k["base_rate.".len()..].to_string(), num(value)?);
                }
                k if k.starts_with("multiplier.") => {
                    let rest = &k["multiplier.".len()..];
                    let (loc, period) = rest
                        .rsplit_once('.')
                        .ok_or_else(|| Error::config(k, "expected multiplier.<location>.<period>"))?;
                    if !["early_am", "daytime", "late_pm"].contains(&period) {
                        return Err(Error::config(k, "period must be early_am, daytime or late_pm"));
                    }
                    multipliers.push((loc.to_string(), period.to_string(), num(value)?));
                }
                other => return Err(Error::config(other, "unknown cohort spec key")),
            }
        }
        for (loc, rate) in rates {
            let p = spec
                .locations
                .iter_mut()
                .find(|l| l.name == loc)
                .ok_or_else(|| Error::config(format!("base_rate.{loc}"), "unknown location"))?;
            p.base_rate = rate;
        }
        for (loc, period, value) in multipliers {
            if !spec.locations.iter().any(|l| l.name == loc) {
                return Err(Error::config(format!("multiplier.{loc}.{period}"), "unknown location"));
            }
            let idx = match spec.anomaly_multipliers.iter().position(|e| e.location == loc) {
                Some(i) => i,
                None => {
                    spec.anomaly_multipliers.push(AnomalyEffect {
                        location: loc.clone(),
                        early_am: 1.0,
                        daytime: 1.0,
                        late_pm: 1.0,
                    });
                    spec.anomaly_multipliers.len() - 1
                }
            };
            let eff = &mut spec.anomaly_multipliers[idx];
            match period.as_str() {
                "early_am" => eff.early_am = value,
                "daytime" => eff.daytime = value,
                _ => eff.late_pm = value,
            }
        }
        spec.validate()?;
        Ok(spec)
    }
}

fn place_episodes(spec: &CohortSpec, rng: &mut crate::nn::SeedStream) -> Result<Vec<usize>> {
    let n = spec.episodes_per_subject;
    if n == 0 {
        return Ok(Vec::new());
    }
    let len = spec.episode_length_days;
    let gap = spec.min_episode_gap;
    // Sample the slack distribution: free days are split into n+1 chunks by
    // sorted uniform cut points, which keeps every placement valid.
    let fixed = spec.warmup_days + n * (len + gap);
    let slack = spec.n_days - fixed;
    let mut cuts: Vec<usize> = (0..n).map(|_| rng.random_range(0..=slack)).collect();
    cuts.sort_unstable();
    let mut starts = Vec::with_capacity(n);
    let mut prev_cut = 0;
    let mut cursor = spec.warmup_days;
    for cut in cuts {
        cursor += cut - prev_cut;
        prev_cut = cut;
        starts.push(cursor);
        cursor += len + gap;
    }
    debug_assert!(starts.last().is_none_or(|&s| s + len <= spec.n_days));
    Ok(starts)
}

/// Generates one subject's events and ground truth.
pub fn generate_subject(spec: &CohortSpec, index: usize) -> Result<(Vec<EventRecord>, GroundTruth)> {
    spec.validate()?;
    let subject_id = spec.subject_id(index);
    let mut rng = seed_stream(spec.seed ^ index as u64);

    let subject_factor = Normal::new(0.0, spec.subject_variation.max(1e-300)).expect("valid sigma");
    let day_noise = Normal::new(0.0, spec.daily_noise.max(1e-300)).expect("valid sigma");
    let factors: Vec<f64> = spec
        .locations
        .iter()
        .map(|_| subject_factor.sample(&mut rng).exp())
        .collect();
    let weekly_phase = rng.random_range(0.0..std::f64::consts::TAU);
    let starts = place_episodes(spec, &mut rng)?;
    let episodes: Vec<(usize, usize)> = starts.iter().map(|&s| (s, spec.episode_length_days)).collect();
    let truth = GroundTruth {
        subject_id: subject_id.clone(),
        labels: starts.clone(),
        episodes,
    };

    let shapes: Vec<[f64; 24]> = spec
        .locations
        .iter()
        .map(|l| {
            let total: f64 = l.hourly.iter().sum();
            let mut s = l.hourly;
            s.iter_mut().for_each(|w| *w /= total);
            s
        })
        .collect();
    let effects: Vec<Option<&AnomalyEffect>> = spec
        .locations
        .iter()
        .map(|l| spec.anomaly_multipliers.iter().find(|e| e.location == l.name))
        .collect();

    let mut events = Vec::new();
    for day in 0..spec.n_days {
        let weekly = 1.0 + spec.weekly_amplitude * (std::f64::consts::TAU * day as f64 / 7.0 + weekly_phase).sin();
        let anomalous = truth.in_episode(day);
        let day_start = spec.start_epoch + day as i64 * SECONDS_PER_DAY;
        for (l, loc) in spec.locations.iter().enumerate() {
            let noise = day_noise.sample(&mut rng).exp();
            let rate = loc.base_rate * factors[l] * weekly * noise;
            for (hour, &shape) in shapes[l].iter().enumerate() {
                let mut lambda = rate * shape;
                if anomalous {
                    if let Some(eff) = effects[l] {
                        lambda *= eff.factor(hour);
                    }
                }
                let count = if lambda > 0.0 {
                    Poisson::new(lambda).expect("positive rate").sample(&mut rng) as u64
                } else {
                    0
                };
                for _ in 0..count {
                    let t = day_start + hour as i64 * 3600 + rng.random_range(0..3600);
                    events.push(EventRecord::new(subject_id.clone(), t, loc.name.clone()));
                }
            }
        }
    }
    events.sort_by(|a, b| (a.timestamp, &a.location).cmp(&(b.timestamp, &b.location)));
    Ok((events, truth))
}

/// Generates every subject. Output is ordered by subject id.
pub fn generate_cohort(spec: &CohortSpec) -> Result<Cohort> {
    use rayon::prelude::*;
    spec.validate()?;
    let parts = (0..spec.n_subjects)
        .into_par_iter()
        .map(|s| generate_subject(spec, s))
        .collect::<Result<Vec<_>>>()?;
    let mut events = Vec::new();
    let mut truth = Vec::new();
    for (e, t) in parts {
        events.extend(e);
        truth.push(t);
    }
    Ok(Cohort { events, truth })
}

pub fn write_labels_csv(path: &Path, truth: &[GroundTruth]) -> Result<()> {
    let mut w = csv::Writer::from_path(path)?;
    w.write_record(["subject_id", "day_index"])?;
    for t in truth {
        for d in &t.labels {
            w.write_record([t.subject_id.as_str(), &d.to_string()])?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

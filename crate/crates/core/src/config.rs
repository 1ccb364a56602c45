//! Flat `key=value` configuration.

use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::alerts::ThresholdConfig;
use crate::cmp::{CmpConfig, Exclusion};
use crate::detectors::{AutoencoderConfig, CmpBaselineConfig, MlpaeConfig, NetConfig, OcgnnConfig};
use crate::error::{Error, Result};
use crate::eval::{EvalConfig, Margins};
use crate::gnn::TrainConfig;
use crate::ingest::{IngestConfig, WsMode};

/// Parses `key=value` lines. Blank lines and `#` comments are skipped; a later
/// duplicate key wins.
pub fn parse_key_values(text: &str) -> Result<Vec<(String, String)>> {
    let mut out: Vec<(String, String)> = Vec::new();
    for (n, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| Error::config(format!("line {}", n + 1), format!("expected key=value, got `{line}`")))?;
        let (k, v) = (k.trim().to_string(), v.trim().to_string());
        if k.is_empty() {
            return Err(Error::config(format!("line {}", n + 1), "empty key"));
        }
        out.retain(|(existing, _)| existing != &k);
        out.push((k, v));
    }
    Ok(out)
}

pub fn parse_num<T: FromStr>(key: &str, value: &str) -> Result<T> {
    value
        .trim()
        .parse::<T>()
        .map_err(|_| Error::config(key, format!("cannot parse `{value}`")))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Detector {
    Gnn,
    Dominant,
    Mlpae,
    Ocgnn,
    Gcnae,
    CmpBaseline,
}

impl Detector {
    pub const ALL: [Detector; 6] = [
        Detector::Gnn,
        Detector::Dominant,
        Detector::Mlpae,
        Detector::Ocgnn,
        Detector::Gcnae,
        Detector::CmpBaseline,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Detector::Gnn => "gnn",
            Detector::Dominant => "dominant",
            Detector::Mlpae => "mlpae",
            Detector::Ocgnn => "ocgnn",
            Detector::Gcnae => "gcnae",
            Detector::CmpBaseline => "cmp_baseline",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        Self::ALL.into_iter().find(|d| d.name() == s.trim()).ok_or_else(|| {
            Error::config(
                "detector",
                format!("unknown detector `{s}` (gnn, dominant, mlpae, ocgnn, gcnae, cmp_baseline, all)"),
            )
        })
    }
}

/// Every knob of a detection run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    /// Detectors run in order; more than one means a multi-run.
    pub detectors: Vec<Detector>,
    pub seed: Option<u64>,
    pub ingest: IngestConfig,
    pub cmp: CmpConfig,
    pub i_min: usize,
    pub max_history: Option<usize>,
    pub gnn: TrainConfig,
    pub dominant: AutoencoderConfig,
    pub gcnae: AutoencoderConfig,
    pub mlpae: MlpaeConfig,
    pub ocgnn: OcgnnConfig,
    pub cmp_baseline: CmpBaselineConfig,
    pub threshold: ThresholdConfig,
    pub eval: EvalConfig,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            detectors: vec![Detector::Gnn],
            seed: None,
            ingest: IngestConfig::default(),
            cmp: CmpConfig::default(),
            i_min: 2,
            max_history: None,
            gnn: TrainConfig::default(),
            dominant: AutoencoderConfig::dominant(),
            gcnae: AutoencoderConfig::gcnae(),
            mlpae: MlpaeConfig::default(),
            ocgnn: OcgnnConfig::default(),
            cmp_baseline: CmpBaselineConfig::default(),
            threshold: ThresholdConfig::default(),
            eval: EvalConfig::default(),
        }
    }
}

fn parse_bool(key: &str, v: &str) -> Result<bool> {
    match v.trim() {
        "true" | "yes" | "on" | "1" => Ok(true),
        "false" | "no" | "off" | "0" => Ok(false),
        _ => Err(Error::config(key, format!("expected true/false, got `{v}`"))),
    }
}

fn parse_dims(key: &str, v: &str) -> Result<Vec<usize>> {
    v.split(',').map(|d| parse_num::<usize>(key, d)).collect()
}

fn parse_enum<T: FromStr<Err = String>>(key: &str, v: &str) -> Result<T> {
    v.trim().parse::<T>().map_err(|e| Error::config(key, e))
}

fn optional_usize(key: &str, v: &str) -> Result<Option<usize>> {
    match v.trim() {
        "" | "none" | "off" | "0" => Ok(None),
        other => parse_num(key, other).map(Some),
    }
}

fn dims_text(d: &[usize]) -> String {
    d.iter().map(usize::to_string).collect::<Vec<_>>().join(",")
}

fn net_keys(prefix: &str, net: &NetConfig, out: &mut Vec<(String, String)>) {
    out.push((format!("{prefix}.hidden"), dims_text(&net.hidden)));
    out.push((format!("{prefix}.dropout"), net.dropout.to_string()));
    out.push((format!("{prefix}.epochs"), net.epochs.to_string()));
    out.push((format!("{prefix}.patience"), net.patience.to_string()));
    out.push((format!("{prefix}.learning_rate"), net.learning_rate.to_string()));
}

fn set_net(net: &mut NetConfig, field: &str, key: &str, v: &str) -> Result<bool> {
    match field {
        "hidden" => net.hidden = parse_dims(key, v)?,
        "dropout" => net.dropout = parse_num(key, v)?,
        "epochs" => net.epochs = parse_num(key, v)?,
        "patience" => net.patience = parse_num(key, v)?,
        "learning_rate" => net.learning_rate = parse_num(key, v)?,
        _ => return Ok(false),
    }
    Ok(true)
}

impl PipelineConfig {
    /// Applies one `key=value` setting. Unknown keys are errors.
    pub fn set(&mut self, key: &str, value: &str) -> Result<()> {
        let v = value.trim();
        let unknown = || Error::config(key, "unknown config key");
        match key {
            "detector" => {
                self.detectors = if v == "all" {
                    Detector::ALL.to_vec()
                } else {
                    v.split(',').map(Detector::parse).collect::<Result<_>>()?
                }
            }
            "seed" => self.seed = Some(parse_num(key, v)?),
            "dedup_window" => self.ingest.dedup_window = parse_num(key, v)?,
            "max_dwell" => self.ingest.max_dwell = parse_num(key, v)?,
            "tz_offset" => self.ingest.tz_offset = parse_num(key, v)?,
            "ws_mode" => {
                self.ingest.ws_mode = match v {
                    "normalized" => WsMode::Normalized,
                    "raw_counts" => WsMode::RawCounts,
                    _ => return Err(Error::config(key, "expected normalized or raw_counts")),
                }
            }
            "locations" => {
                self.ingest.locations = v
                    .split(',')
                    .map(|s| s.trim().to_string())
                    .filter(|s| !s.is_empty())
                    .collect()
            }
            "subsequence_length" => self.cmp.subsequence_length = parse_num(key, v)?,
            "context_length" => self.cmp.context_length = parse_num(key, v)?,
            "exclusion" => {
                self.cmp.exclusion = match v {
                    "trivial_match" => Exclusion::TrivialMatch,
                    "none" => Exclusion::None,
                    _ => return Err(Error::config(key, "expected trivial_match or none")),
                }
            }
            "bin_count" => self.cmp.bin_count = optional_usize(key, v)?,
            "i_min" => self.i_min = parse_num(key, v)?,
            "max_history" => self.max_history = optional_usize(key, v)?,
            "gnn.n_pairs" => self.gnn.n_pairs = parse_num(key, v)?,
            "gnn.epochs" => self.gnn.epochs = parse_num(key, v)?,
            "gnn.patience" => self.gnn.patience = parse_num(key, v)?,
            "gnn.learning_rate" => self.gnn.learning_rate = parse_num(key, v)?,
            "gnn.graph_distance" => self.gnn.graph_distance = parse_enum(key, v)?,
            "gnn.embedding_metric" => self.gnn.embedding_metric = parse_enum(key, v)?,
            "gnn.dim" => self.gnn.embedding_dim = parse_num(key, v)?,
            "gnn.dropout" => self.gnn.dropout = parse_num(key, v)?,
            "gnn.aggregation" => self.gnn.aggregation = parse_enum(key, v)?,
            "dominant.alpha" => self.dominant.alpha = parse_num(key, v)?,
            "gcnae.alpha" => self.gcnae.alpha = parse_num(key, v)?,
            "ocgnn.beta" => self.ocgnn.beta = parse_num(key, v)?,
            "ocgnn.weight_decay" => self.ocgnn.weight_decay = parse_num(key, v)?,
            "cmp_baseline.k" => self.cmp_baseline.k = parse_num(key, v)?,
            "window" => self.threshold.window = parse_num(key, v)?,
            "n_std" => self.threshold.n_std = parse_num(key, v)?,
            "min_fill" => self.threshold.min_fill = parse_num(key, v)?,
            "mask_alerts" => self.threshold.mask_alerts = parse_bool(key, v)?,
            "margin_before" => self.eval.margins.before = parse_num(key, v)?,
            "margin_after" => self.eval.margins.after = parse_num(key, v)?,
            "x_percent" => self.eval.x_percent = parse_num(key, v)?,
            "pooled_alert_rate" => self.eval.pooled_alert_rate = parse_bool(key, v)?,
            _ => {
                let (prefix, field) = key.split_once('.').ok_or_else(unknown)?;
                let net = match prefix {
                    "dominant" => &mut self.dominant.net,
                    "gcnae" => &mut self.gcnae.net,
                    "mlpae" => &mut self.mlpae.net,
                    "ocgnn" => &mut self.ocgnn.net,
                    _ => return Err(unknown()),
                };
                if !set_net(net, field, key, v)? {
                    return Err(unknown());
                }
            }
        }
        Ok(())
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut cfg = Self::default();
        for (k, v) in parse_key_values(text)? {
            cfg.set(&k, &v)?;
        }
        Ok(cfg)
    }

    /// Effective settings as `key=value` pairs; parsing them back gives an equal config.
    pub fn to_key_values(&self) -> Vec<(String, String)> {
        let mut out: Vec<(String, String)> = Vec::new();
        let mut push = |k: &str, v: String| out.push((k.to_string(), v));
        push(
            "detector",
            self.detectors.iter().map(|d| d.name()).collect::<Vec<_>>().join(","),
        );
        if let Some(seed) = self.seed {
            push("seed", seed.to_string());
        }
        push("dedup_window", self.ingest.dedup_window.to_string());
        push("max_dwell", self.ingest.max_dwell.to_string());
        push("tz_offset", self.ingest.tz_offset.to_string());
        push(
            "ws_mode",
            match self.ingest.ws_mode {
                WsMode::Normalized => "normalized",
                WsMode::RawCounts => "raw_counts",
            }
            .into(),
        );
        push("locations", self.ingest.locations.join(","));
        push("subsequence_length", self.cmp.subsequence_length.to_string());
        push("context_length", self.cmp.context_length.to_string());
        push(
            "exclusion",
            match self.cmp.exclusion {
                Exclusion::TrivialMatch => "trivial_match",
                Exclusion::None => "none",
            }
            .into(),
        );
        push("bin_count", self.cmp.bin_count.map_or("none".into(), |b| b.to_string()));
        push("i_min", self.i_min.to_string());
        push("max_history", self.max_history.map_or("none".into(), |h| h.to_string()));
        push("gnn.n_pairs", self.gnn.n_pairs.to_string());
        push("gnn.epochs", self.gnn.epochs.to_string());
        push("gnn.patience", self.gnn.patience.to_string());
        push("gnn.learning_rate", self.gnn.learning_rate.to_string());
        push("gnn.graph_distance", enum_text(&self.gnn.graph_distance));
        push("gnn.embedding_metric", enum_text(&self.gnn.embedding_metric));
        push("gnn.dim", self.gnn.embedding_dim.to_string());
        push("gnn.dropout", self.gnn.dropout.to_string());
        push("gnn.aggregation", enum_text(&self.gnn.aggregation));
        push("dominant.alpha", self.dominant.alpha.to_string());
        push("gcnae.alpha", self.gcnae.alpha.to_string());
        push("ocgnn.beta", self.ocgnn.beta.to_string());
        push("ocgnn.weight_decay", self.ocgnn.weight_decay.to_string());
        push("cmp_baseline.k", self.cmp_baseline.k.to_string());
        push("window", self.threshold.window.to_string());
        push("n_std", self.threshold.n_std.to_string());
        push("min_fill", self.threshold.min_fill.to_string());
        push("mask_alerts", self.threshold.mask_alerts.to_string());
        push("margin_before", self.eval.margins.before.to_string());
        push("margin_after", self.eval.margins.after.to_string());
        push("x_percent", self.eval.x_percent.to_string());
        push("pooled_alert_rate", self.eval.pooled_alert_rate.to_string());
        for (prefix, net) in [
            ("dominant", &self.dominant.net),
            ("gcnae", &self.gcnae.net),
            ("mlpae", &self.mlpae.net),
            ("ocgnn", &self.ocgnn.net),
        ] {
            net_keys(prefix, net, &mut out);
        }
        out
    }

    pub fn to_text(&self) -> String {
        self.to_key_values()
            .into_iter()
            .map(|(k, v)| format!("{k}={v}\n"))
            .collect()
    }

    pub fn validate(&self) -> Result<()> {
        if self.detectors.is_empty() {
            return Err(Error::config("detector", "no detector selected"));
        }
        self.cmp.validate()?;
        if self.i_min == 0 {
            return Err(Error::config("i_min", "must be >= 1"));
        }
        if self.max_history == Some(0) {
            return Err(Error::config("max_history", "must be >= 1"));
        }
        self.gnn.validate()?;
        self.dominant.validate()?;
        self.gcnae.validate()?;
        self.mlpae.net.validate()?;
        self.ocgnn.validate()?;
        if self.cmp_baseline.k == 0 {
            return Err(Error::config("cmp_baseline.k", "must be >= 1"));
        }
        self.threshold.validate()?;
        if !(0.0..=100.0).contains(&self.eval.x_percent) {
            return Err(Error::config("x_percent", "must lie in [0, 100]"));
        }
        Ok(())
    }

    pub fn margins(&self) -> Margins {
        self.eval.margins
    }
}

fn enum_text<T: Serialize>(v: &T) -> String {
    serde_json::to_value(v)
        .ok()
        .and_then(|j| j.as_str().map(str::to_string))
        .unwrap_or_default()
}

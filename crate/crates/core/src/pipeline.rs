//! End-to-end stages: synth, detect, eval, render.
//!
//! Subjects run in a parallel map; every output is sorted by subject id, so a
//! run is fully determined by its inputs, config and seed.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use rayon::prelude::*;
use serde::Serialize;

use crate::alerts::{read_alerts_csv, threshold, write_alerts_csv, AlertSeries};
use crate::cmp::{max_distance, read_matrix_csv, write_matrix_csv, write_pgm, Cmp};
use crate::config::{Detector, PipelineConfig};
use crate::detectors::{autoencoder, mlpae, ocgnn, read_scores_csv, score_cmp_baseline, write_scores_csv, ScoreSeries};
use crate::error::{Error, Result};
use crate::eval::{assemble_outcomes, read_labels_csv, report, EvalReport};
use crate::gnn::{embedding_deltas, train_embedder, GcnCheckpoint, TrainConfig};
use crate::graphs::{build_stream, GraphStream};
use crate::ingest::{
    group_by_subject, read_events_csv, subject_features, write_events_csv, EventRecord, FeatureMatrix,
};
use crate::nn::derive_seed;
use crate::synth::{generate_cohort, write_labels_csv, Cohort, CohortSpec};

/// FNV-1a hash of a subject id, used to derive per-subject seeds.
fn fnv1a(s: &str) -> u64 {
    s.bytes().fold(0xcbf2_9ce4_8422_2325, |h, b| {
        (h ^ b as u64).wrapping_mul(0x0100_0000_01b3)
    })
}

pub fn subject_seed(seed: u64, subject_id: &str) -> u64 {
    derive_seed(seed, fnv1a(subject_id))
}

fn timed<T>(subject: &str, stage: &'static str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage))?;
    log::info!("{subject}: {stage} took {:.1} ms", start.elapsed().as_secs_f64() * 1e3);
    Ok(out)
}

/// Upstream artifacts of one subject.
#[derive(Debug, Clone)]
pub struct SubjectPrep {
    pub subject_id: String,
    /// Absent when the run started from saved CMPs.
    pub features: Option<FeatureMatrix>,
    pub cmp: Cmp,
    pub stream: GraphStream,
}

#[derive(Debug, Clone)]
pub struct DetectorRun {
    pub detector: Detector,
    pub scores: ScoreSeries,
    pub alerts: AlertSeries,
    pub checkpoint: serde_json::Value,
}

#[derive(Debug, Clone)]
pub struct SubjectResult {
    pub prep: SubjectPrep,
    pub runs: Vec<DetectorRun>,
}

pub fn prepare_subject(subject_id: &str, events: Vec<EventRecord>, cfg: &PipelineConfig) -> Result<SubjectPrep> {
    let features = timed(subject_id, "ingest", || {
        subject_features(subject_id, events, &cfg.ingest)
    })?;
    let cmp = timed(subject_id, "cmp", || {
        Cmp::compute(features.feature_names.clone(), &features.columns(), cfg.cmp)
    })?;
    let mut prep = prepare_from_cmp(subject_id, cmp, cfg)?;
    prep.features = Some(features);
    Ok(prep)
}

pub fn prepare_from_cmp(subject_id: &str, cmp: Cmp, cfg: &PipelineConfig) -> Result<SubjectPrep> {
    let stream = timed(subject_id, "graphs", || build_stream(&cmp, cfg.i_min, cfg.max_history))?;
    Ok(SubjectPrep {
        subject_id: subject_id.to_string(),
        features: None,
        cmp,
        stream,
    })
}

fn wrap_checkpoint<T: Serialize, C: Serialize>(
    detector: Detector,
    config: &C,
    model: Option<&T>,
) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "format": format!("cmpgraph-{}/1", detector.name()),
        "config": serde_json::to_value(config)?,
        "model": serde_json::to_value(model)?,
    }))
}

pub fn run_detector(prep: &SubjectPrep, detector: Detector, cfg: &PipelineConfig, seed: u64) -> Result<DetectorRun> {
    let sid = prep.subject_id.as_str();
    let stream = &prep.stream;
    let (scores, checkpoint) = timed(sid, "detect", || match detector {
        Detector::Gnn => {
            let tc = TrainConfig {
                seed,
                ..cfg.gnn.clone()
            };
            let (model, rep) = train_embedder(stream, &prep.cmp, &tc)?;
            let scores = embedding_deltas(&model, stream, tc.embedding_metric, sid)?;
            let cp = serde_json::to_value(GcnCheckpoint::new(&model, &tc, Some(&rep)))?;
            Ok((scores, cp))
        }
        Detector::Dominant | Detector::Gcnae => {
            let mut ac = if detector == Detector::Dominant {
                cfg.dominant.clone()
            } else {
                cfg.gcnae.clone()
            };
            ac.net.seed = seed;
            let (model, _) = autoencoder::train_autoencoder(stream, &ac)?;
            let scores = autoencoder::score_with(&model, stream, detector.name(), sid)?;
            Ok((scores, wrap_checkpoint(detector, &ac, Some(&model))?))
        }
        Detector::Mlpae => {
            let mut mc = cfg.mlpae.clone();
            mc.net.seed = seed;
            let (scores, model) = mlpae::score_mlpae(stream, &mc, sid)?;
            Ok((scores, wrap_checkpoint(detector, &mc, Some(&model))?))
        }
        Detector::Ocgnn => {
            let mut oc = cfg.ocgnn.clone();
            oc.net.seed = seed;
            let (scores, model) = ocgnn::score_ocgnn(stream, &oc, sid)?;
            Ok((scores, wrap_checkpoint(detector, &oc, Some(&model))?))
        }
        Detector::CmpBaseline => {
            let scores = score_cmp_baseline(&prep.cmp, &cfg.cmp_baseline, cfg.i_min, sid)?;
            Ok((scores, wrap_checkpoint::<(), _>(detector, &cfg.cmp_baseline, None)?))
        }
    })?;
    let alerts = timed(sid, "alerts", || {
        threshold(&scores, &cfg.threshold, cfg.cmp.context_length)
    })?;
    Ok(DetectorRun {
        detector,
        scores,
        alerts,
        checkpoint,
    })
}

fn require_seed(cfg: &PipelineConfig) -> Result<u64> {
    cfg.seed
        .ok_or_else(|| Error::config("seed", "a seed is required for detection"))
}

fn run_all_detectors(prep: SubjectPrep, cfg: &PipelineConfig, seed: u64) -> Result<SubjectResult> {
    let s = subject_seed(seed, &prep.subject_id);
    let runs = cfg
        .detectors
        .iter()
        .map(|&d| run_detector(&prep, d, cfg, s))
        .collect::<Result<Vec<_>>>()?;
    Ok(SubjectResult { prep, runs })
}

/// ingest → cmp → graphs → detectors → alerts for every subject.
pub fn run_detect(events: Vec<EventRecord>, cfg: &PipelineConfig) -> Result<Vec<SubjectResult>> {
    cfg.validate()?;
    let seed = require_seed(cfg)?;
    let groups: Vec<(String, Vec<EventRecord>)> = group_by_subject(events).into_iter().collect();
    if groups.is_empty() {
        return Err(Error::invalid("no events to process"));
    }
    groups
        .into_par_iter()
        .map(|(sid, ev)| run_all_detectors(prepare_subject(&sid, ev, cfg)?, cfg, seed))
        .collect()
}

/// Detection starting from CMPs saved by an earlier run.
pub fn run_detect_from_cmps(cmps: Vec<(String, Cmp)>, cfg: &PipelineConfig) -> Result<Vec<SubjectResult>> {
    cfg.validate()?;
    let seed = require_seed(cfg)?;
    cmps.into_par_iter()
        .map(|(sid, cmp)| run_all_detectors(prepare_from_cmp(&sid, cmp, cfg)?, cfg, seed))
        .collect()
}

fn create_dir(path: &Path) -> Result<()> {
    fs::create_dir_all(path).map_err(|e| Error::io(path, e))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let text = serde_json::to_string_pretty(value)?;
    fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
}

/// Writes `scores.csv`, `alerts.csv`, `config.txt` and per-subject features,
/// CMPs, graph streams and model checkpoints under `out`.
pub fn write_detect_outputs(out: &Path, results: &[SubjectResult], cfg: &PipelineConfig) -> Result<()> {
    create_dir(out)?;
    fs::write(out.join("config.txt"), cfg.to_text()).map_err(|e| Error::io(out.join("config.txt"), e))?;
    for r in results {
        let sid = &r.prep.subject_id;
        if let Some(f) = &r.prep.features {
            create_dir(&out.join("features"))?;
            f.write_csv(&out.join("features").join(format!("{sid}.csv")))?;
        }
        let cmp_dir = out.join("cmp").join(sid);
        create_dir(&cmp_dir)?;
        let names = r.prep.cmp.feature_names.join("\n") + "\n";
        fs::write(cmp_dir.join("features.txt"), names).map_err(|e| Error::io(cmp_dir.join("features.txt"), e))?;
        for (name, m) in r.prep.cmp.feature_names.iter().zip(&r.prep.cmp.matrices) {
            write_matrix_csv(&cmp_dir.join(format!("{name}.csv")), m)?;
        }
        create_dir(&out.join("graphs"))?;
        r.prep
            .stream
            .write_jsonl(&out.join("graphs").join(format!("{sid}.jsonl")))?;
        for run in &r.runs {
            let dir = out.join("models").join(run.detector.name());
            create_dir(&dir)?;
            write_json(&dir.join(format!("{sid}.json")), &run.checkpoint)?;
        }
    }
    let scores: Vec<ScoreSeries> = results
        .iter()
        .flat_map(|r| r.runs.iter().map(|x| x.scores.clone()))
        .collect();
    let alerts: Vec<AlertSeries> = results
        .iter()
        .flat_map(|r| r.runs.iter().map(|x| x.alerts.clone()))
        .collect();
    write_scores_csv(&out.join("scores.csv"), &scores)?;
    write_alerts_csv(&out.join("alerts.csv"), &alerts)
}

/// Loads `cmp/<subject>/` directories written by [`write_detect_outputs`].
pub fn load_cmp_dir(dir: &Path, cfg: &PipelineConfig) -> Result<Vec<(String, Cmp)>> {
    let mut subjects: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| Error::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir())
        .collect();
    subjects.sort();
    subjects
        .into_iter()
        .map(|sub| {
            let sid = sub
                .file_name()
                .and_then(|n| n.to_str())
                .ok_or_else(|| Error::invalid(format!("bad subject directory {}", sub.display())))?
                .to_string();
            let list = sub.join("features.txt");
            let names: Vec<String> = fs::read_to_string(&list)
                .map_err(|e| Error::io(&list, e))?
                .lines()
                .filter(|l| !l.trim().is_empty())
                .map(str::to_string)
                .collect();
            let matrices = names
                .iter()
                .map(|n| read_matrix_csv(&sub.join(format!("{n}.csv"))))
                .collect::<Result<Vec<_>>>()?;
            Ok((sid, Cmp::from_matrices(cfg.cmp, names, matrices)?))
        })
        .collect()
}

/// Evaluates every detector found in a scores/alerts pair against labels.
/// Scored days per subject are the number of scored contexts times the
/// context length.
pub fn run_eval(
    scores_path: &Path,
    alerts_path: &Path,
    labels_path: &Path,
    cfg: &PipelineConfig,
) -> Result<Vec<(String, EvalReport)>> {
    let scores = read_scores_csv(scores_path)?;
    let alerts = read_alerts_csv(alerts_path)?;
    let labels = read_labels_csv(labels_path)?;
    let mut detectors: Vec<String> = scores.iter().map(|s| s.detector.clone()).collect();
    detectors.sort();
    detectors.dedup();
    for a in &alerts {
        if !detectors.contains(&a.detector) {
            return Err(Error::invalid(format!(
                "alerts for detector `{}` without scores",
                a.detector
            )));
        }
    }
    detectors
        .into_iter()
        .map(|det| {
            let scored: BTreeMap<String, usize> = scores
                .iter()
                .filter(|s| s.detector == det)
                .map(|s| (s.subject_id.clone(), s.len() * cfg.cmp.context_length))
                .collect();
            let alert_days: BTreeMap<String, Vec<usize>> = alerts
                .iter()
                .filter(|a| a.detector == det)
                .map(|a| (a.subject_id.clone(), a.day_indices()))
                .collect();
            let outcomes = assemble_outcomes(&alert_days, &labels, &scored)?;
            Ok((det, report(&outcomes, &cfg.eval)?))
        })
        .collect()
}

/// Writes `eval_<detector>.json` and `eval_<detector>.csv` for each report.
pub fn write_eval_outputs(out: &Path, reports: &[(String, EvalReport)]) -> Result<()> {
    create_dir(out)?;
    for (det, r) in reports {
        r.write_json(&out.join(format!("eval_{det}.json")))?;
        r.write_csv(&out.join(format!("eval_{det}.csv")))?;
    }
    Ok(())
}

fn collect_csvs(path: &Path, into: &mut Vec<PathBuf>) -> Result<()> {
    if path.is_dir() {
        let mut entries: Vec<PathBuf> = fs::read_dir(path)
            .map_err(|e| Error::io(path, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .collect();
        entries.sort();
        for e in entries {
            collect_csvs(&e, into)?;
        }
    } else if path.extension().is_some_and(|e| e == "csv") {
        into.push(path.to_path_buf());
    } else if !path.exists() {
        return Err(Error::invalid(format!("{} does not exist", path.display())));
    }
    Ok(())
}

/// Renders every CMP CSV under `input` (file or directory tree) to a PGM in
/// `out`, mirroring the relative layout. Returns the written paths.
pub fn run_render(input: &Path, out: &Path, subsequence_length: usize) -> Result<Vec<PathBuf>> {
    let mut files = Vec::new();
    collect_csvs(input, &mut files)?;
    if files.is_empty() {
        return Err(Error::invalid(format!("no CMP CSV files under {}", input.display())));
    }
    let dmax = max_distance(subsequence_length);
    let root = if input.is_dir() {
        input
    } else {
        input.parent().unwrap_or(Path::new(""))
    };
    let mut written = Vec::with_capacity(files.len());
    for f in files {
        let m = read_matrix_csv(&f)?;
        let rel = f.strip_prefix(root).unwrap_or(&f).with_extension("pgm");
        let target = out.join(rel);
        if let Some(parent) = target.parent() {
            create_dir(parent)?;
        }
        write_pgm(&target, &m, dmax)?;
        written.push(target);
    }
    Ok(written)
}

/// Generates a cohort and writes `events.csv` and `labels.csv` into `out`.
pub fn run_synth(spec: &CohortSpec, out: &Path) -> Result<Cohort> {
    let cohort = generate_cohort(spec)?;
    create_dir(out)?;
    write_events_csv(&out.join("events.csv"), &cohort.events)?;
    write_labels_csv(&out.join("labels.csv"), &cohort.truth)?;
    Ok(cohort)
}

/// Reads events and runs detection, writing all artifacts.
pub fn detect_files(events_path: &Path, out: &Path, cfg: &PipelineConfig) -> Result<Vec<SubjectResult>> {
    let events = read_events_csv(events_path).map_err(|e| e.in_stage("read events"))?;
    let results = run_detect(events, cfg)?;
    write_detect_outputs(out, &results, cfg)?;
    Ok(results)
}

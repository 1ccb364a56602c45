use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use cmpgraph::config::PipelineConfig;
use cmpgraph::pipeline;
use cmpgraph::synth::CohortSpec;
use cmpgraph::{Error, Result};

/// Contextual matrix profile graphs for anomaly detection in household sensor data.
#[derive(Parser, Debug)]
#[command(name = "cmpgraph", version)]
struct Cli {
    /// Log progress and per-stage timings to stderr (repeat for more detail).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic cohort: events.csv and labels.csv.
    Synth(SynthArgs),
    /// Run ingest, CMP, graphs, detectors and thresholding.
    Detect(DetectArgs),
    /// Score alerts against labels.
    Eval(EvalArgs),
    /// Render CMP CSVs as PGM heatmaps.
    Render(RenderArgs),
    /// synth, detect, eval and render in one go.
    All(AllArgs),
}

#[derive(Args, Debug)]
struct Overrides {
    /// Pipeline config file (key=value lines).
    #[arg(long)]
    config: Option<PathBuf>,
    /// Override a config key, e.g. `--set detector=gnn`. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
}

#[derive(Args, Debug)]
struct SynthArgs {
    /// Cohort spec file (key=value lines); defaults apply otherwise.
    #[arg(long)]
    spec: Option<PathBuf>,
    /// Override a spec key. Repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args, Debug)]
struct DetectArgs {
    /// Event CSV (subject_id,timestamp,location).
    #[arg(long, required_unless_present = "from_cmp", conflicts_with = "from_cmp")]
    events: Option<PathBuf>,
    /// Start from the `cmp/` directory of an earlier run.
    #[arg(long)]
    from_cmp: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct EvalArgs {
    /// Output directory of `detect`.
    #[arg(long)]
    run: PathBuf,
    #[arg(long)]
    labels: PathBuf,
    /// Where to write reports; defaults to the run directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[command(flatten)]
    overrides: Overrides,
}

#[derive(Args, Debug)]
struct RenderArgs {
    /// A CMP CSV or a directory searched recursively.
    #[arg(long)]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 3)]
    subsequence_length: usize,
}

#[derive(Args, Debug)]
struct AllArgs {
    #[arg(long)]
    spec: Option<PathBuf>,
    #[arg(long)]
    seed: u64,
    #[arg(long)]
    out: PathBuf,
    #[command(flatten)]
    overrides: Overrides,
}

fn read_text(path: &Path) -> Result<String> {
    fs::read_to_string(path).map_err(|e| Error::io(path, e))
}

fn split_override(kv: &str) -> Result<(&str, &str)> {
    kv.split_once('=')
        .map(|(k, v)| (k.trim(), v.trim()))
        .ok_or_else(|| Error::config(kv, "expected KEY=VALUE"))
}

fn load_config(o: &Overrides, fallback: Option<&Path>, seed: Option<u64>) -> Result<PipelineConfig> {
    let path = o.config.as_deref().or(fallback.filter(|p| p.exists()));
    let mut cfg = match path {
        Some(p) => PipelineConfig::parse(&read_text(p)?)?,
        None => PipelineConfig::default(),
    };
    for kv in &o.set {
        let (k, v) = split_override(kv)?;
        cfg.set(k, v)?;
    }
    if let Some(s) = seed {
        cfg.seed = Some(s);
    }
    cfg.validate()?;
    Ok(cfg)
}

fn load_spec(spec: Option<&Path>, set: &[String], seed: Option<u64>) -> Result<CohortSpec> {
    let mut text = match spec {
        Some(p) => read_text(p)?,
        None => String::new(),
    };
    for kv in set {
        let (k, v) = split_override(kv)?;
        text.push_str(&format!("\n{k}={v}"));
    }
    if let Some(s) = seed {
        text.push_str(&format!("\nseed={s}"));
    }
    CohortSpec::parse(&text)
}

fn synth(spec: &CohortSpec, out: &Path) -> Result<()> {
    let cohort = pipeline::run_synth(spec, out).map_err(|e| e.in_stage("synth"))?;
    println!(
        "synth: {} subjects, {} events -> {}",
        cohort.truth.len(),
        cohort.events.len(),
        out.display()
    );
    Ok(())
}

fn detect(events: Option<&Path>, from_cmp: Option<&Path>, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let results = match (events, from_cmp) {
        (Some(ev), _) => pipeline::detect_files(ev, out, cfg)?,
        (None, Some(dir)) => {
            let cmps = pipeline::load_cmp_dir(dir, cfg).map_err(|e| e.in_stage("read cmp"))?;
            let results = pipeline::run_detect_from_cmps(cmps, cfg)?;
            pipeline::write_detect_outputs(out, &results, cfg)?;
            results
        }
        (None, None) => return Err(Error::config("events", "need --events or --from-cmp")),
    };
    let alerts: usize = results
        .iter()
        .flat_map(|r| &r.runs)
        .map(|r| r.alerts.alerts.len())
        .sum();
    println!(
        "detect: {} subjects, {alerts} alerts -> {}",
        results.len(),
        out.display()
    );
    Ok(())
}

fn eval(run: &Path, labels: &Path, out: &Path, cfg: &PipelineConfig) -> Result<()> {
    let reports = pipeline::run_eval(&run.join("scores.csv"), &run.join("alerts.csv"), labels, cfg)
        .map_err(|e| e.in_stage("eval"))?;
    pipeline::write_eval_outputs(out, &reports)?;
    for (det, r) in &reports {
        println!(
            "eval {det}: recall {:.2}% ({}/{}), alert rate {:.2}%, validity {}/{}",
            r.recall_pct, r.detected_events, r.total_events, r.alert_rate_pct, r.validity, r.validity_of
        );
    }
    Ok(())
}

fn render(input: &Path, out: &Path, m: usize) -> Result<()> {
    let written = pipeline::run_render(input, out, m).map_err(|e| e.in_stage("render"))?;
    println!("render: {} heatmaps -> {}", written.len(), out.display());
    Ok(())
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Synth(a) => synth(&load_spec(a.spec.as_deref(), &a.set, a.seed)?, &a.out),
        Command::Detect(a) => {
            let cfg = load_config(&a.overrides, None, Some(a.seed))?;
            detect(a.events.as_deref(), a.from_cmp.as_deref(), &a.out, &cfg)
        }
        Command::Eval(a) => {
            let cfg = load_config(&a.overrides, Some(&a.run.join("config.txt")), None)?;
            eval(&a.run, &a.labels, a.out.as_deref().unwrap_or(&a.run), &cfg)
        }
        Command::Render(a) => render(&a.input, &a.out, a.subsequence_length),
        Command::All(a) => {
            let cfg = load_config(&a.overrides, None, Some(a.seed))?;
            let spec = load_spec(a.spec.as_deref(), &[], None)?;
            let data = a.out.join("data");
            let run = a.out.join("run");
            synth(&spec, &data)?;
            detect(Some(&data.join("events.csv")), None, &run, &cfg)?;
            eval(&run, &data.join("labels.csv"), &run, &cfg)?;
            render(&run.join("cmp"), &run.join("heatmaps"), cfg.cmp.subsequence_length)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    let start = Instant::now();
    match run(cli) {
        Ok(()) => {
            log::info!("done in {:.2} s", start.elapsed().as_secs_f64());
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

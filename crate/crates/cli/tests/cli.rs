use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

const SMALL: [&str; 8] = [
    "--set",
    "n_subjects=2",
    "--set",
    "n_days=90",
    "--set",
    "episodes_per_subject=2",
    "--set",
    "warmup_days=20",
];

fn cmpgraph(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmpgraph"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn read_json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn synth_small(dir: &Path) {
    let mut args = vec!["synth", "--out", p(dir), "--seed", "3"];
    args.extend(SMALL);
    let out = cmpgraph(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
}

fn detect(events: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["detect", "--events", p(events), "--out", p(out), "--seed", "11"];
    args.extend(extra);
    cmpgraph(&args)
}

#[test]
fn synth_is_deterministic() {
    let tmp = TempDir::new().unwrap();
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    synth_small(&a);
    synth_small(&b);
    for f in ["events.csv", "labels.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let labels = fs::read_to_string(a.join("labels.csv")).unwrap();
    assert!(labels.starts_with("subject_id,day_index\n"));
    assert_eq!(labels.lines().count(), 1 + 2 * 2);
}

#[test]
fn bad_spec_names_the_field() {
    let tmp = TempDir::new().unwrap();
    let out = cmpgraph(&["synth", "--out", p(tmp.path()), "--set", "n_days=5"]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("n_days"));
    let spec = tmp.path().join("spec.txt");
    fs::write(&spec, "n_subjects = ten\n").unwrap();
    let out = cmpgraph(&["synth", "--out", p(tmp.path()), "--spec", p(&spec)]);
    assert_eq!(code(&out), 1);
    assert!(stderr(&out).contains("n_subjects"));
}

#[test]
fn usage_errors_exit_one() {
    let tmp = TempDir::new().unwrap();
    assert_eq!(code(&cmpgraph(&["frobnicate"])), 1);
    let missing_seed = cmpgraph(&["detect", "--events", "e.csv", "--out", p(tmp.path())]);
    assert_eq!(code(&missing_seed), 1);
    assert!(stderr(&missing_seed).contains("--seed"));
    let bad_key = detect(Path::new("e.csv"), tmp.path(), &["--set", "gnn.dimm=3"]);
    assert_eq!(code(&bad_key), 1);
    assert!(stderr(&bad_key).contains("gnn.dimm"));
    assert_eq!(code(&cmpgraph(&["--help"])), 0);
}

#[test]
fn data_errors_exit_two() {
    let tmp = TempDir::new().unwrap();
    let out = detect(&tmp.path().join("missing.csv"), &tmp.path().join("o"), &[]);
    assert_eq!(code(&out), 2, "{}", stderr(&out));
    let bad = tmp.path().join("bad.csv");
    fs::write(&bad, "subject_id,timestamp,location\nS1,notatime,kitchen\n").unwrap();
    let out = detect(&bad, &tmp.path().join("o"), &[]);
    assert_eq!(code(&out), 2);
}

#[test]
fn detect_is_deterministic_and_rerunnable() {
    let tmp = TempDir::new().unwrap();
    let data = tmp.path().join("data");
    synth_small(&data);
    let events = data.join("events.csv");
    let set = [
        "--set",
        "detector=cmp_baseline,gnn",
        "--set",
        "gnn.dim=16",
        "--set",
        "gnn.epochs=10",
    ];
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    for dir in [&a, &b] {
        let out = detect(&events, dir, &set);
        assert_eq!(code(&out), 0, "{}", stderr(&out));
    }
    for f in ["alerts.csv", "scores.csv", "config.txt"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let alerts = fs::read_to_string(a.join("alerts.csv")).unwrap();
    assert!(alerts.lines().skip(1).any(|l| l.ends_with(",cmp_baseline")));
    assert!(a.join("models/gnn/S01.json").exists());
    assert!(a.join("graphs/S02.jsonl").exists());
    assert!(a.join("features/S01.csv").exists());

    let c = tmp.path().join("c");
    let saved = a.join("cmp");
    let mut args = vec!["detect", "--from-cmp", p(&saved), "--out", p(&c), "--seed", "11"];
    args.extend(set);
    let out = cmpgraph(&args);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    for f in ["alerts.csv", "scores.csv"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(c.join(f)).unwrap(), "{f}");
    }

    let out = cmpgraph(&["eval", "--run", p(&a), "--labels", p(&data.join("labels.csv"))]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("eval cmp_baseline") && stdout.contains("eval gnn"));
    let report = read_json(&a.join("eval_gnn.json"));
    assert_eq!(report["total_events"], 4);
}

#[test]
fn eval_of_empty_alerts_is_zero() {
    let tmp = TempDir::new().unwrap();
    let run = tmp.path();
    fs::write(
        run.join("scores.csv"),
        "subject_id,context_index,score,detector_name\nA,2,0.5,gnn\nA,3,0.5,gnn\n",
    )
    .unwrap();
    fs::write(
        run.join("alerts.csv"),
        "subject_id,context_index,day_index,score,threshold,detector_name\n",
    )
    .unwrap();
    let labels = run.join("labels.csv");
    fs::write(&labels, "subject_id,day_index\nA,4\n").unwrap();
    let out = cmpgraph(&["eval", "--run", p(run), "--labels", p(&labels)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let report = read_json(&run.join("eval_gnn.json"));
    assert_eq!(report["total_events"], 1);
    assert_eq!(report["recall_pct"], 0.0);
    assert_eq!(report["alert_rate_pct"], 0.0);

    fs::write(&labels, "subject_id,day_index\nB,4\n").unwrap();
    let out = cmpgraph(&["eval", "--run", p(run), "--labels", p(&labels)]);
    assert_eq!(code(&out), 2);
}

#[test]
fn render_scaling() {
    let tmp = TempDir::new().unwrap();
    let cmps = tmp.path().join("cmp");
    fs::create_dir(&cmps).unwrap();
    fs::write(cmps.join("flat.csv"), "1.5,1.5\n1.5,1.5\n").unwrap();
    fs::write(cmps.join("sym.csv"), "0,1,2\n1,0,3\n2,3,0\n").unwrap();
    let out_dir = tmp.path().join("heatmaps");
    let out = cmpgraph(&["render", "--input", p(&cmps), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let pixels = |name: &str| {
        let bytes = fs::read(out_dir.join(name)).unwrap();
        let header_end = bytes.windows(4).position(|w| w == b"255\n").unwrap() + 4;
        bytes[header_end..].to_vec()
    };
    let flat = pixels("flat.pgm");
    assert!(flat.iter().all(|&v| v == flat[0]));
    let sym = pixels("sym.pgm");
    for r in 0..3 {
        assert_eq!(sym[r * 3 + r], 0);
        for c in 0..3 {
            assert_eq!(sym[r * 3 + c], sym[c * 3 + r]);
        }
    }

    fs::write(cmps.join("broken.csv"), "1,x\n").unwrap();
    let out = cmpgraph(&["render", "--input", p(&cmps), "--out", p(&out_dir)]);
    assert_eq!(code(&out), 2);
}

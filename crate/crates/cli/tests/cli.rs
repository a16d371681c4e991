use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use tempfile::TempDir;

fn survmdn(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_survmdn")).args(args).output().expect("binary runs")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, kind: &str, n: &str, seed: &str) -> PathBuf {
    let out = dir.join(format!("sim-{kind}-{seed}"));
    let o = survmdn(&["simulate", "--kind", kind, "--n", n, "--seed", seed, "--out", p(&out)]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn quick_config(dir: &Path) -> PathBuf {
    let cfg = dir.join("config.json");
    fs::write(
        &cfg,
        r#"{"model": {"num_components": 4, "backbone_hidden": [16, 16], "head_hidden": [16]},
            "train": {"learning_rate": 0.003, "max_epochs": 40, "patience": 8}}"#,
    )
    .unwrap();
    cfg
}

fn train(dir: &Path, data: &Path, config: Option<&Path>, seed: &str, name: &str) -> PathBuf {
    let out = dir.join(name);
    let mut args = vec!["train", "--data", p(data), "--time-col", "time", "--event-col", "event"];
    if let Some(c) = config {
        args.extend(["--config", p(c)]);
    }
    args.extend(["--out", p(&out), "--seed", seed]);
    let o = survmdn(&args);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(String::from_utf8_lossy(&o.stdout).contains("validation NLL"));
    out
}

fn manifest_keys(dir: &Path) -> Vec<String> {
    let m: serde_json::Value = serde_json::from_str(&fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap();
    let mut keys: Vec<String> = m.as_object().unwrap().keys().cloned().collect();
    keys.sort();
    keys
}

const MANIFEST_KEYS: [&str; 7] = ["command", "config", "inputs", "outputs", "seeds", "version", "wall_seconds"];

#[test]
fn simulate_outputs() {
    let tmp = TempDir::new().unwrap();
    let out = simulate(tmp.path(), "crossing", "1000", "3");
    let data = fs::read_to_string(out.join("data.csv")).unwrap();
    let mut lines = data.lines();
    assert_eq!(lines.next(), Some("x_0,time,event"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 1000);
    for r in rows.iter().filter(|r| r[2] == 0.0) {
        assert!(r[1] > 0.0 && r[1] <= 2.0);
    }
    let curve = fs::read_to_string(out.join("curve.csv")).unwrap();
    assert!(curve.starts_with("t,S_x0,S_x1\n"));
    let at_one: Vec<f64> = curve
        .lines()
        .find(|l| l.starts_with("1,"))
        .unwrap()
        .split(',')
        .map(|v| v.parse().unwrap())
        .collect();
    assert!((at_one[1] - 0.13534).abs() < 1e-5 && (at_one[2] - 0.13534).abs() < 1e-5);
    assert_eq!(manifest_keys(&out), MANIFEST_KEYS);

    let again = simulate(tmp.path(), "crossing", "1000", "3");
    assert_eq!(out, again);
    let other = tmp.path().join("other");
    survmdn(&["simulate", "--kind", "crossing", "--n", "1000", "--seed", "3", "--out", p(&other)]);
    assert_eq!(fs::read(other.join("data.csv")).unwrap(), data.as_bytes());

    for kind in ["lognormal", "student_t_softplus", "gamma"] {
        let out = simulate(tmp.path(), kind, "50", "1");
        assert!(fs::read_to_string(out.join("curve.csv")).unwrap().starts_with("t,S_x0\n"));
    }
}

#[test]
fn simulate_rejects_bad_flags() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("x");
    assert_eq!(code(&survmdn(&["simulate", "--kind", "crossing", "--n", "0", "--out", p(&out)])), 2);
    assert_eq!(code(&survmdn(&["simulate", "--kind", "weibull", "--n", "5", "--out", p(&out)])), 2);
}

#[test]
fn train_contract_and_determinism() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate(tmp.path(), "crossing", "800", "1");
    let data = sim.join("data.csv");
    let a = train(tmp.path(), &data, None, "7", "a");
    let b = train(tmp.path(), &data, None, "7", "b");
    let model_a = fs::read(a.join("model.json")).unwrap();
    assert_eq!(model_a, fs::read(b.join("model.json")).unwrap());
    assert_eq!(manifest_keys(&a), MANIFEST_KEYS);

    let history = fs::read_to_string(a.join("history.csv")).unwrap();
    let mut lines = history.lines();
    assert_eq!(lines.next(), Some("epoch,train_nll,val_nll,best_val_nll,seconds"));
    let best: Vec<f64> = lines.map(|l| l.split(',').nth(3).unwrap().parse().unwrap()).collect();
    assert!(best.len() > 1);
    assert!(best.windows(2).all(|w| w[1] <= w[0]));
    // the history is reproducible apart from timings
    let strip = |h: &str| h.lines().map(|l| l.rsplit_once(',').unwrap().0.to_owned()).collect::<Vec<_>>();
    assert_eq!(strip(&history), strip(&fs::read_to_string(b.join("history.csv")).unwrap()));

    let c = train(tmp.path(), &data, None, "8", "c");
    assert_ne!(model_a, fs::read(c.join("model.json")).unwrap());
}

#[test]
fn train_usage_errors() {
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("t");
    let o = survmdn(&["train", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));

    let sim = simulate(tmp.path(), "crossing", "100", "1");
    let data = sim.join("data.csv");
    let bad = tmp.path().join("bad.json");
    fs::write(&bad, r#"{"train": {"learning_rate": -1}}"#).unwrap();
    let o = survmdn(&["train", "--data", p(&data), "--config", p(&bad), "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    let o = survmdn(&["train", "--data", p(&data), "--time-col", "nope", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
    let o = survmdn(&["train", "--data", p(&data), "--splits", "0.5,0.5", "--out", p(&out)]);
    assert_eq!(code(&o), 2);
}

#[test]
fn evaluate_and_curves() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate(tmp.path(), "crossing", "600", "2");
    let data = sim.join("data.csv");
    let cfg = quick_config(tmp.path());
    let model = train(tmp.path(), &data, Some(&cfg), "1", "m").join("model.json");

    let eval = |name: &str, extra: &[&str]| {
        let out = tmp.path().join(name);
        let mut args = vec!["evaluate", "--model", p(&model), "--data", p(&data), "--out", p(&out)];
        args.extend(extra);
        let o = survmdn(&args);
        (code(&o), out)
    };
    let (c1, e1) = eval("e1", &[]);
    let (c2, e2) = eval("e2", &[]);
    assert_eq!((c1, c2), (0, 0));
    let j1 = fs::read(e1.join("metrics.json")).unwrap();
    assert_eq!(j1, fs::read(e2.join("metrics.json")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&j1).unwrap();
    assert_eq!(report["levels"].as_array().unwrap().len(), 3);
    assert_eq!(manifest_keys(&e1), MANIFEST_KEYS);
    let (c3, e3) = eval("e3", &["--levels", "1e-8"]);
    assert_eq!(c3, 0);
    let one: serde_json::Value = serde_json::from_slice(&fs::read(e3.join("metrics.json")).unwrap()).unwrap();
    assert_eq!(one["levels"].as_array().unwrap().len(), 1);

    // no events: concordance is undefined
    let censored = tmp.path().join("censored.csv");
    fs::write(&censored, "x_0,time,event\n0,1.0,0\n1,2.0,0\n0,0.5,0\n").unwrap();
    let out = tmp.path().join("e4");
    let o = survmdn(&["evaluate", "--model", p(&model), "--data", p(&censored), "--out", p(&out)]);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));

    let inputs = tmp.path().join("inputs.csv");
    fs::write(&inputs, "x_0\n1\n").unwrap();
    let curves = |name: &str, min: &str, n: &str| {
        let out = tmp.path().join(name);
        let o = survmdn(&[
            "curves", "--model", p(&model), "--grid-min", min, "--grid-max", "2", "--grid-points", n, "--inputs",
            p(&inputs), "--out", p(&out),
        ]);
        (code(&o), out)
    };
    let (c, out) = curves("c1", "1e-6", "3");
    assert_eq!(c, 0);
    let csv = fs::read_to_string(out.join("curves.csv")).unwrap();
    let rows: Vec<Vec<f64>> = csv.lines().skip(1).map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 3);
    assert!(rows.iter().all(|r| r.len() == 2));
    assert!(rows[0][1] >= 1.0 - 1e-4);
    let (_, out) = curves("c2", "0.01", "200");
    let csv = fs::read_to_string(out.join("curves.csv")).unwrap();
    let s: Vec<f64> = csv.lines().skip(1).map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert!(s.windows(2).all(|w| w[1] <= w[0]));
    assert_eq!(curves("c3", "0", "3").0, 2);
    assert_eq!(curves("c4", "-1", "3").0, 2);
}

#[test]
fn gradcheck_exit_codes() {
    assert_eq!(code(&survmdn(&["gradcheck"])), 0);
    assert_eq!(code(&survmdn(&["gradcheck", "--base", "generalized_logistic"])), 0);
    let o = survmdn(&["gradcheck", "--corrupt-gradient"]);
    assert_eq!(code(&o), 4);
    assert!(String::from_utf8_lossy(&o.stdout).contains("worst"));
    assert_eq!(code(&survmdn(&["gradcheck", "--base", "cauchy"])), 2);
    let tmp = TempDir::new().unwrap();
    let out = tmp.path().join("g");
    assert_eq!(code(&survmdn(&["gradcheck", "--k", "1", "--out", p(&out)])), 0);
    assert_eq!(manifest_keys(&out), MANIFEST_KEYS);
}

#[test]
fn random_search_writes_ranked_trials() {
    let tmp = TempDir::new().unwrap();
    let sim = simulate(tmp.path(), "crossing", "400", "4");
    let cfg = tmp.path().join("search.json");
    fs::write(
        &cfg,
        r#"{"search": {"trials": 3, "hidden_size": [4, 8], "num_components": [2, 3], "max_epochs": 5, "patience": 2}}"#,
    )
    .unwrap();
    let out = tmp.path().join("rs");
    let o = survmdn(&[
        "random-search", "--data", p(&sim.join("data.csv")), "--config", p(&cfg), "--out", p(&out), "--seed", "2",
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let trials = fs::read_to_string(out.join("trials.csv")).unwrap();
    assert_eq!(trials.lines().count(), 4);
    for f in ["model.json", "history.csv", "test_metrics.json", "manifest.json"] {
        assert!(out.join(f).exists(), "{f}");
    }
}

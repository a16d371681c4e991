use std::fmt;
use std::fs::File;
use std::path::Path;

use rand::Rng;
use serde_json::json;
use survmdn::autodiff::GradCheckOptions;
use survmdn::data::{
    ground_truth_survival, load_csv, parse_feature_rows, simulate, split, write_csv, SimKind, SimSpec,
    SurvivalRecord,
};
use survmdn::mdn::{MdnConfig, SurvivalMdn, TrainedModel};
use survmdn::metrics::{evaluate, MetricsReport, MixturePredictor, DEFAULT_GRID, DEFAULT_LEVELS};
use survmdn::rng::{SeedStreams, Stream};
use survmdn::training::{random_search, train, RunConfig, SearchSpace, StopReason, TrainOutcome};
use survmdn::Error;

use crate::manifest::Run;
use crate::{Command, CurvesArgs, EvaluateArgs, GradcheckArgs, SimulateArgs, TrainArgs};

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
    GradCheck(String),
}

impl CliError {
    pub fn usage(msg: impl Into<String>) -> Self {
        CliError::Usage(msg.into())
    }

    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
            CliError::GradCheck(_) => 4,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) | CliError::Numerical(m) | CliError::GradCheck(m) => f.write_str(m),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::Numerical(_) | Error::UndefinedMetric(_) | Error::Autodiff(_) => CliError::Numerical(e.to_string()),
            _ => CliError::Usage(e.to_string()),
        }
    }
}

type Result<T> = std::result::Result<T, CliError>;

pub fn run(command: Command) -> Result<()> {
    match command {
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Simulate(a) => cmd_simulate(a),
        Command::Curves(a) => cmd_curves(a),
        Command::Gradcheck(a) => cmd_gradcheck(a),
        Command::RandomSearch(a) => cmd_random_search(a),
    }
}

fn to_value<T: serde::Serialize>(v: &T) -> serde_json::Value {
    serde_json::to_value(v).expect("serializable")
}

fn parse_list(s: &str, what: &str) -> Result<Vec<f64>> {
    s.split(',')
        .map(|p| {
            p.trim()
                .parse::<f64>()
                .map_err(|_| CliError::usage(format!("invalid {what} entry '{p}'")))
        })
        .collect()
}

fn parse_fractions(s: &str) -> Result<[f64; 3]> {
    let v = parse_list(s, "split")?;
    <[f64; 3]>::try_from(v).map_err(|_| CliError::usage("--splits needs exactly three fractions"))
}

fn load_config(path: Option<&Path>, seed: Option<u64>) -> Result<RunConfig> {
    let mut cfg = match path {
        Some(p) => {
            let s = std::fs::read_to_string(p).map_err(|e| CliError::usage(format!("cannot read {}: {e}", p.display())))?;
            RunConfig::from_json(&s)?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = seed {
        cfg.train.seed = seed;
    }
    Ok(cfg)
}

fn prepare(args: &TrainArgs, run: &mut Run) -> Result<(RunConfig, survmdn::data::Splits)> {
    let cfg = load_config(args.config.as_deref(), args.seed)?;
    if let Some(p) = &args.config {
        run.input(p);
    }
    let ds = load_csv(&args.data.data, &args.data.time_col, &args.data.event_col)?;
    run.input(&args.data.data);
    let splits = split(&ds, parse_fractions(&args.splits)?, cfg.train.seed)?;
    Ok((cfg, splits))
}

fn write_outcome(run: &mut Run, outcome: &TrainOutcome) -> Result<()> {
    run.write("model.json", &outcome.model.to_json()?)?;
    run.write("history.csv", &outcome.history_csv())?;
    Ok(())
}

fn report_stop(outcome: &TrainOutcome) {
    match &outcome.stop {
        StopReason::NonFinite { epoch, message } => {
            eprintln!("warning: training stopped at epoch {epoch}: {message}; kept the best checkpoint")
        }
        StopReason::EarlyStopped | StopReason::MaxEpochs => {}
    }
}

fn cmd_train(args: TrainArgs) -> Result<()> {
    let mut run = Run::start("train", Some(&args.out))?;
    let (cfg, splits) = prepare(&args, &mut run)?;
    let outcome = train(&splits, &cfg.model, &cfg.train)?;
    report_stop(&outcome);
    write_outcome(&mut run, &outcome)?;
    println!("best validation NLL {} at epoch {}", outcome.best_val_nll(), outcome.model.metadata.best_epoch.unwrap_or(0));
    run.finish(to_value(&cfg), json!({ "seed": cfg.train.seed }))
}

fn cmd_random_search(args: TrainArgs) -> Result<()> {
    let mut run = Run::start("random-search", Some(&args.out))?;
    let (cfg, splits) = prepare(&args, &mut run)?;
    let space = cfg.search.clone().unwrap_or_else(SearchSpace::default);
    let report = random_search(&space, &splits, cfg.train.seed)?;
    let mut table = String::from("rank,trial,best_val_nll,epochs,error,config\n");
    for (rank, t) in report.trials.iter().enumerate() {
        let nll = t.best_val_nll.map_or(String::new(), |v| v.to_string());
        let cfg_json = serde_json::to_string(&json!({ "model": t.model, "train": t.train })).expect("serializable");
        table.push_str(&format!(
            "{},{},{},{},\"{}\",\"{}\"\n",
            rank + 1,
            t.index,
            nll,
            t.epochs_run,
            t.error.clone().unwrap_or_default().replace('"', "'"),
            cfg_json.replace('"', "\"\"")
        ));
    }
    run.write("trials.csv", &table)?;
    let best = report
        .best
        .ok_or_else(|| CliError::Numerical("every search trial failed".into()))?;
    write_outcome(&mut run, &best)?;
    let pred = MixturePredictor::new(&best.model, &splits.test.records)?;
    let metrics = evaluate(&splits.test.records, &pred, &DEFAULT_LEVELS, DEFAULT_GRID)?;
    run.write("test_metrics.json", &metrics.to_json()?)?;
    println!("best validation NLL {}", best.best_val_nll());
    print!("{}", metrics.to_table());
    run.finish(
        json!({ "search": space, "base": cfg }),
        json!({ "seed": cfg.train.seed }),
    )
}

fn cmd_evaluate(args: EvaluateArgs) -> Result<()> {
    let mut run = Run::start("evaluate", Some(&args.out))?;
    let levels = parse_list(&args.levels, "level")?;
    let model = TrainedModel::load(&args.model)?;
    run.input(&args.model);
    let ds = load_csv(&args.data.data, &args.data.time_col, &args.data.event_col)?;
    run.input(&args.data.data);
    let pred = MixturePredictor::new(&model, &ds.records)?;
    let report: MetricsReport = evaluate(&ds.records, &pred, &levels, args.grid)?;
    run.write("metrics.json", &report.to_json()?)?;
    run.write("metrics.txt", &report.to_table())?;
    print!("{}", report.to_table());
    run.finish(json!({ "levels": levels, "grid": args.grid }), json!({}))
}

fn cmd_simulate(args: SimulateArgs) -> Result<()> {
    let mut run = Run::start("simulate", Some(&args.out))?;
    let spec = SimSpec {
        kind: args.kind,
        n: args.n,
        seed: args.seed,
    };
    let ds = simulate(&spec)?;
    let mut buf = Vec::new();
    write_csv(&ds, &mut buf)?;
    run.write("data.csv", &String::from_utf8(buf).expect("csv is utf-8"))?;
    run.write("curve.csv", &truth_curve(args.kind)?)?;
    println!(
        "{} records, censoring fraction {:.4}",
        ds.len(),
        ds.censoring_fraction()
    );
    run.finish(to_value(&spec), json!({ "seed": args.seed }))
}

fn truth_curve(kind: SimKind) -> Result<String> {
    let groups = kind.groups();
    let mut s = String::from("t");
    for x in groups {
        s.push_str(&format!(",S_x{x}"));
    }
    s.push('\n');
    let hi = kind.censoring_max();
    for i in 0..=100 {
        let t = hi * i as f64 / 100.0;
        s.push_str(&t.to_string());
        for &x in groups {
            s.push_str(&format!(",{}", ground_truth_survival(kind, x, t)?));
        }
        s.push('\n');
    }
    Ok(s)
}

fn cmd_curves(args: CurvesArgs) -> Result<()> {
    if !(args.grid_min > 0.0) || !args.grid_min.is_finite() {
        return Err(CliError::usage("--grid-min must be positive"));
    }
    if !(args.grid_max >= args.grid_min) || !args.grid_max.is_finite() {
        return Err(CliError::usage("--grid-max must be finite and at least --grid-min"));
    }
    if args.grid_points == 0 {
        return Err(CliError::usage("--grid-points must be at least 1"));
    }
    let mut run = Run::start("curves", Some(&args.out))?;
    let model = TrainedModel::load(&args.model)?;
    run.input(&args.model);
    let file = File::open(&args.inputs).map_err(|e| CliError::usage(format!("cannot read {}: {e}", args.inputs.display())))?;
    let (_, rows) = parse_feature_rows(file)?;
    run.input(&args.inputs);
    let refs: Vec<&[f64]> = rows.iter().map(Vec::as_slice).collect();
    let mixes = model.mixtures(&refs)?;
    let mut s = String::from("t");
    for j in 0..rows.len() {
        s.push_str(&format!(",S_{j}"));
    }
    s.push('\n');
    let n = args.grid_points;
    for i in 0..n {
        let t = if n == 1 {
            args.grid_min
        } else {
            args.grid_min + (args.grid_max - args.grid_min) * i as f64 / (n - 1) as f64
        };
        s.push_str(&t.to_string());
        for m in &mixes {
            s.push_str(&format!(",{}", m.survival(t)));
        }
        s.push('\n');
    }
    run.write("curves.csv", &s)?;
    run.finish(
        json!({ "grid_min": args.grid_min, "grid_max": args.grid_max, "grid_points": n }),
        json!({}),
    )
}

fn cmd_gradcheck(args: GradcheckArgs) -> Result<()> {
    let mut run = Run::start("gradcheck", args.out.as_deref())?;
    let cfg = MdnConfig {
        num_components: args.k,
        backbone_hidden: vec![args.hidden; 3],
        head_hidden: vec![args.hidden; 2],
        base: args.base,
        dropout: args.dropout,
        batch_norm: args.batch_norm,
        ..MdnConfig::default()
    };
    if args.n == 0 || args.dim == 0 {
        return Err(CliError::usage("--n and --dim must be at least 1"));
    }
    let seeds = SeedStreams::new(args.seed);
    let mut init = seeds.rng(Stream::Init);
    let mut mdn = SurvivalMdn::new(args.dim, &cfg, &mut init)?;
    // move off the symmetric initialization so every path carries gradient
    mdn.perturb_params(&mut init, 0.3);
    let batch = random_batch(&seeds, args.n, args.dim);
    let opts = GradCheckOptions {
        corrupt_first: args.corrupt_gradient,
        ..GradCheckOptions::default()
    };
    let report = mdn.gradient_check(&batch, &opts)?;
    let worst = report
        .worst_entry()
        .map(|e| format!("{}[{}] analytic {:e} numeric {:e}", e.tensor, e.offset, e.analytic, e.numeric))
        .unwrap_or_else(|| "none".into());
    let summary = format!(
        "max relative error {:.3e} over {} parameters (tolerance {:e}); worst {}",
        report.max_rel_error,
        report.entries.len(),
        report.tolerance,
        worst
    );
    if args.out.is_some() {
        run.write(
            "gradcheck.json",
            &format!(
                "{}\n",
                serde_json::to_string_pretty(&json!({
                    "passed": report.passed,
                    "max_rel_error": report.max_rel_error,
                    "parameters": report.entries.len(),
                    "worst": worst,
                }))
                .expect("serializable")
            ),
        )?;
    }
    run.finish(to_value(&cfg), json!({ "seed": args.seed }))?;
    if report.passed {
        println!("PASS {summary}");
        Ok(())
    } else {
        println!("FAIL {summary}");
        Err(CliError::GradCheck(format!("gradient check failed: {summary}")))
    }
}

fn random_batch(seeds: &SeedStreams, n: usize, dim: usize) -> Vec<SurvivalRecord> {
    let mut rng = seeds.rng(Stream::Data);
    (0..n)
        .map(|_| SurvivalRecord {
            features: (0..dim).map(|_| rng.random_range(-2.0..2.0)).collect(),
            time: rng.random_range(0.05..3.05),
            event: rng.random_bool(0.6),
        })
        .collect()
}


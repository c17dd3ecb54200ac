//! The `sigreadout` command line.
//!
//! Every subcommand takes `--config <json> --out <dir> [--seed N] [--set k=v]...`.
//! Results go to files under `--out`; logs go to standard error.
//! Exit codes: 0 success, 2 usage or config error, 3 data error, 4 internal error.

use std::fs;
use std::io::Write as _;
use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use serde::{Deserialize, Serialize};
use serde_json::Value;

use crate::classify::{lda_fit, lda_project, CovarianceMode, ModelDocument};
use crate::config::{apply_override, sim_config_from_value};
use crate::error::{Error, Result};
use crate::io::{load_bundle, save_bundle, save_features, FeatureBundle};
use crate::metrics::{confusion, eom_confusion, FidelityReport};
use crate::pipeline::{
    post_select, run_experiment, train_method, window_sweep, ExperimentConfig, FeatureSpec,
    FitSettings, Method, SearchSpace, Target, TrainedMethod,
};
use crate::sim::simulate_traces;
use crate::traces::TraceSet;

#[derive(Debug, Parser)]
#[command(
    name = "sigreadout",
    version,
    about = "Signature-based qubit readout discrimination"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct CommonArgs {
    /// JSON config file.
    #[arg(long)]
    pub config: PathBuf,
    /// Output directory (created if missing).
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the config's seed.
    #[arg(long)]
    pub seed: Option<u64>,
    /// `key.path=value` override, applied in order.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    pub overrides: Vec<String>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Simulate records into a trace bundle.
    Simulate(CommonArgs),
    /// Turn a bundle into a feature matrix.
    Featurize(CommonArgs),
    /// Fit one method on a bundle and write `model.json`.
    Train(CommonArgs),
    /// Score a saved model on a bundle.
    Evaluate(CommonArgs),
    /// Repeat the protocol over several window lengths.
    Sweep(CommonArgs),
    /// LDA projection of signature features, as plot-ready CSV.
    Project(CommonArgs),
    /// Run the repeated protocol and write a fidelity table.
    Report(CommonArgs),
}

/// Process exit code for an error.
pub fn exit_code(err: &Error) -> i32 {
    match err {
        Error::Config { .. } | Error::InvalidInput(_) => 2,
        Error::Io { .. }
        | Error::SizeMismatch { .. }
        | Error::Unsupported { .. }
        | Error::Format { .. }
        | Error::Json(_)
        | Error::Csv(_) => 3,
    }
}

/// Parses arguments, runs, and returns the exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .try_init();
    match std::panic::catch_unwind(|| run(&cli.command)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            log::error!("{e}");
            eprintln!("error: {e}");
            exit_code(&e)
        }
        Err(_) => 4,
    }
}

pub fn run(command: &Command) -> Result<()> {
    match command {
        Command::Simulate(a) => cmd_simulate(a),
        Command::Featurize(a) => cmd_featurize(a),
        Command::Train(a) => cmd_train(a),
        Command::Evaluate(a) => cmd_evaluate(a),
        Command::Sweep(a) => cmd_sweep(a),
        Command::Project(a) => cmd_project(a),
        Command::Report(a) => cmd_report(a),
    }
}

/// Reads the config and applies `--set` overrides. Problems here are config errors.
fn load_config(args: &CommonArgs) -> Result<Value> {
    let text = fs::read_to_string(&args.config)
        .map_err(|e| Error::config("--config", format!("{}: {e}", args.config.display())))?;
    let mut value: Value = serde_json::from_str(&text)
        .map_err(|e| Error::config("--config", format!("{}: {e}", args.config.display())))?;
    for spec in &args.overrides {
        apply_override(&mut value, spec)?;
    }
    Ok(value)
}

fn parse<T: for<'de> Deserialize<'de>>(value: Value) -> Result<T> {
    serde_json::from_value(value).map_err(|e| Error::config("--config", e.to_string()))
}

fn out_dir(args: &CommonArgs) -> Result<&Path> {
    fs::create_dir_all(&args.out).map_err(|e| Error::io(&args.out, e))?;
    Ok(&args.out)
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let mut text = serde_json::to_string_pretty(value)?;
    text.push('\n');
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    fs::write(path, text).map_err(|e| Error::io(path, e))
}

fn cmd_simulate(args: &CommonArgs) -> Result<()> {
    let mut value = load_config(args)?;
    let n_per_state = match value.as_object_mut().and_then(|o| o.remove("n_per_state")) {
        None => 1000,
        Some(v) => v
            .as_u64()
            .filter(|&n| n > 0)
            .ok_or_else(|| Error::config("n_per_state", "must be a positive integer"))?
            as usize,
    };
    let mut cfg = sim_config_from_value(value)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let traces = simulate_traces(&cfg, n_per_state)?;
    let out = out_dir(args)?;
    save_bundle(&traces, out)?;
    let mut echo = serde_json::to_value(&cfg)?;
    echo["n_per_state"] = n_per_state.into();
    write_json(&out.join("config.json"), &echo)?;
    log::info!("wrote {} records to {}", traces.n_traces, out.display());
    Ok(())
}

fn default_method() -> Method {
    Method::SigRf
}
fn default_depth() -> usize {
    5
}
fn yes() -> bool {
    true
}

/// Shared by `featurize`, `train` and `project`.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct BundleFeatureConfig {
    bundle: PathBuf,
    #[serde(default = "default_method")]
    method: Method,
    #[serde(default)]
    window: Option<usize>,
    #[serde(default = "default_depth")]
    sig_depth: usize,
    #[serde(default = "yes")]
    time_augment: bool,
    #[serde(default)]
    post_select: bool,
    #[serde(default)]
    target: Target,
    #[serde(default)]
    search: SearchSpace,
    #[serde(default)]
    gmm_covariance: CovarianceMode,
    #[serde(default)]
    seed: u64,
}

impl BundleFeatureConfig {
    fn load(&self) -> Result<TraceSet> {
        let traces = load_bundle(&self.bundle)?;
        let traces = if self.post_select {
            post_select(&traces)?.0
        } else {
            traces
        };
        if traces.is_empty() {
            return Err(Error::invalid("no records to work with"));
        }
        Ok(traces)
    }

    fn window(&self, traces: &TraceSet) -> Result<usize> {
        let w = self.window.unwrap_or(traces.n_samples);
        if w == 0 || w > traces.n_samples {
            return Err(Error::config(
                "window",
                format!("must lie in 1..={}, got {w}", traces.n_samples),
            ));
        }
        Ok(w)
    }
}

fn cmd_featurize(args: &CommonArgs) -> Result<()> {
    let cfg: BundleFeatureConfig = parse(load_config(args)?)?;
    let traces = cfg.load()?;
    let window = cfg.window(&traces)?;
    let spec = FeatureSpec::learn(cfg.method, &traces, window, cfg.sig_depth, cfg.time_augment)?;
    let features = spec.featurize(&traces)?;
    let out = out_dir(args)?;
    save_features(
        &FeatureBundle {
            features,
            n_states: traces.n_states,
            prepared: traces.prepared.clone(),
            final_state: traces.final_state.clone(),
            spec: Some(spec),
        },
        out,
    )?;
    Ok(())
}

fn cmd_train(args: &CommonArgs) -> Result<()> {
    let mut cfg: BundleFeatureConfig = parse(load_config(args)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    let traces = cfg.load()?;
    let window = cfg.window(&traces)?;
    let all: Vec<usize> = (0..traces.n_traces).collect();
    let settings = FitSettings {
        search: &cfg.search,
        gmm_covariance: cfg.gmm_covariance,
        search_seed: crate::rng::derive_seed(cfg.seed, 0),
        forest_seed: crate::rng::derive_seed(cfg.seed, 1),
    };
    let trained = train_method(
        cfg.method,
        &traces,
        cfg.target,
        window,
        cfg.sig_depth,
        cfg.time_augment,
        &all,
        &settings,
    )?;
    write_json(
        &out_dir(args)?.join("model.json"),
        &ModelDocument::new(trained),
    )
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct EvaluateConfig {
    bundle: PathBuf,
    model: PathBuf,
    #[serde(default)]
    post_select: bool,
}

#[derive(Debug, Serialize)]
struct EvaluateReport {
    target: Target,
    n_records: usize,
    confusion: Vec<Vec<u64>>,
    fidelity: FidelityReport,
    baseline: Option<FidelityReport>,
}

fn cmd_evaluate(args: &CommonArgs) -> Result<()> {
    let cfg: EvaluateConfig = parse(load_config(args)?)?;
    let text = fs::read_to_string(&cfg.model).map_err(|e| Error::io(&cfg.model, e))?;
    let doc: ModelDocument<TrainedMethod> = serde_json::from_str(&text)?;
    doc.check_version()?;
    let trained = doc.model;
    let traces = load_bundle(&cfg.bundle)?;
    let traces = if cfg.post_select {
        post_select(&traces)?.0
    } else {
        traces
    };
    if traces.is_empty() {
        return Err(Error::invalid("no records to evaluate"));
    }
    let pred = trained.predict(&traces)?;
    let truth = trained.target.labels(&traces)?;
    let k = traces.n_states;
    let (cm, baseline) = match trained.target {
        Target::Assignment => (confusion(&pred, &truth, k)?, None),
        Target::Eom => {
            let base = eom_confusion(&traces.prepared, &truth, k)?;
            (
                eom_confusion(&pred, &truth, k)?,
                Some(FidelityReport::from_reps(&[base], true)?),
            )
        }
    };
    let report = EvaluateReport {
        target: trained.target,
        n_records: traces.n_traces,
        confusion: cm.counts.clone(),
        fidelity: FidelityReport::from_reps(&[cm], trained.target == Target::Eom)?,
        baseline,
    };
    write_json(&out_dir(args)?.join("evaluation.json"), &report)
}

fn experiment_config(args: &CommonArgs) -> Result<ExperimentConfig> {
    let mut cfg: ExperimentConfig = parse(load_config(args)?)?;
    if let Some(seed) = args.seed {
        cfg.seed = seed;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn cmd_sweep(args: &CommonArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    if cfg.windows.is_empty() {
        return Err(Error::config("windows", "a sweep needs a window list"));
    }
    let report = window_sweep(&cfg, &cfg.windows)?;
    let out = out_dir(args)?;
    write_json(&out.join("report.json"), &report)?;
    write_text(&out.join("table.txt"), &report.render_table())?;
    let mut csv = csv::Writer::from_path(out.join("curves.csv"))?;
    csv.write_record(["window", "method", "mean_infidelity", "std"])?;
    for r in &report.results {
        csv.write_record([
            r.window.to_string(),
            r.method.name().to_string(),
            r.fidelity.mean.to_string(),
            r.fidelity.std.to_string(),
        ])?;
    }
    csv.flush()
        .map_err(|e| Error::io(out.join("curves.csv"), e))
}

fn cmd_report(args: &CommonArgs) -> Result<()> {
    let cfg = experiment_config(args)?;
    let report = run_experiment(&cfg)?;
    let out = out_dir(args)?;
    write_json(&out.join("report.json"), &report)?;
    let table = report.render_table();
    write_text(&out.join("table.txt"), &table)?;
    let _ = std::io::stderr().write_all(table.as_bytes());
    Ok(())
}

fn cmd_project(args: &CommonArgs) -> Result<()> {
    let mut value = load_config(args)?;
    // the projection is always LDA on signature features
    if let Some(obj) = value.as_object_mut() {
        match obj.remove("method") {
            None => {}
            Some(Value::String(m)) if m == "lda" => {}
            Some(other) => {
                return Err(Error::config(
                    "method",
                    format!("project supports \"lda\", got {other}"),
                ))
            }
        }
    }
    let cfg: BundleFeatureConfig = parse(value)?;
    let traces = cfg.load()?;
    let window = cfg.window(&traces)?;
    let spec = FeatureSpec::learn(
        Method::SigRf,
        &traces,
        window,
        cfg.sig_depth,
        cfg.time_augment,
    )?;
    let x = spec.featurize(&traces)?;
    let model = lda_fit(&x, &traces.prepared)?;
    let k = model.directions.len().min(2);
    let proj = lda_project(&model, &x, k)?;
    let out = out_dir(args)?;
    let mut csv = csv::Writer::from_path(out.join("projection.csv"))?;
    csv.write_record(["x", "y", "prepared", "final"])?;
    for (r, p) in proj.rows().enumerate() {
        let y = if k == 2 { p[1] } else { 0.0 };
        csv.write_record([
            p[0].to_string(),
            y.to_string(),
            traces.prepared[r].to_string(),
            traces.final_state[r]
                .map(|l| l.to_string())
                .unwrap_or_default(),
        ])?;
    }
    csv.flush()
        .map_err(|e| Error::io(out.join("projection.csv"), e))?;
    write_json(&out.join("lda.json"), &ModelDocument::new(model))
}
